#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "famc/errors.hpp"
#include "famc/link.hpp"
#include "famc/simulate.hpp"

using namespace famc;

TEST(MakeSampling, UniformIsFlat) {
  const auto d = make_sampling(SamplingKind::uniform, 4, 5, 1.0, 0);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 5; ++c) EXPECT_NEAR(d.prob(r, c), 0.05, 1e-15);
  EXPECT_NEAR(d.mu(), 1.0, 1e-12);
}

TEST(MakeSampling, SkewOneProductEqualsUniform) {
  const auto d = make_sampling(SamplingKind::product, 6, 7, 1.0, 3);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 7; ++c) EXPECT_NEAR(d.prob(r, c), 1.0 / 42, 1e-15);
  EXPECT_NEAR(d.mu(), 1.0, 1e-12);
}

TEST(MakeSampling, ReportedConstantsMatchBruteForce) {
  const int m1 = 8, m2 = 11;
  const auto d = make_sampling(SamplingKind::product, m1, m2, 4.0, 9);
  double total = 0.0, lo = 1.0, worst = 0.0;
  std::vector<double> rows(m1, 0.0), cols(m2, 0.0);
  for (int r = 0; r < m1; ++r)
    for (int c = 0; c < m2; ++c) {
      const double p = d.prob(r, c);
      total += p;
      lo = std::min(lo, p);
      rows[r] += p;
      cols[c] += p;
    }
  for (double v : rows) worst = std::max(worst, v);
  for (double v : cols) worst = std::max(worst, v);
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_GT(lo, 0.0);
  EXPECT_NEAR(d.mu(), 1.0 / (m1 * m2 * lo), 1e-12);
  EXPECT_NEAR(d.l_c(), worst * std::min(m1, m2), 1e-12);
  EXPECT_GT(d.mu(), 1.0);
}

TEST(MakeSampling, RejectsSkewBelowOne) {
  EXPECT_THROW(make_sampling(SamplingKind::product, 3, 3, 0.5, 0), InvalidArgument);
}

TEST(SpectrumWeights, DefaultAndGeometric) {
  EXPECT_EQ(spectrum_weights(5), (std::vector<double>{2, 1, 0.5, 0.25, 0.1}));
  EXPECT_EQ(spectrum_weights(3), (std::vector<double>{1, 0.5, 0.25}));
}

TEST(MakeGroundTruth, ZeroScaleIsZero) {
  const auto t = make_ground_truth(10, 12, 3, 5, 0.0, 1);
  ASSERT_EQ(t.size(), 2u);
  for (const auto& x : t) EXPECT_EQ(x.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MakeGroundTruth, ExactRankAndSingularValues) {
  const int m1 = 30, m2 = 40;
  const auto t = make_ground_truth(m1, m2, 2, 5, 1.0, 7);
  const Vector s = Eigen::JacobiSVD<Matrix>(t[0]).singularValues();
  int rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k) rank += s[k] > 1e-8 * s[0];
  EXPECT_EQ(rank, 5);
  const auto alpha = spectrum_weights(5);
  const double scale = std::sqrt(static_cast<double>(m1) * m2);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(s[k], scale * alpha[k], 1e-10 * scale);
}

TEST(MakeGroundTruth, RankTooLargeThrows) {
  EXPECT_THROW(make_ground_truth(3, 4, 2, 5, 1.0, 0), InvalidArgument);
}

TEST(MakeGroundTruth, DeterministicAndClassesDiffer) {
  const auto a = make_ground_truth(9, 8, 4, 3, 1.0, 42);
  const auto b = make_ground_truth(9, 8, 4, 3, 1.0, 42);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(a[j], b[j]);
  EXPECT_GT((a[0] - a[1]).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(MakeGroundTruth, SupNormStableAcrossSizes) {
  auto mean_sup = [](int m1, int m2) {
    double s = 0.0;
    for (int seed = 0; seed < 20; ++seed)
      s += make_ground_truth(m1, m2, 2, 5, 1.0, 500 + seed)[0].cwiseAbs().maxCoeff();
    return s / 20;
  };
  const double small = mean_sup(100, 150), large = mean_sup(300, 450);
  EXPECT_LT(std::abs(small - large), 0.25 * std::max(small, large)) << small << " vs " << large;
}

TEST(SampleObservations, UniformChiSquare) {
  const std::vector<Matrix> truth{Matrix::Zero(10, 10)};
  const auto d = make_sampling(SamplingKind::uniform, 10, 10, 1.0, 0);
  const std::size_t n = 100000;
  const auto obs = sample_observations(truth, d, n, 11);
  ASSERT_EQ(obs.samples.size(), n);
  std::vector<double> counts(100, 0.0);
  for (const auto& s : obs.samples) counts[s.row * 10 + s.col] += 1.0;
  const double expect = n / 100.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expect) * (c - expect) / expect;
  // 99 degrees of freedom, upper 1% point.
  EXPECT_LT(chi2, 134.642);
}

TEST(SampleObservations, ZeroTruthBalancedLabels) {
  const std::vector<Matrix> truth{Matrix::Zero(5, 5)};
  const auto d = make_sampling(SamplingKind::uniform, 5, 5, 1.0, 0);
  const std::size_t n = 40000;
  const auto obs = sample_observations(truth, d, n, 2);
  double ones = 0.0;
  for (const auto& s : obs.samples) {
    ASSERT_GE(s.label, 1);
    ASSERT_LE(s.label, 2);
    ones += s.label == 1;
  }
  EXPECT_NEAR(ones / n, 0.5, 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST(SampleObservations, ProductRowMarginals) {
  SamplingDistribution d;
  d.kind = SamplingKind::product;
  d.row_weights = {2.0 / 5, 1.0 / 5, 1.0 / 5, 1.0 / 5};
  d.col_weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const std::vector<Matrix> truth{Matrix::Zero(4, 3)};
  const std::size_t n = 50000;
  const auto obs = sample_observations(truth, d, n, 5);
  std::vector<double> rows(4, 0.0);
  for (const auto& s : obs.samples) rows[s.row] += 1.0;
  for (int r = 0; r < 4; ++r) {
    const double p = d.row_weights[r];
    EXPECT_NEAR(rows[r] / n, p, 3.0 * std::sqrt(p * (1 - p) / n)) << "row " << r;
  }
}

TEST(SampleObservations, LabelFrequenciesFollowLogit) {
  Matrix x0(2, 2), x1(2, 2);
  x0 << 1.0, -0.5, 0.0, 2.0;
  x1 << -1.0, 0.3, 0.7, 0.0;
  const std::vector<Matrix> truth{x0, x1};
  const auto d = make_sampling(SamplingKind::uniform, 2, 2, 1.0, 0);
  const std::size_t n = 100000;
  const auto obs = sample_observations(truth, d, n, 8);
  std::vector<std::array<double, 3>> counts(4, {0, 0, 0});
  std::vector<double> totals(4, 0.0);
  for (const auto& s : obs.samples) {
    counts[s.row * 2 + s.col][s.label - 1] += 1.0;
    totals[s.row * 2 + s.col] += 1.0;
  }
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      const std::vector<double> in{x0(r, c), x1(r, c)};
      const Vector p = logit_probs(in);
      const double t = totals[r * 2 + c];
      for (int j = 0; j < 3; ++j)
        EXPECT_NEAR(counts[r * 2 + c][j] / t, p[j], 4.0 * std::sqrt(p[j] * (1 - p[j]) / t));
    }
}

TEST(SampleObservations, Deterministic) {
  const auto truth = make_ground_truth(6, 7, 3, 2, 1.0, 1);
  const auto d = make_sampling(SamplingKind::product, 6, 7, 3.0, 2);
  const auto a = sample_observations(truth, d, 500, 3);
  const auto b = sample_observations(truth, d, 500, 3);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].row, b.samples[i].row);
    EXPECT_EQ(a.samples[i].col, b.samples[i].col);
    EXPECT_EQ(a.samples[i].label, b.samples[i].label);
  }
  const auto c = sample_observations(truth, d, 500, 4);
  int same = 0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) same += a.samples[i].row == c.samples[i].row;
  EXPECT_LT(same, 400);
}
