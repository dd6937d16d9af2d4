#include <gtest/gtest.h>

#include "famc/errors.hpp"
#include "famc/link.hpp"
#include "famc/loss.hpp"
#include "famc/solver.hpp"
#include "famc/top_svd.hpp"
#include "support.hpp"

using namespace famc;
using namespace famc::testing;

namespace {

FitConfig with_lambda(double lambda) {
  FitConfig cfg;
  cfg.lambda = lambda;
  return cfg;
}

void expect_monotone(const FitReport& r) {
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
    EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1] + 1e-9) << "step " << i;
}

}  // namespace

TEST(Fit, LargeLambdaGivesZeroModel) {
  const auto obs = random_obs(6, 5, 3, 80, 1);
  const double top = zero_model_lambda(MultinomialLogitLoss(obs));
  const auto r = fit(obs, with_lambda(top * 1.01));
  EXPECT_EQ(r.model.atom_count(), 0u);
  EXPECT_EQ(r.report.stop_reason, StopReason::duality_gap_met);
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(r.report.iterations, 0);
}

TEST(Fit, RejectsBadConfig) {
  const auto obs = random_obs(3, 3, 2, 10, 1);
  EXPECT_THROW(fit(obs, with_lambda(0.0)), ConfigError);
  EXPECT_THROW(fit(obs, with_lambda(-1.0)), ConfigError);
  ObservationSet empty{3, 3, 2, {}};
  EXPECT_THROW(fit(empty, with_lambda(0.1)), InvalidArgument);
  ObservationSet bad{3, 3, 2, {{0, 0, 3}}};
  EXPECT_THROW(fit(bad, with_lambda(0.1)), InvalidArgument);
}

TEST(Fit, AgreesWithReferenceOnSmallBinary) {
  const auto obs = random_obs(5, 4, 2, 60, 42);
  const auto cfg = with_lambda(0.05);
  const auto lifted = fit(obs, cfg);
  const auto ref = reference_fit(obs, cfg);
  EXPECT_NEAR(lifted.report.final_objective(), ref.report.final_objective(), 1e-4);
  EXPECT_NEAR(lifted.report.final_objective(), objective(lifted.model, obs, 0.05), 1e-12);
}

TEST(Fit, FiveClassTraceIsMonotone) {
  const auto obs = random_obs(8, 6, 5, 200, 5);
  const auto r = fit(obs, with_lambda(0.02));
  expect_monotone(r.report);
  EXPECT_EQ(r.report.stop_reason, StopReason::duality_gap_met);
  EXPECT_EQ(r.report.objective_trace.size(), static_cast<std::size_t>(r.report.iterations) + 1);
  EXPECT_EQ(r.report.atom_counts.size(), r.report.objective_trace.size());
}

TEST(Fit, ExitCertificateHolds) {
  for (int seed = 0; seed < 6; ++seed) {
    const int p = 2 + seed % 3;
    const auto obs = random_obs(7, 6, p, 150, 10 + seed);
    auto cfg = with_lambda(0.01 + 0.01 * seed);
    cfg.seed = seed;
    const auto r = fit(obs, cfg);
    ASSERT_EQ(r.report.stop_reason, StopReason::duality_gap_met);
    const auto cert = duality_certificate(r.model, obs, cfg);
    EXPECT_GT(cert.g, -cfg.epsilon / 2);
    EXPECT_LE(cert.g_max, cfg.epsilon);
  }
}

TEST(Fit, DeterministicGivenSeed) {
  const auto obs = random_obs(6, 7, 3, 120, 3);
  const auto a = fit(obs, with_lambda(0.02));
  const auto b = fit(obs, with_lambda(0.02));
  EXPECT_EQ(a.report.objective_trace, b.report.objective_trace);
}

TEST(Fit, MaxItersStop) {
  const auto obs = random_obs(8, 8, 2, 200, 4);
  auto cfg = with_lambda(1e-3);
  cfg.max_iters = 2;
  const auto r = fit(obs, cfg);
  EXPECT_EQ(r.report.stop_reason, StopReason::max_iters);
  EXPECT_EQ(r.report.iterations, 2);
  EXPECT_FALSE(r.report.converged);
}

TEST(Fit, MassBoundsNuclearNorm) {
  const auto obs = random_obs(6, 6, 3, 150, 8);
  const auto r = fit(obs, with_lambda(0.01));
  double nuclear = 0.0;
  for (const auto& x : densify(r.model)) nuclear += Eigen::JacobiSVD<Matrix>(x).singularValues().sum();
  EXPECT_GE(r.model.atomic_mass() + 1e-10, nuclear);
}

TEST(AtomStep, ZeroWeightWhenFirstOrderConditionHolds) {
  const auto obs = random_obs(4, 4, 3, 40, 2);
  const AtomicModel zero(4, 4, 3);
  const auto grads = sparse_gradient(zero, obs);
  // A direction aligned with +gradient: lambda + <grad, uv^T> >= 0.
  std::vector<std::optional<AtomDirection>> dirs;
  for (const auto& g : grads) {
    const auto t = top_singular_pair(g, 0);
    dirs.push_back(AtomDirection{t.u, t.v});
  }
  const auto out = atom_step(zero, obs, 0.01, dirs);
  EXPECT_EQ(out.atom_count(), 0u);
}

TEST(AtomStep, MatchesScalarOptimum) {
  // One observed entry, single class: the weight solves a scalar problem
  // whose stationarity condition sigmoid(b d) = 2/3 - lambda/d is explicit.
  ObservationSet obs{3, 3, 2, {{1, 2, 1}, {1, 2, 1}, {1, 2, 2}}};
  std::mt19937_64 rng(5);
  Vector u = unit_vector(3, rng);
  const Vector v = unit_vector(3, rng);
  if (u[1] * v[2] < 0) u = -u;
  const double d = u[1] * v[2];
  const double lambda = 0.01;
  ASSERT_GT(2.0 / 3.0 - lambda / d, 0.5);
  auto h = [&](double b) { return lambda * b + naive_nll({Matrix::Constant(3, 3, b * d)}, obs); };
  const double q = 2.0 / 3.0 - lambda / d;
  const double want = std::log(q / (1.0 - q)) / d;
  EXPECT_NEAR(golden_section(h, 0.0, 200.0), want, 1e-5 * (1 + want));
  const std::vector<std::optional<AtomDirection>> dirs{AtomDirection{u, v}};
  const auto out = atom_step(AtomicModel(3, 3, 2), obs, lambda, dirs);
  ASSERT_EQ(out.atom_count(), 1u);
  EXPECT_NEAR(out.per_class[0][0].weight, want, 1e-8 * (1 + want));
}

TEST(AtomStep, NeverIncreasesObjective) {
  for (int seed = 0; seed < 10; ++seed) {
    const int p = 2 + seed % 4;
    const auto obs = random_obs(5, 6, p, 70, 50 + seed);
    const auto m = random_model(5, 6, p, 1, 60 + seed, 0.5);
    std::mt19937_64 rng(seed);
    std::vector<std::optional<AtomDirection>> dirs;
    for (int j = 0; j < p - 1; ++j) dirs.push_back(AtomDirection{unit_vector(5, rng), unit_vector(6, rng)});
    const double before = objective(m, obs, 0.02);
    const auto out = atom_step(m, obs, 0.02, dirs);
    EXPECT_LE(objective(out, obs, 0.02), before + 1e-12);
  }
}

TEST(AtomStep, SkipsEmptySlotsAndChecksShape) {
  const auto obs = random_obs(4, 4, 3, 40, 2);
  std::vector<std::optional<AtomDirection>> dirs(2);
  EXPECT_EQ(atom_step(AtomicModel(4, 4, 3), obs, 0.01, dirs).atom_count(), 0u);
  std::vector<std::optional<AtomDirection>> one(1);
  EXPECT_THROW(atom_step(AtomicModel(4, 4, 3), obs, 0.01, one), DimensionMismatch);
}

TEST(CorrectionStep, MergesDuplicateAtoms) {
  const auto obs = random_obs(5, 5, 2, 60, 9);
  std::mt19937_64 rng(1);
  const Vector u = unit_vector(5, rng), v = unit_vector(5, rng);
  AtomicModel twice(5, 5, 2);
  twice.per_class[0] = {{0.3, u, v}, {0.4, u, v}};
  AtomicModel once(5, 5, 2);
  once.per_class[0] = {{0.7, u, v}};
  const auto a = correction_step(twice, obs, 0.01);
  const auto b = correction_step(once, obs, 0.01);
  ASSERT_LE(a.per_class[0].size(), 1u);
  EXPECT_NEAR(a.atomic_mass(), b.atomic_mass(), 1e-9);
  EXPECT_NEAR(objective(a, obs, 0.01), objective(b, obs, 0.01), 1e-9);
}

TEST(CorrectionStep, FixedPointAtOptimum) {
  const auto obs = random_obs(5, 5, 3, 80, 10);
  const auto m = random_model(5, 5, 3, 2, 11, 0.5);
  const auto once = correction_step(m, obs, 0.01);
  const auto again = correction_step(once, obs, 0.01);
  ASSERT_EQ(once.atom_count(), again.atom_count());
  for (std::size_t j = 0; j < once.per_class.size(); ++j)
    for (std::size_t a = 0; a < once.per_class[j].size(); ++a)
      EXPECT_NEAR(once.per_class[j][a].weight, again.per_class[j][a].weight, 1e-9);
  EXPECT_NEAR(objective(once, obs, 0.01), objective(again, obs, 0.01), 1e-9);
  EXPECT_LE(objective(once, obs, 0.01), objective(m, obs, 0.01) + 1e-12);
}

TEST(CorrectionStep, SingleAtomMatchesGoldenSection) {
  const auto obs = random_obs(4, 5, 2, 50, 12);
  std::mt19937_64 rng(2);
  const Vector u = unit_vector(4, rng), v = unit_vector(5, rng);
  const double lambda = 0.005;
  AtomicModel m(4, 5, 2);
  m.per_class[0] = {{1.0, u, v}};
  auto h = [&](double b) {
    AtomicModel t = m;
    t.per_class[0][0].weight = b;
    return objective(t, obs, lambda);
  };
  const double want = golden_section(h, 0.0, 100.0);
  const auto out = correction_step(m, obs, lambda);
  const double got = out.atom_count() ? out.per_class[0][0].weight : 0.0;
  EXPECT_NEAR(h(got), h(want), 1e-9);
  EXPECT_NEAR(got, want, 1e-4 * (1 + want));
}

TEST(ReferenceFit, LargeLambdaZero) {
  const auto obs = random_obs(4, 4, 2, 30, 1);
  const auto r = reference_fit(obs, with_lambda(10.0));
  for (const auto& x : r.params) EXPECT_EQ(x.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ReferenceFit, UnpenalizedPerEntryMle) {
  // Every cell observed with both labels: X = log(c1 / c2).
  ObservationSet obs{2, 3, 2, {}};
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> count(1, 4);
  Matrix want(2, 3);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) {
      const int c1 = count(rng), c2 = count(rng);
      for (int i = 0; i < c1; ++i) obs.samples.push_back({r, c, 1});
      for (int i = 0; i < c2; ++i) obs.samples.push_back({r, c, 2});
      want(r, c) = std::log(static_cast<double>(c1) / c2);
    }
  FitConfig cfg;
  cfg.lambda = 0.0;
  const auto res = reference_fit(MultinomialLogitLoss(obs), 0.0);
  EXPECT_LT((res.params[0] - want).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(ReferenceFit, SizeGuard) {
  const auto obs = random_obs(101, 100, 2, 10, 1);
  EXPECT_THROW(reference_fit(obs, with_lambda(0.1)), InvalidArgument);
}

TEST(ReferenceFit, AgreesAcrossLinksAndClasses) {
  for (int seed = 0; seed < 4; ++seed) {
    const int p = seed % 2 ? 5 : 2;
    const auto obs = random_obs(6, 5, p, 120, 900 + seed);
    const auto cfg = with_lambda(0.03);
    const auto a = fit(obs, cfg);
    const auto b = reference_fit(obs, cfg);
    EXPECT_NEAR(a.report.final_objective(), b.report.final_objective(), 1e-4) << seed;
  }
}

TEST(StopReason, Names) {
  EXPECT_EQ(to_string(StopReason::duality_gap_met), "duality_gap_met");
  EXPECT_EQ(to_string(StopReason::max_iters), "max_iters");
  EXPECT_EQ(to_string(StopReason::stalled), "stalled");
}
