#include "famc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/QR>

#include "famc/errors.hpp"
#include "famc/link.hpp"

namespace famc {

double SamplingDistribution::min_prob() const {
  return *std::min_element(row_weights.begin(), row_weights.end()) *
         *std::min_element(col_weights.begin(), col_weights.end());
}

double SamplingDistribution::mu() const {
  return 1.0 / (static_cast<double>(rows()) * cols() * min_prob());
}

double SamplingDistribution::l_c() const {
  const double top = std::max(*std::max_element(row_weights.begin(), row_weights.end()),
                              *std::max_element(col_weights.begin(), col_weights.end()));
  return top * std::min(rows(), cols());
}

namespace {

std::vector<double> normalized(std::vector<double> w) {
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return w;
}

Matrix orthonormal_columns(int size, int count, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(size, count);
  for (int c = 0; c < count; ++c)
    for (int r = 0; r < size; ++r) g(r, c) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(size, count);
  // Fix signs so the columns follow the drawn vectors.
  const Matrix r = qr.matrixQR().topRows(count).triangularView<Eigen::Upper>();
  for (int c = 0; c < count; ++c)
    if (r(c, c) < 0) q.col(c) = -q.col(c);
  return q;
}

}  // namespace

SamplingDistribution make_sampling(SamplingKind kind, int m1, int m2, double skew,
                                   std::uint64_t seed) {
  if (m1 <= 0 || m2 <= 0) throw InvalidArgument("sampling needs positive dimensions");
  if (!(skew >= 1.0) || !std::isfinite(skew)) throw InvalidArgument("skew must be >= 1");
  SamplingDistribution d;
  d.kind = kind;
  if (kind == SamplingKind::uniform) {
    d.row_weights.assign(m1, 1.0 / m1);
    d.col_weights.assign(m2, 1.0 / m2);
    return d;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double log_skew = std::log(skew);
  auto draw = [&](int size) {
    std::vector<double> w(size);
    for (double& v : w) v = std::exp(unit(rng) * log_skew);
    return normalized(std::move(w));
  };
  d.row_weights = draw(m1);
  d.col_weights = draw(m2);
  return d;
}

std::vector<double> spectrum_weights(int rank) {
  if (rank == 5) return {2.0, 1.0, 0.5, 0.25, 0.1};
  std::vector<double> a(rank);
  for (int k = 0; k < rank; ++k) a[k] = std::pow(2.0, 1.0 - (k + 1));
  return a;
}

std::vector<Matrix> make_ground_truth(int m1, int m2, int classes, int rank, double gamma_scale,
                                      std::uint64_t seed) {
  if (m1 <= 0 || m2 <= 0) throw InvalidArgument("ground truth needs positive dimensions");
  if (classes < 2) throw InvalidArgument("ground truth needs at least two classes");
  if (rank < 0 || rank > std::min(m1, m2))
    throw InvalidArgument("rank must lie in [0, min(rows, cols)]");
  std::mt19937_64 rng(seed);
  const auto alpha = spectrum_weights(rank);
  const double scale = gamma_scale * std::sqrt(static_cast<double>(m1) * m2);
  std::vector<Matrix> out;
  for (int j = 0; j < classes - 1; ++j) {
    Matrix x = Matrix::Zero(m1, m2);
    if (rank > 0) {
      const Matrix u = orthonormal_columns(m1, rank, rng);
      const Matrix v = orthonormal_columns(m2, rank, rng);
      for (int k = 0; k < rank; ++k) x.noalias() += (scale * alpha[k]) * u.col(k) * v.col(k).transpose();
    }
    out.push_back(std::move(x));
  }
  return out;
}

ObservationSet sample_observations(std::span<const Matrix> truth, const SamplingDistribution& dist,
                                   std::size_t n, std::uint64_t seed) {
  if (truth.empty()) throw InvalidArgument("need at least one parameter matrix");
  if (n == 0) throw InvalidArgument("need at least one observation");
  const int m1 = static_cast<int>(truth[0].rows());
  const int m2 = static_cast<int>(truth[0].cols());
  if (dist.rows() != m1 || dist.cols() != m2)
    throw DimensionMismatch("sampling distribution does not match the truth");

  ObservationSet obs;
  obs.rows = m1;
  obs.cols = m2;
  obs.classes = static_cast<int>(truth.size()) + 1;
  obs.samples.reserve(n);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> row_u(0, m1 - 1), col_u(0, m2 - 1);
  std::discrete_distribution<int> row_d(dist.row_weights.begin(), dist.row_weights.end());
  std::discrete_distribution<int> col_d(dist.col_weights.begin(), dist.col_weights.end());
  const bool uniform = dist.kind == SamplingKind::uniform;

  std::vector<double> x(truth.size()), probs(truth.size() + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const int r = uniform ? row_u(rng) : row_d(rng);
    const int c = uniform ? col_u(rng) : col_d(rng);
    for (std::size_t j = 0; j < truth.size(); ++j) x[j] = truth[j](r, c);
    logit_probs_into(x, probs);
    const double draw = unit(rng);
    int label = obs.classes;
    double acc = 0.0;
    for (int j = 0; j + 1 < obs.classes; ++j) {
      acc += probs[j];
      if (draw < acc) {
        label = j + 1;
        break;
      }
    }
    obs.samples.push_back({r, c, label});
  }
  return obs;
}

}  // namespace famc
