#include "famc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "famc/errors.hpp"

namespace famc {

namespace {

void check_same_shape(const ProbabilityField& a, const ProbabilityField& b) {
  if (a.rows != b.rows || a.cols != b.cols || a.classes != b.classes ||
      a.probs.size() != b.probs.size())
    throw DimensionMismatch("probability fields differ in shape");
  if (a.rows <= 0 || a.cols <= 0) throw InvalidArgument("empty probability field");
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

std::string format(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string EvalReport::to_kv() const {
  std::string out;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) out += std::string(key) + "=" + format(*v) + "\n";
  };
  put("kl", kl);
  put("hellinger_sq", hellinger_sq);
  put("frobenius_sq_normalized", frobenius_sq_normalized);
  put("prediction_error", prediction_error);
  return out;
}

std::string EvalReport::to_csv() const {
  auto cell = [](const std::optional<double>& v) { return v ? format(*v) : std::string(); };
  return "kl,hellinger_sq,frobenius_sq_normalized,prediction_error\n" + cell(kl) + "," +
         cell(hellinger_sq) + "," + cell(frobenius_sq_normalized) + "," +
         cell(prediction_error) + "\n";
}

double kl_divergence(const ProbabilityField& truth, const ProbabilityField& est) {
  check_same_shape(truth, est);
  double total = 0.0;
  for (std::size_t i = 0; i < truth.probs.size(); ++i) {
    const double p = clamp_prob(truth.probs[i]);
    const double q = clamp_prob(est.probs[i]);
    total += p * std::log(p / q);
  }
  return std::max(total, 0.0) / (static_cast<double>(truth.rows) * truth.cols);
}

double hellinger_sq(const ProbabilityField& a, const ProbabilityField& b) {
  check_same_shape(a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < a.probs.size(); ++i) {
    const double d = std::sqrt(std::max(a.probs[i], 0.0)) - std::sqrt(std::max(b.probs[i], 0.0));
    total += d * d;
  }
  return total / (static_cast<double>(a.rows) * a.cols);
}

double frobenius_error(std::span<const Matrix> truth, std::span<const Matrix> est) {
  if (truth.size() != est.size() || truth.empty())
    throw DimensionMismatch("need the same nonzero number of parameter matrices");
  double total = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (truth[j].rows() != est[j].rows() || truth[j].cols() != est[j].cols())
      throw DimensionMismatch("parameter matrices differ in shape");
    total += (truth[j] - est[j]).squaredNorm();
  }
  return total / static_cast<double>(truth[0].size());
}

int map_label(std::span<const double> probs) {
  const auto it = std::max_element(probs.begin(), probs.end());
  return static_cast<int>(it - probs.begin()) + 1;
}

double prediction_error(const ProbabilityField& probs, const ObservationSet& test) {
  if (probs.rows != test.rows || probs.cols != test.cols || probs.classes != test.classes)
    throw DimensionMismatch("probability field does not match the test set");
  if (test.empty()) throw InvalidArgument("prediction_error needs test samples");
  std::size_t wrong = 0;
  for (const auto& s : test.samples)
    if (map_label(probs.at(s.row, s.col)) != s.label) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

double prediction_error(std::span<const Vector> sample_probs, const ObservationSet& test) {
  if (sample_probs.size() != test.size())
    throw DimensionMismatch("need one probability vector per test sample");
  if (test.empty()) throw InvalidArgument("prediction_error needs test samples");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& p = sample_probs[i];
    if (map_label({p.data(), static_cast<std::size_t>(p.size())}) != test.samples[i].label)
      ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

double theorem2_bound(int m1, int m2, long long n, int rank, const LinkConstants& c, double mu,
                      double l_c) {
  if (m1 <= 0 || m2 <= 0 || n <= 0 || rank < 0) throw InvalidArgument("invalid bound inputs");
  if (!(mu >= 1.0) || !(l_c >= 1.0)) throw InvalidArgument("mu and L_c must be at least 1");
  const double log_d = std::log(static_cast<double>(m1) + m2);
  const double big = std::max(m1, m2);
  const double nn = static_cast<double>(n);
  const double first =
      mu * mu * c.l_gamma * c.l_gamma / c.k_gamma * big * rank * log_d / nn;
  const double second = 8.0 * mu * std::numbers::e * c.m_gamma * std::sqrt(log_d) / nn;
  return std::max(first, second);
}

double theorem2_lambda(int m1, int m2, long long n, const LinkConstants& c, double l_c) {
  if (m1 <= 0 || m2 <= 0 || n <= 0) throw InvalidArgument("invalid lambda inputs");
  const double log_d = std::log(static_cast<double>(m1) + m2);
  return 6.0 * c.l_gamma * std::sqrt(2.0 * l_c * log_d / (std::min(m1, m2) * static_cast<double>(n)));
}

}  // namespace famc
