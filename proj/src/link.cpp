#include "famc/link.hpp"

#include <algorithm>
#include <cmath>

#include "famc/errors.hpp"
#include "famc/loss.hpp"

namespace famc {

namespace {

void check_compatible(const AtomicModel& model, const ObservationSet& obs) {
  if (model.rows != obs.rows || model.cols != obs.cols || model.classes != obs.classes)
    throw DimensionMismatch("model and observations disagree on dimensions or classes");
  if (model.per_class.size() != static_cast<std::size_t>(model.classes - 1))
    throw DimensionMismatch("model must hold p-1 atom lists");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double log_partition(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, v);
  double s = std::exp(-m);
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

void logit_probs_into(std::span<const double> x, std::span<double> out) {
  double m = 0.0;
  for (double v : x) {
    if (std::isnan(v)) throw InvalidArgument("logit_probs: NaN parameter");
    m = std::max(m, v);
  }
  const std::size_t d = x.size();
  double total = out[d] = std::exp(-m);
  for (std::size_t j = 0; j < d; ++j) total += out[j] = std::exp(x[j] - m);
  for (std::size_t j = 0; j <= d; ++j) out[j] /= total;
}

Vector logit_probs(std::span<const double> x) {
  Vector out(static_cast<Eigen::Index>(x.size() + 1));
  logit_probs_into(x, {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

double negative_log_likelihood(const AtomicModel& model, const ObservationSet& obs) {
  check_compatible(model, obs);
  if (obs.empty()) throw InvalidArgument("negative_log_likelihood needs at least one sample");
  MultinomialLogitLoss loss(obs);
  return loss.value(predictions_at(loss, model));
}

std::vector<SparseMatrix> sparse_gradient(const AtomicModel& model, const ObservationSet& obs) {
  check_compatible(model, obs);
  if (obs.empty()) throw InvalidArgument("sparse_gradient needs at least one sample");
  MultinomialLogitLoss loss(obs);
  const auto pred = predictions_at(loss, model);
  std::vector<double> grad(pred.size());
  loss.gradient(pred, grad);
  return gradient_matrices(loss, grad);
}

LinkConstants link_constants(double gamma, int classes) {
  if (classes != 2) throw Unsupported("link constants are defined for the binary link only");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be positive");
  // f is increasing and f' = f(1-f): |f'|/f = 1-f peaks at -gamma,
  // |f'|/(1-f) = f peaks at +gamma, and f(1-f) is smallest at the boundary.
  const double f = sigmoid(gamma);
  LinkConstants c;
  c.gamma = gamma;
  c.m_gamma = 2.0 * (gamma + std::log1p(std::exp(-gamma)));
  c.l_gamma = f;
  c.k_gamma = f * (1.0 - f) / 8.0;
  return c;
}

std::vector<Vector> logit_probs_at(const AtomicModel& model, std::span<const EntryIndex> pairs) {
  const Matrix values = evaluate_entries(model, pairs);
  std::vector<Vector> out;
  out.reserve(pairs.size());
  std::vector<double> x(values.cols());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) x[j] = values(i, j);
    out.push_back(logit_probs(x));
  }
  return out;
}

ProbabilityField logit_field(std::span<const Matrix> params) {
  if (params.empty()) throw InvalidArgument("logit_field needs at least one parameter matrix");
  const int rows = static_cast<int>(params[0].rows());
  const int cols = static_cast<int>(params[0].cols());
  for (const auto& m : params)
    if (m.rows() != rows || m.cols() != cols)
      throw DimensionMismatch("parameter matrices differ in shape");
  const int dim = static_cast<int>(params.size());
  ProbabilityField field(rows, cols, dim + 1);
  std::vector<double> x(dim);
  for (int k = 0; k < rows; ++k) {
    for (int l = 0; l < cols; ++l) {
      for (int j = 0; j < dim; ++j) x[j] = params[j](k, l);
      logit_probs_into(x, field.at(k, l));
    }
  }
  return field;
}

ProbabilityField logit_field(const AtomicModel& model) {
  const auto dense = densify(model);
  return logit_field(dense);
}

}  // namespace famc
