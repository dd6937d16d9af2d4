#include "famc/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "famc/errors.hpp"
#include "famc/link.hpp"

namespace famc {

ObservedEntries::ObservedEntries(const ObservationSet& obs) {
  const std::size_t n = obs.samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t i) {
    return EntryIndex{obs.samples[i].row, obs.samples[i].col};
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  sample_entry_.assign(n, -1);
  for (std::size_t idx : order) {
    const EntryIndex e = key(idx);
    if (entries_.empty() || entries_.back() != e) entries_.push_back(e);
    sample_entry_[idx] = static_cast<int>(entries_.size() - 1);
  }
}

SampleLoss::SampleLoss(const ObservationSet& obs, int dim)
    : rows_(obs.rows), cols_(obs.cols), dim_(dim), n_(obs.samples.size()), entries_(obs) {
  obs.validate();
  if (obs.empty()) throw InvalidArgument("loss needs at least one sample");
}

MultinomialLogitLoss::MultinomialLogitLoss(const ObservationSet& obs)
    : SampleLoss(obs, obs.classes - 1), classes_(obs.classes) {
  label_counts_.assign(entry_count() * classes_, 0.0);
  totals_.assign(entry_count(), 0.0);
  const auto ids = entries_.sample_entry();
  for (std::size_t i = 0; i < obs.samples.size(); ++i) {
    label_counts_[static_cast<std::size_t>(ids[i]) * classes_ + obs.samples[i].label - 1] += 1.0;
    totals_[ids[i]] += 1.0;
  }
}

double MultinomialLogitLoss::value(std::span<const double> pred) const {
  const std::size_t d = dim_;
  double total = 0.0;
  for (std::size_t e = 0; e < entry_count(); ++e) {
    const auto x = pred.subspan(e * d, d);
    const double* counts = label_counts_.data() + e * classes_;
    // -log f_y(x) = log Z(x) - x_y, with x_p = 0.
    double s = totals_[e] * log_partition(x);
    for (std::size_t j = 0; j < d; ++j) s -= counts[j] * x[j];
    total += s;
  }
  return total / static_cast<double>(n_);
}

double MultinomialLogitLoss::gradient(std::span<const double> pred, std::span<double> grad) const {
  const std::size_t d = dim_;
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t e = 0; e < entry_count(); ++e) {
    const auto x = pred.subspan(e * d, d);
    const double* counts = label_counts_.data() + e * classes_;
    const double lz = log_partition(x);
    double s = totals_[e] * lz;
    for (std::size_t j = 0; j < d; ++j) {
      s -= counts[j] * x[j];
      grad[e * d + j] = (totals_[e] * std::exp(x[j] - lz) - counts[j]) * inv_n;
    }
    total += s;
  }
  return total * inv_n;
}

Matrix MultinomialLogitLoss::curvature(std::span<const double> pred,
                                       std::span<const double> dir) const {
  const std::size_t d = dim_;
  Matrix out = Matrix::Zero(dim_, dim_);
  std::vector<double> f(classes_);
  for (std::size_t e = 0; e < entry_count(); ++e) {
    logit_probs_into(pred.subspan(e * d, d), f);
    const auto u = dir.subspan(e * d, d);
    const double w = totals_[e];
    for (std::size_t j = 0; j < d; ++j) {
      if (u[j] == 0.0) continue;
      out(j, j) += w * f[j] * u[j] * u[j];
      for (std::size_t k = 0; k < d; ++k) out(j, k) -= w * f[j] * f[k] * u[j] * u[k];
    }
  }
  return out / static_cast<double>(n_);
}

void MultinomialLogitLoss::hessian_product(std::span<const double> pred,
                                           std::span<const double> v,
                                           std::span<double> out) const {
  const std::size_t d = dim_;
  std::vector<double> f(classes_);
  for (std::size_t e = 0; e < entry_count(); ++e) {
    logit_probs_into(pred.subspan(e * d, d), f);
    const double w = totals_[e] / static_cast<double>(n_);
    double fv = 0.0;
    for (std::size_t j = 0; j < d; ++j) fv += f[j] * v[e * d + j];
    for (std::size_t j = 0; j < d; ++j) out[e * d + j] = w * f[j] * (v[e * d + j] - fv);
  }
}

double MultinomialLogitLoss::smoothness() const {
  // diag(f) - f f^T has spectral norm at most 1/2.
  const double cmax = *std::max_element(totals_.begin(), totals_.end());
  return 0.5 * cmax / static_cast<double>(n_);
}

SquaredLoss::SquaredLoss(const ObservationSet& obs, std::span<const double> label_values)
    : SampleLoss(obs, 1) {
  if (label_values.size() != static_cast<std::size_t>(obs.classes))
    throw DimensionMismatch("label encoding must hold one value per class");
  counts_.assign(entry_count(), 0.0);
  sum_y_.assign(entry_count(), 0.0);
  sum_yy_.assign(entry_count(), 0.0);
  const auto ids = entries_.sample_entry();
  for (std::size_t i = 0; i < obs.samples.size(); ++i) {
    const double y = label_values[obs.samples[i].label - 1];
    counts_[ids[i]] += 1.0;
    sum_y_[ids[i]] += y;
    sum_yy_[ids[i]] += y * y;
  }
}

double SquaredLoss::value(std::span<const double> pred) const {
  double total = 0.0;
  for (std::size_t e = 0; e < entry_count(); ++e) {
    const double x = pred[e];
    total += counts_[e] * x * x - 2.0 * x * sum_y_[e] + sum_yy_[e];
  }
  return std::max(total, 0.0) / (2.0 * static_cast<double>(n_));
}

double SquaredLoss::gradient(std::span<const double> pred, std::span<double> grad) const {
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t e = 0; e < entry_count(); ++e)
    grad[e] = (counts_[e] * pred[e] - sum_y_[e]) * inv_n;
  return value(pred);
}

Matrix SquaredLoss::curvature(std::span<const double>, std::span<const double> dir) const {
  double s = 0.0;
  for (std::size_t e = 0; e < entry_count(); ++e) s += counts_[e] * dir[e] * dir[e];
  return Matrix::Constant(1, 1, s / static_cast<double>(n_));
}

void SquaredLoss::hessian_product(std::span<const double>, std::span<const double> v,
                                  std::span<double> out) const {
  for (std::size_t e = 0; e < entry_count(); ++e) out[e] = counts_[e] * v[e] / static_cast<double>(n_);
}

double SquaredLoss::smoothness() const {
  return *std::max_element(counts_.begin(), counts_.end()) / static_cast<double>(n_);
}

std::vector<double> predictions_at(const SampleLoss& loss, const AtomicModel& model) {
  if (model.rows != loss.rows() || model.cols != loss.cols() ||
      model.parameter_classes() != loss.dim())
    throw DimensionMismatch("model does not match the loss dimensions");
  const Matrix values = evaluate_entries(model, loss.entries());
  std::vector<double> pred(loss.entry_count() * loss.dim());
  for (std::size_t e = 0; e < loss.entry_count(); ++e)
    for (int j = 0; j < loss.dim(); ++j)
      pred[e * loss.dim() + j] = values(static_cast<Eigen::Index>(e), j);
  return pred;
}

std::vector<SparseMatrix> gradient_matrices(const SampleLoss& loss,
                                            std::span<const double> grad) {
  const auto entries = loss.entries();
  std::vector<SparseMatrix> out(loss.dim());
  for (int j = 0; j < loss.dim(); ++j) {
    out[j].rows = loss.rows();
    out[j].cols = loss.cols();
    out[j].entries.reserve(entries.size());
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const double g = grad[e * loss.dim() + j];
      if (g != 0.0) out[j].entries.push_back({entries[e].row, entries[e].col, g});
    }
  }
  return out;
}

}  // namespace famc
