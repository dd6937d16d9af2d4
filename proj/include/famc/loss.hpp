#pragma once

// Data-fit terms evaluated only at observed entries.
//
// Samples are grouped by entry; repeated samples of the same entry are
// accumulated through per-entry sufficient statistics. Predictions,
// gradients and directions are entry-major buffers of length
// entry_count() * dim(): value for entry e and parameter class j sits at
// e * dim() + j.

#include <memory>
#include <span>
#include <vector>

#include "famc/core.hpp"
#include "famc/sparse.hpp"

namespace famc {

/// Distinct entries touched by a sample set, sorted row-major.
class ObservedEntries {
 public:
  explicit ObservedEntries(const ObservationSet& obs);

  std::span<const EntryIndex> entries() const { return entries_; }
  /// Entry id of every sample, in sample order.
  std::span<const int> sample_entry() const { return sample_entry_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<EntryIndex> entries_;
  std::vector<int> sample_entry_;
};

class SampleLoss {
 public:
  virtual ~SampleLoss() = default;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int dim() const { return dim_; }
  std::size_t sample_count() const { return n_; }
  std::span<const EntryIndex> entries() const { return entries_.entries(); }
  std::size_t entry_count() const { return entries_.size(); }

  virtual double value(std::span<const double> pred) const = 0;

  /// Writes the gradient with respect to pred and returns the value.
  virtual double gradient(std::span<const double> pred, std::span<double> grad) const = 0;

  /// Hessian restricted to per-class directions:
  /// out(j,k) = sum_e dir[e,j] * H_e(j,k) * dir[e,k].
  virtual Matrix curvature(std::span<const double> pred, std::span<const double> dir) const = 0;

  /// out = H(pred) v, with H block diagonal over entries.
  virtual void hessian_product(std::span<const double> pred, std::span<const double> v,
                               std::span<double> out) const = 0;

  /// Upper bound on the largest eigenvalue of the Hessian with respect to
  /// the entry values (the smoothness constant over parameter matrices).
  virtual double smoothness() const = 0;

 protected:
  SampleLoss(const ObservationSet& obs, int dim);

  int rows_;
  int cols_;
  int dim_;
  std::size_t n_;
  ObservedEntries entries_;
};

/// Normalized multinomial-logit negative log-likelihood over p classes.
class MultinomialLogitLoss final : public SampleLoss {
 public:
  explicit MultinomialLogitLoss(const ObservationSet& obs);

  int classes() const { return classes_; }

  double value(std::span<const double> pred) const override;
  double gradient(std::span<const double> pred, std::span<double> grad) const override;
  Matrix curvature(std::span<const double> pred, std::span<const double> dir) const override;
  void hessian_product(std::span<const double> pred, std::span<const double> v,
                       std::span<double> out) const override;
  double smoothness() const override;

 private:
  int classes_;
  std::vector<double> label_counts_;  // entry-major, p per entry
  std::vector<double> totals_;
};

/// (1/2n) sum_i (y_i - X_{omega_i})^2 with y_i = label_values[Y_i - 1].
class SquaredLoss final : public SampleLoss {
 public:
  SquaredLoss(const ObservationSet& obs, std::span<const double> label_values);

  double value(std::span<const double> pred) const override;
  double gradient(std::span<const double> pred, std::span<double> grad) const override;
  Matrix curvature(std::span<const double> pred, std::span<const double> dir) const override;
  void hessian_product(std::span<const double> pred, std::span<const double> v,
                       std::span<double> out) const override;
  double smoothness() const override;

 private:
  std::vector<double> counts_;
  std::vector<double> sum_y_;
  std::vector<double> sum_yy_;
};

/// Entry values of the model at the loss's observed entries, entry-major.
std::vector<double> predictions_at(const SampleLoss& loss, const AtomicModel& model);

/// Scatters an entry-major gradient into one sparse matrix per class.
std::vector<SparseMatrix> gradient_matrices(const SampleLoss& loss, std::span<const double> grad);

}  // namespace famc
