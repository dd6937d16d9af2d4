#pragma once

// Shared domain types: observations, rank-one atoms, atomic models and
// per-entry probability fields.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace famc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One revealed entry: 0-based (row, col) and a 1-based label.
struct Observation {
  int row = 0;
  int col = 0;
  int label = 1;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Entry coordinates, 0-based.
struct EntryIndex {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const EntryIndex&, const EntryIndex&) = default;
};

/// Samples (omega_i, Y_i) from an m1 x m2 matrix over a p-letter alphabet.
/// Samples may repeat the same entry.
struct ObservationSet {
  int rows = 0;
  int cols = 0;
  int classes = 2;
  std::vector<Observation> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  /// Throws InvalidArgument / IndexError when an invariant is broken.
  void validate() const;
};

/// Weighted normalized rank-one matrix weight * left * right^T.
struct Atom {
  double weight = 0.0;
  Vector left;
  Vector right;
};

/// Finite nonnegative combination of atoms for each parameter class
/// 1..p-1. Class p is the reference class and carries no parameter.
struct AtomicModel {
  int rows = 0;
  int cols = 0;
  int classes = 2;
  std::vector<std::vector<Atom>> per_class;

  AtomicModel() = default;
  AtomicModel(int rows, int cols, int classes);

  int parameter_classes() const { return classes - 1; }

  /// Sum of all atom weights, an upper bound on the summed nuclear norms.
  double atomic_mass() const;
  std::size_t atom_count() const;

  void validate() const;
};

/// Per-entry probability vectors of length p, stored entry-major
/// (entry (k,l) occupies [(k*cols + l)*p, ... + p)).
struct ProbabilityField {
  int rows = 0;
  int cols = 0;
  int classes = 2;
  std::vector<double> probs;

  ProbabilityField() = default;
  ProbabilityField(int rows, int cols, int classes);

  std::span<double> at(int row, int col) {
    return {probs.data() + offset(row, col), static_cast<std::size_t>(classes)};
  }
  std::span<const double> at(int row, int col) const {
    return {probs.data() + offset(row, col), static_cast<std::size_t>(classes)};
  }

  void validate(double tol = 1e-9) const;

 private:
  std::size_t offset(int row, int col) const {
    return (static_cast<std::size_t>(row) * cols + col) * classes;
  }
};

/// Solver settings. Defaults follow the library's documented choices.
struct FitConfig {
  double lambda = 1.0;
  double epsilon = 1e-4;
  int max_iters = 500;
  std::uint64_t seed = 0;

  double svd_tol = 1e-10;
  int svd_max_iter = 1000;

  double line_search_grad_tol = 1e-10;
  int line_search_max_iter = 50;

  double correction_rel_tol = 1e-9;
  int correction_max_iter = 500;

  /// Requires lambda > 0 unless allow_zero_lambda.
  void validate(bool allow_zero_lambda = false) const;
};

/// Parameter values X^j at the requested entries: one row per pair,
/// p-1 columns.
Matrix evaluate_entries(const AtomicModel& model, std::span<const EntryIndex> pairs);

/// Dense X^j for each parameter class. Desk-scale use only.
std::vector<Matrix> densify(const AtomicModel& model);

}  // namespace famc
