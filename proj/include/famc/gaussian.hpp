#pragma once

// Gaussian completion baseline: squared-loss nuclear-norm completion of the
// label values, a residual noise level, and class probabilities obtained by
// binning a normal distribution around the completed value.

#include <span>
#include <vector>

#include "famc/core.hpp"
#include "famc/solver.hpp"

namespace famc {

struct GaussianModel {
  int rows = 0;
  int cols = 0;
  int classes = 2;
  double lambda = 0.0;
  std::vector<Atom> atoms;
  double sigma_hat = 1.0;
  /// Real value standing for each label 1..p, strictly increasing.
  std::vector<double> label_values;

  /// Completed matrix values at the given entries.
  Vector values_at(std::span<const EntryIndex> pairs) const;
};

constexpr double kSigmaFloor = 1e-6;

/// Label j stands for the real value j.
std::vector<double> default_label_values(int classes);

struct GaussianFit {
  GaussianModel model;
  FitReport report;
};

/// Minimizes lambda * ||X||_* + (1/2n) sum_i (y_i - X_{omega_i})^2 with the
/// lifted solver, then sets sigma_hat^2 to the mean squared training
/// residual (floored at kSigmaFloor). Accepts lambda >= 0.
GaussianFit fit_gaussian(const ObservationSet& obs, const FitConfig& cfg,
                         std::span<const double> label_values = {});

/// P(Y = j) = F((b_j - x) / sigma) - F((b_{j-1} - x) / sigma), where the
/// bin edges b_j are midpoints between consecutive label values and the
/// outer edges are infinite.
std::vector<Vector> gaussian_class_probs(const GaussianModel& model,
                                         std::span<const EntryIndex> pairs);

/// Same binning for one value.
Vector gaussian_bin_probs(double value, double sigma, std::span<const double> label_values);

/// Dense probability field of the Gaussian model. Desk scale only.
ProbabilityField gaussian_field(const GaussianModel& model);

}  // namespace famc
