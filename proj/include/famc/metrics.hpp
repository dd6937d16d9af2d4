#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "famc/core.hpp"
#include "famc/link.hpp"

namespace famc {

struct EvalReport {
  std::optional<double> kl;
  std::optional<double> hellinger_sq;
  std::optional<double> frobenius_sq_normalized;
  std::optional<double> prediction_error;

  /// "key=value" lines in a fixed key order; absent metrics are omitted.
  std::string to_kv() const;
  /// Header line plus one row; absent metrics are empty cells.
  std::string to_csv() const;
};

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
constexpr double kProbClamp = 1e-12;

/// Entry-averaged KL(truth || est).
double kl_divergence(const ProbabilityField& truth, const ProbabilityField& est);

/// Entry-averaged squared Hellinger distance (sum over all p components).
double hellinger_sq(const ProbabilityField& a, const ProbabilityField& b);

/// sum_j ||A^j - B^j||_F^2 / (m1 m2).
double frobenius_error(std::span<const Matrix> truth, std::span<const Matrix> est);

/// Fraction of test samples whose label differs from the most probable
/// class (ties go to the smaller label).
double prediction_error(const ProbabilityField& probs, const ObservationSet& test);

/// Same, with one probability vector per test sample.
double prediction_error(std::span<const Vector> sample_probs, const ObservationSet& test);

/// Most probable label (1-based), ties toward the smaller label.
int map_label(std::span<const double> probs);

/// Bound expression of the binary rate theorem with the universal constant
/// and nu set to 1:
///   max(mu^2 L^2 / K * max(m1,m2) * rank * log d / n,
///       8 mu e M sqrt(log d) / n),  d = m1 + m2.
/// Only meaningful for ratios and slopes across runs.
double theorem2_bound(int m1, int m2, long long n, int rank, const LinkConstants& constants,
                      double mu, double l_c);

/// Regularization level paired with the bound:
/// 6 L sqrt(2 L_c log d / (min(m1,m2) n)).
double theorem2_lambda(int m1, int m2, long long n, const LinkConstants& constants, double l_c);

}  // namespace famc
