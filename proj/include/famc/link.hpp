#pragma once

// Multinomial logit link f^j(x) = exp(x_j) / (1 + sum_c exp(x_c)), with the
// p-th (reference) class receiving 1 / (1 + sum_c exp(x_c)).

#include <span>
#include <vector>

#include "famc/core.hpp"
#include "famc/sparse.hpp"

namespace famc {

/// Constants of the binary logit link over |x| <= gamma.
struct LinkConstants {
  double gamma = 0.0;
  double m_gamma = 0.0;  ///< sup 2|log f(x)|
  double l_gamma = 0.0;  ///< max(sup |f'|/f, sup |f'|/(1-f))
  double k_gamma = 0.0;  ///< inf f'^2 / (8 f (1-f))
};

/// Length-p probability vector for p-1 parameters. Throws InvalidArgument
/// on NaN input.
Vector logit_probs(std::span<const double> x);

/// Writes the p probabilities into out (size x.size() + 1), no allocation.
void logit_probs_into(std::span<const double> x, std::span<double> out);

/// log(1 + sum_c exp(x_c)), overflow-safe.
double log_partition(std::span<const double> x);

/// Normalized negative log-likelihood of obs under the model, evaluated
/// only at observed entries.
double negative_log_likelihood(const AtomicModel& model, const ObservationSet& obs);

/// Gradient of negative_log_likelihood with respect to each X^j,
/// supported on the observed entries.
std::vector<SparseMatrix> sparse_gradient(const AtomicModel& model, const ObservationSet& obs);

/// Closed-form constants of the binary logit. Throws Unsupported unless
/// classes == 2.
LinkConstants link_constants(double gamma, int classes = 2);

/// Class probabilities of the model at the given entries.
std::vector<Vector> logit_probs_at(const AtomicModel& model, std::span<const EntryIndex> pairs);

/// Probability field f(X) of dense parameter matrices (one per class 1..p-1).
ProbabilityField logit_field(std::span<const Matrix> params);

/// Probability field of an atomic model. Densifies; desk scale only.
ProbabilityField logit_field(const AtomicModel& model);

}  // namespace famc
