#pragma once

// Lifted coordinate gradient descent for nuclear-norm penalized
// completion, plus a dense proximal-gradient reference solver.
//
// The lifted solver works on the atomic representation: each parameter
// class is a nonnegative combination of unit rank-one atoms, and the
// auxiliary objective is
//
//   Obj(theta) = lambda * sum of atom weights + loss(W_theta).
//
// Every outer iteration computes the top singular pair of minus the loss
// gradient for each class. If the best pair still lowers the objective
// (g <= -eps/2) it is added through a small nonnegative line search;
// otherwise the weights on the current support are re-optimized until
// all support atoms satisfy |lambda + <grad, u v^T>| <= eps.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "famc/core.hpp"
#include "famc/loss.hpp"

namespace famc {

enum class StopReason { duality_gap_met, max_iters, stalled };

std::string_view to_string(StopReason reason);

struct FitReport {
  int iterations = 0;
  /// Objective before the first iteration, then after every iteration.
  std::vector<double> objective_trace;
  std::vector<std::size_t> atom_counts;
  StopReason stop_reason = StopReason::max_iters;
  bool converged = false;

  double final_objective() const { return objective_trace.empty() ? 0.0 : objective_trace.back(); }
};

struct FitResult {
  AtomicModel model;
  FitReport report;
};

/// Candidate atom u v^T for one parameter class.
struct AtomDirection {
  Vector u;
  Vector v;
};

/// Stopping quantities of the lifted solver at a given model.
struct DualityCertificate {
  double g = 0.0;      ///< lambda + min_j <grad_j, u_j v_j^T> over top singular pairs
  double g_max = 0.0;  ///< max over support atoms of |lambda + <grad_j, u v^T>|
};

// --- multinomial logit ---------------------------------------------------

/// Fits the multinomial-logit estimator starting from the zero model.
FitResult fit(const ObservationSet& obs, const FitConfig& cfg);

/// lambda * atomic mass + negative log-likelihood.
double objective(const AtomicModel& model, const ObservationSet& obs, double lambda);

/// Appends one atom per class with the weights minimizing the objective
/// over the nonnegative orthant; classes given std::nullopt are skipped
/// and atoms whose optimal weight is zero are dropped.
AtomicModel atom_step(const AtomicModel& model, const ObservationSet& obs, double lambda,
                      std::span<const std::optional<AtomDirection>> directions,
                      const FitConfig& cfg = {});

/// Re-optimizes all atom weights on the current support.
AtomicModel correction_step(const AtomicModel& model, const ObservationSet& obs, double lambda,
                            const FitConfig& cfg = {});

DualityCertificate duality_certificate(const AtomicModel& model, const ObservationSet& obs,
                                       const FitConfig& cfg);

// --- generic over the data-fit term --------------------------------------

FitResult fit_lifted(const SampleLoss& loss, int classes, const FitConfig& cfg,
                     bool allow_zero_lambda = false);

double objective(const AtomicModel& model, const SampleLoss& loss, double lambda);

AtomicModel atom_step(const AtomicModel& model, const SampleLoss& loss, double lambda,
                      std::span<const std::optional<AtomDirection>> directions,
                      const FitConfig& cfg = {});

AtomicModel correction_step(const AtomicModel& model, const SampleLoss& loss, double lambda,
                            const FitConfig& cfg = {});

DualityCertificate duality_certificate(const AtomicModel& model, const SampleLoss& loss,
                                       const FitConfig& cfg);

// --- dense reference -------------------------------------------------------

struct ReferenceOptions {
  double rel_tol = 1e-12;
  int max_iters = 200000;
  /// rows * cols above this is rejected.
  long long max_entries = 10000;
};

struct ReferenceResult {
  std::vector<Matrix> params;
  FitReport report;
};

/// Accelerated proximal gradient with singular-value soft-thresholding on
/// dense parameter matrices. Accepts lambda >= 0.
ReferenceResult reference_fit(const SampleLoss& loss, double lambda,
                              const ReferenceOptions& options = {});

ReferenceResult reference_fit(const ObservationSet& obs, const FitConfig& cfg,
                              const ReferenceOptions& options = {});

/// lambda * sum of nuclear norms + loss, for dense parameter matrices.
double dense_objective(std::span<const Matrix> params, const SampleLoss& loss, double lambda);

/// Largest lambda that leaves the zero model stationary: the maximum over
/// classes of the spectral norm of the loss gradient at zero.
double zero_model_lambda(const SampleLoss& loss, const FitConfig& cfg = {});

}  // namespace famc
