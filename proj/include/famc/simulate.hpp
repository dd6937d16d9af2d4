#pragma once

// Synthetic ground truth and observation sampling.

#include <cstdint>
#include <span>
#include <vector>

#include "famc/core.hpp"

namespace famc {

enum class SamplingKind { uniform, product };

/// Entry-sampling law pi_{k,l} = row_weights[k] * col_weights[l]; both
/// weight vectors are normalized to sum to one.
struct SamplingDistribution {
  SamplingKind kind = SamplingKind::uniform;
  std::vector<double> row_weights;
  std::vector<double> col_weights;

  int rows() const { return static_cast<int>(row_weights.size()); }
  int cols() const { return static_cast<int>(col_weights.size()); }
  double prob(int row, int col) const { return row_weights[row] * col_weights[col]; }
  double min_prob() const;

  /// Smallest mu with min pi >= 1 / (mu m1 m2).
  double mu() const;
  /// Smallest L_c with every row and column marginal <= L_c / min(m1, m2).
  double l_c() const;
};

/// Uniform law, or a product law with row and column weights drawn
/// log-uniformly in [1, skew] (skew >= 1).
SamplingDistribution make_sampling(SamplingKind kind, int m1, int m2, double skew,
                                   std::uint64_t seed);

/// Weights of the rank-one terms: (2, 1, 0.5, 0.25, 0.1) for rank 5,
/// 2^(1-k) otherwise.
std::vector<double> spectrum_weights(int rank);

/// p-1 matrices Gamma sqrt(m1 m2) sum_k alpha_k u_k v_k^T with orthonormal
/// Gaussian-drawn u_k, v_k per class.
std::vector<Matrix> make_ground_truth(int m1, int m2, int classes, int rank, double gamma_scale,
                                      std::uint64_t seed);

/// n iid entries from dist, each labeled from the multinomial logit of the
/// truth at that entry.
ObservationSet sample_observations(std::span<const Matrix> truth, const SamplingDistribution& dist,
                                   std::size_t n, std::uint64_t seed);

}  // namespace famc
