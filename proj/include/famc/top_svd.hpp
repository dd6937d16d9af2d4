#pragma once

#include <cstdint>
#include <optional>

#include "famc/sparse.hpp"

namespace famc {

struct SingularTriple {
  double sigma = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  int iterations = 0;
  bool converged = false;
};

/// Leading singular triple of a sparse matrix by power iteration on the
/// implicit normal operator v <- A^T A v / ||A^T A v||.
///
/// Stops when the relative change of the sigma estimate drops to tol, or
/// after max_iter steps with converged = false (best iterate returned).
/// The start vector is a seeded Gaussian draw unless `start` is given.
/// Output sign is fixed so that the first nonzero component of u is
/// positive. Throws ZeroMatrixError when the matrix has no nonzero entry.
SingularTriple top_singular_pair(const SparseMatrix& a, std::uint64_t seed, double tol = 1e-10,
                                 int max_iter = 1000,
                                 const std::optional<Eigen::VectorXd>& start = std::nullopt);

}  // namespace famc
