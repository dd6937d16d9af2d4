#include "famc/top_svd.hpp"

#include <cmath>
#include <random>
#include <set>
#include <utility>

#include <Eigen/SparseCore>

#include "famc/errors.hpp"

namespace famc {

void SparseMatrix::validate() const {
  std::set<std::pair<int, int>> seen;
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
      throw IndexError("sparse entry out of bounds");
    if (!seen.emplace(e.row, e.col).second) throw InvalidArgument("duplicate sparse coordinate");
  }
}

namespace {

Eigen::VectorXd gaussian_unit(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v[i] = normal(rng);
  return v / v.norm();
}

void fix_sign(SingularTriple& t) {
  for (Eigen::Index i = 0; i < t.u.size(); ++i) {
    if (std::abs(t.u[i]) > 1e-12) {
      if (t.u[i] < 0) {
        t.u = -t.u;
        t.v = -t.v;
      }
      return;
    }
  }
}

}  // namespace

SingularTriple top_singular_pair(const SparseMatrix& a, std::uint64_t seed, double tol,
                                 int max_iter, const std::optional<Eigen::VectorXd>& start) {
  if (!(tol > 0.0)) throw InvalidArgument("top_singular_pair: tol must be positive");
  if (max_iter < 1) throw InvalidArgument("top_singular_pair: max_iter must be positive");
  bool nonzero = false;
  for (const auto& e : a.entries) nonzero = nonzero || e.value != 0.0;
  if (!nonzero) throw ZeroMatrixError("top_singular_pair: matrix is zero");

  // Compressed row-major copies of A and A^T for the iteration.
  using Csr = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(a.entries.size());
  for (const auto& e : a.entries) triplets.emplace_back(e.row, e.col, e.value);
  Csr op(a.rows, a.cols);
  op.setFromTriplets(triplets.begin(), triplets.end());
  const Csr op_t = op.transpose();

  Eigen::VectorXd v, u(a.rows), z(a.cols);
  double sigma = 0.0;
  constexpr int kMaxDraws = 16;
  for (int attempt = 0; attempt < kMaxDraws && sigma < 1e-300; ++attempt) {
    if (attempt == 0 && start && start->size() == a.cols && start->norm() > 0.0)
      v = *start / start->norm();
    else
      v = gaussian_unit(a.cols, seed + static_cast<std::uint64_t>(attempt));
    u.noalias() = op * v;
    sigma = u.norm();
  }
  if (sigma < 1e-300) throw ZeroMatrixError("top_singular_pair: start vectors in null space");

  SingularTriple best;
  double previous = 0.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    u /= sigma;
    z.noalias() = op_t * u;
    v = z / z.norm();
    u.noalias() = op * v;
    sigma = u.norm();
    if (std::abs(sigma - previous) <= tol * sigma) {
      best.converged = true;
      ++it;
      break;
    }
    previous = sigma;
  }
  best.sigma = sigma;
  best.u = u / sigma;
  best.v = std::move(v);
  best.iterations = it;
  fix_sign(best);
  return best;
}

}  // namespace famc
