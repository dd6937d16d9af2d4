#pragma once

// Random instances and naive oracles shared by the unit tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "famc/core.hpp"
#include "famc/sparse.hpp"

namespace famc::testing {

inline Vector unit_vector(int size, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(size);
  for (int i = 0; i < size; ++i) v[i] = normal(rng);
  return v / v.norm();
}

inline Vector basis(int size, int index) {
  Vector v = Vector::Zero(size);
  v[index] = 1.0;
  return v;
}

inline ObservationSet random_obs(int rows, int cols, int classes, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> r(0, rows - 1), c(0, cols - 1), y(1, classes);
  ObservationSet obs{rows, cols, classes, {}};
  for (int i = 0; i < n; ++i) {
    const int row = r(rng);
    const int col = c(rng);
    obs.samples.push_back({row, col, y(rng)});
  }
  return obs;
}

inline AtomicModel random_model(int rows, int cols, int classes, int atoms, std::uint64_t seed,
                                double max_weight = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> w(0.0, max_weight);
  AtomicModel m(rows, cols, classes);
  for (auto& list : m.per_class)
    for (int a = 0; a < atoms; ++a) list.push_back({w(rng), unit_vector(rows, rng), unit_vector(cols, rng)});
  return m;
}

inline std::vector<Matrix> brute_densify(const AtomicModel& m) {
  std::vector<Matrix> out;
  for (const auto& list : m.per_class) {
    Matrix x = Matrix::Zero(m.rows, m.cols);
    for (const auto& a : list)
      for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) x(i, j) += a.weight * a.left[i] * a.right[j];
    out.push_back(x);
  }
  return out;
}

/// Probabilities by the textbook formula, no stabilization.
inline std::vector<double> naive_probs(const std::vector<double>& x) {
  double denom = 1.0;
  for (double v : x) denom += std::exp(v);
  std::vector<double> p;
  for (double v : x) p.push_back(std::exp(v) / denom);
  p.push_back(1.0 / denom);
  return p;
}

/// Per-sample loop over the normalized negative log-likelihood.
inline double naive_nll(const std::vector<Matrix>& params, const ObservationSet& obs) {
  double total = 0.0;
  for (const auto& s : obs.samples) {
    std::vector<double> x;
    for (const auto& m : params) x.push_back(m(s.row, s.col));
    total -= std::log(naive_probs(x)[s.label - 1]);
  }
  return total / static_cast<double>(obs.size());
}

inline SparseMatrix random_sparse(int rows, int cols, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  SparseMatrix a{rows, cols, {}};
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (unit(rng) < density) a.entries.push_back({i, j, normal(rng)});
  if (a.entries.empty()) a.entries.push_back({0, 0, 1.0});
  return a;
}

/// Minimizes a unimodal function on [lo, hi] by golden-section search.
template <class F>
double golden_section(F f, double lo, double hi, double tol = 1e-12) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace famc::testing
