#pragma once

#include <vector>

#include <Eigen/Dense>

namespace famc {

struct SparseEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Coordinate-list matrix with unique in-bounds coordinates.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<SparseEntry> entries;

  /// y = A x
  void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.setZero(rows);
    for (const auto& e : entries) y[e.row] += e.value * x[e.col];
  }

  /// y = A^T x
  void multiply_transpose(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.setZero(cols);
    for (const auto& e : entries) y[e.col] += e.value * x[e.row];
  }

  /// <A, u v^T>
  double bilinear(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    double s = 0.0;
    for (const auto& e : entries) s += e.value * u[e.row] * v[e.col];
    return s;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& e : entries) d(e.row, e.col) += e.value;
    return d;
  }

  /// Throws if a coordinate is out of bounds or repeated.
  void validate() const;
};

}  // namespace famc
