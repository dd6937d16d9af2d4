#include "famc/core.hpp"

#include <cmath>
#include <string>

#include "famc/errors.hpp"

namespace famc {

void ObservationSet::validate() const {
  if (rows <= 0 || cols <= 0) throw InvalidArgument("observation set needs positive dimensions");
  if (classes < 2) throw InvalidArgument("observation set needs at least two classes");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.row < 0 || s.row >= rows || s.col < 0 || s.col >= cols)
      throw IndexError("sample " + std::to_string(i) + " out of bounds");
    if (s.label < 1 || s.label > classes)
      throw InvalidArgument("sample " + std::to_string(i) + " has label " +
                            std::to_string(s.label) + " outside [1, " +
                            std::to_string(classes) + "]");
  }
}

AtomicModel::AtomicModel(int rows, int cols, int classes)
    : rows(rows), cols(cols), classes(classes),
      per_class(classes > 1 ? static_cast<std::size_t>(classes - 1) : 0) {}

double AtomicModel::atomic_mass() const {
  double mass = 0.0;
  for (const auto& atoms : per_class)
    for (const auto& a : atoms) mass += a.weight;
  return mass;
}

std::size_t AtomicModel::atom_count() const {
  std::size_t n = 0;
  for (const auto& atoms : per_class) n += atoms.size();
  return n;
}

void AtomicModel::validate() const {
  if (rows <= 0 || cols <= 0 || classes < 2)
    throw InvalidArgument("model needs positive dimensions and at least two classes");
  if (per_class.size() != static_cast<std::size_t>(classes - 1))
    throw InvalidArgument("model must hold one atom list per parameter class");
  for (const auto& atoms : per_class) {
    for (const auto& a : atoms) {
      if (!(a.weight >= 0.0)) throw InvalidArgument("atom weight must be nonnegative");
      if (a.left.size() != rows || a.right.size() != cols)
        throw DimensionMismatch("atom vector length does not match model dimensions");
      if (std::abs(a.left.norm() - 1.0) > 1e-10 || std::abs(a.right.norm() - 1.0) > 1e-10)
        throw InvalidArgument("atom vectors must have unit norm");
    }
  }
}

ProbabilityField::ProbabilityField(int rows, int cols, int classes)
    : rows(rows), cols(cols), classes(classes),
      probs(static_cast<std::size_t>(rows) * cols * classes, 0.0) {}

void ProbabilityField::validate(double tol) const {
  if (probs.size() != static_cast<std::size_t>(rows) * cols * classes)
    throw DimensionMismatch("probability field storage does not match its shape");
  for (int k = 0; k < rows; ++k) {
    for (int l = 0; l < cols; ++l) {
      double total = 0.0;
      for (double v : at(k, l)) {
        if (!(v >= 0.0)) throw InvalidArgument("negative or NaN probability");
        total += v;
      }
      if (std::abs(total - 1.0) > tol) throw InvalidArgument("probabilities do not sum to one");
    }
  }
}

void FitConfig::validate(bool allow_zero_lambda) const {
  if (!(allow_zero_lambda ? lambda >= 0.0 : lambda > 0.0) || !std::isfinite(lambda))
    throw ConfigError(allow_zero_lambda ? "lambda must be nonnegative" : "lambda must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (!(svd_tol > 0.0) || svd_max_iter < 1) throw ConfigError("invalid singular pair settings");
  if (!(line_search_grad_tol > 0.0) || line_search_max_iter < 1)
    throw ConfigError("invalid line search settings");
  if (!(correction_rel_tol > 0.0) || correction_max_iter < 1)
    throw ConfigError("invalid correction settings");
}

Matrix evaluate_entries(const AtomicModel& model, std::span<const EntryIndex> pairs) {
  const int dim = model.parameter_classes();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(pairs.size()), dim);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [r, c] = pairs[i];
    if (r < 0 || r >= model.rows || c < 0 || c >= model.cols)
      throw IndexError("entry (" + std::to_string(r) + ", " + std::to_string(c) +
                       ") out of bounds");
  }
  for (int j = 0; j < dim; ++j) {
    for (const auto& a : model.per_class[j]) {
      for (std::size_t i = 0; i < pairs.size(); ++i)
        out(static_cast<Eigen::Index>(i), j) +=
            a.weight * a.left[pairs[i].row] * a.right[pairs[i].col];
    }
  }
  return out;
}

std::vector<Matrix> densify(const AtomicModel& model) {
  std::vector<Matrix> out;
  out.reserve(model.per_class.size());
  for (const auto& atoms : model.per_class) {
    Matrix x = Matrix::Zero(model.rows, model.cols);
    for (const auto& a : atoms) x.noalias() += a.weight * a.left * a.right.transpose();
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace famc
