#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "famc/errors.hpp"
#include "famc/solver.hpp"

namespace famc {

namespace {

double nuclear_norm(const Matrix& m) {
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

/// Proximal map of tau * nuclear norm.
Matrix soft_threshold(const Matrix& m, double tau) {
  if (tau == 0.0) return m;
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = (svd.singularValues().array() - tau).cwiseMax(0.0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

void entry_values(std::span<const Matrix> params, const SampleLoss& loss, std::vector<double>& out) {
  const auto entries = loss.entries();
  const int dim = loss.dim();
  out.resize(entries.size() * dim);
  for (std::size_t e = 0; e < entries.size(); ++e)
    for (int j = 0; j < dim; ++j) out[e * dim + j] = params[j](entries[e].row, entries[e].col);
}

}  // namespace

double dense_objective(std::span<const Matrix> params, const SampleLoss& loss, double lambda) {
  if (params.size() != static_cast<std::size_t>(loss.dim()))
    throw DimensionMismatch("need one parameter matrix per class");
  std::vector<double> pred;
  entry_values(params, loss, pred);
  double penalty = 0.0;
  if (lambda != 0.0)
    for (const auto& m : params) penalty += nuclear_norm(m);
  return lambda * penalty + loss.value(pred);
}

ReferenceResult reference_fit(const SampleLoss& loss, double lambda,
                              const ReferenceOptions& options) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (static_cast<long long>(loss.rows()) * loss.cols() > options.max_entries)
    throw InvalidArgument("reference_fit is limited to desk-scale matrices");

  const int dim = loss.dim();
  const auto entries = loss.entries();
  const double lip = loss.smoothness();
  const double step = 1.0 / lip;

  std::vector<Matrix> x(dim, Matrix::Zero(loss.rows(), loss.cols()));
  std::vector<Matrix> y = x, xn = x;
  std::vector<double> pred, grad(entries.size() * dim);

  ReferenceResult result;
  auto& report = result.report;
  double fx = dense_objective(x, loss, lambda);
  report.objective_trace.push_back(fx);
  report.stop_reason = StopReason::max_iters;

  double t = 1.0;
  int quiet = 0;
  int it = 0;
  for (; it < options.max_iters; ++it) {
    entry_values(y, loss, pred);
    loss.gradient(pred, grad);
    for (int j = 0; j < dim; ++j) {
      Matrix z = y[j];
      for (std::size_t e = 0; e < entries.size(); ++e)
        z(entries[e].row, entries[e].col) -= step * grad[e * dim + j];
      xn[j] = soft_threshold(z, step * lambda);
    }
    const double fxn = dense_objective(xn, loss, lambda);
    if (fxn > fx) {
      if (t == 1.0) break;
      t = 1.0;
      y = x;
      continue;
    }
    const double change = (fx - fxn) / std::max(1.0, std::abs(fxn));
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (int j = 0; j < dim; ++j) y[j] = xn[j] + ((t - 1.0) / tn) * (xn[j] - x[j]);
    x = xn;
    fx = fxn;
    t = tn;
    report.objective_trace.push_back(fx);
    quiet = change <= options.rel_tol ? quiet + 1 : 0;
    if (quiet >= 10) {
      report.stop_reason = StopReason::duality_gap_met;
      report.converged = true;
      ++it;
      break;
    }
  }
  report.iterations = it;
  result.params = std::move(x);
  return result;
}

ReferenceResult reference_fit(const ObservationSet& obs, const FitConfig& cfg,
                              const ReferenceOptions& options) {
  cfg.validate(/*allow_zero_lambda=*/true);
  MultinomialLogitLoss loss(obs);
  return reference_fit(loss, cfg.lambda, options);
}

}  // namespace famc
