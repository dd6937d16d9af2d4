#include "famc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "famc/errors.hpp"
#include "famc/top_svd.hpp"

namespace famc {

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::duality_gap_met:
      return "duality_gap_met";
    case StopReason::max_iters:
      return "max_iters";
    case StopReason::stalled:
      return "stalled";
  }
  return "unknown";
}

namespace {

using StridedMap = Eigen::Map<Eigen::VectorXd, 0, Eigen::InnerStride<>>;
using ConstStridedMap = Eigen::Map<const Eigen::VectorXd, 0, Eigen::InnerStride<>>;

constexpr double kPruneWeight = 1e-12;
constexpr double kArmijo = 1e-4;

std::uint64_t oracle_seed(std::uint64_t base, int iteration, int cls) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(iteration) * 64 +
                                                    static_cast<std::uint64_t>(cls) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void check_model(const AtomicModel& model, const SampleLoss& loss) {
  if (model.rows != loss.rows() || model.cols != loss.cols() ||
      model.parameter_classes() != loss.dim() ||
      model.per_class.size() != static_cast<std::size_t>(loss.dim()))
    throw DimensionMismatch("model does not match the observation dimensions");
}

bool same_atom(const Atom& a, const Atom& b) {
  const double cu = a.left.dot(b.left);
  const double cv = a.right.dot(b.right);
  return std::abs(cu) > 1.0 - 1e-10 && std::abs(cv) > 1.0 - 1e-10 && cu * cv > 0.0;
}

/// Solver state: the atomic model, the atom values at observed entries and
/// the current predictions there. Never touches unobserved entries.
class LiftedState {
 public:
  LiftedState(const SampleLoss& loss, AtomicModel model, double lambda)
      : loss_(loss), model_(std::move(model)), lambda_(lambda) {
    check_model(model_, loss_);
    const auto entries = static_cast<Eigen::Index>(loss_.entry_count());
    cache_.resize(loss_.dim());
    for (int j = 0; j < loss_.dim(); ++j) {
      const auto& atoms = model_.per_class[j];
      cache_[j].resize(entries, static_cast<Eigen::Index>(atoms.size()));
      for (std::size_t a = 0; a < atoms.size(); ++a)
        cache_[j].col(static_cast<Eigen::Index>(a)) = atom_values(atoms[a].left, atoms[a].right);
    }
    refresh_predictions();
  }

  const AtomicModel& model() const { return model_; }
  AtomicModel release() { return std::move(model_); }
  double objective() const { return objective_; }

  /// Gradient of the loss at the current predictions.
  std::vector<double> gradient() const {
    std::vector<double> grad(pred_.size());
    loss_.gradient(pred_, grad);
    return grad;
  }

  double support_gap(std::span<const double> grad) const {
    double worst = 0.0;
    for (int j = 0; j < loss_.dim(); ++j) {
      if (cache_[j].cols() == 0) continue;
      const Vector inner = cache_[j].transpose() * class_view(grad, j);
      for (Eigen::Index a = 0; a < inner.size(); ++a)
        worst = std::max(worst, std::abs(lambda_ + inner[a]));
    }
    return worst;
  }

  /// Nonnegative line search over one new atom per class. Returns the
  /// number of atoms appended.
  int atom_step(std::span<const std::optional<AtomDirection>> directions, const FitConfig& cfg);

  void correction(const FitConfig& cfg);

 private:
  Vector atom_values(const Vector& u, const Vector& v) const {
    const auto entries = loss_.entries();
    Vector d(static_cast<Eigen::Index>(entries.size()));
    for (std::size_t e = 0; e < entries.size(); ++e)
      d[static_cast<Eigen::Index>(e)] = u[entries[e].row] * v[entries[e].col];
    return d;
  }

  ConstStridedMap class_view(std::span<const double> buf, int j) const {
    return {buf.data() + j, static_cast<Eigen::Index>(loss_.entry_count()),
            Eigen::InnerStride<>(loss_.dim())};
  }
  StridedMap class_slot(std::vector<double>& buf, int j) const {
    return {buf.data() + j, static_cast<Eigen::Index>(loss_.entry_count()),
            Eigen::InnerStride<>(loss_.dim())};
  }

  Vector weights(int j) const {
    const auto& atoms = model_.per_class[j];
    Vector w(static_cast<Eigen::Index>(atoms.size()));
    for (std::size_t a = 0; a < atoms.size(); ++a) w[static_cast<Eigen::Index>(a)] = atoms[a].weight;
    return w;
  }

  void predictions_for(std::span<const Vector> w, std::vector<double>& pred) const {
    pred.assign(loss_.entry_count() * loss_.dim(), 0.0);
    for (int j = 0; j < loss_.dim(); ++j)
      if (cache_[j].cols() > 0) class_slot(pred, j) = cache_[j] * w[j];
  }

  void refresh_predictions() {
    std::vector<Vector> w;
    for (int j = 0; j < loss_.dim(); ++j) w.push_back(weights(j));
    predictions_for(w, pred_);
    objective_ = lambda_ * model_.atomic_mass() + loss_.value(pred_);
  }

  void merge_duplicates();
  void prune();
  void polish(std::vector<Vector>& x, const FitConfig& cfg) const;

  const SampleLoss& loss_;
  AtomicModel model_;
  double lambda_;
  std::vector<Matrix> cache_;  // per class: entries x atoms
  std::vector<double> pred_;
  double objective_ = 0.0;
};

int LiftedState::atom_step(std::span<const std::optional<AtomDirection>> directions,
                           const FitConfig& cfg) {
  const int dim = loss_.dim();
  if (directions.size() != static_cast<std::size_t>(dim))
    throw DimensionMismatch("atom_step needs one direction slot per parameter class");
  const std::size_t entries = loss_.entry_count();

  std::vector<double> dir(entries * dim, 0.0);
  std::vector<bool> active(dim, false);
  std::vector<Vector> columns(dim);
  for (int j = 0; j < dim; ++j) {
    if (!directions[j]) continue;
    const auto& d = *directions[j];
    if (d.u.size() != loss_.rows() || d.v.size() != loss_.cols())
      throw DimensionMismatch("atom direction has the wrong length");
    columns[j] = atom_values(d.u, d.v);
    class_slot(dir, j) = columns[j];
    active[j] = true;
  }

  std::vector<double> trial(entries * dim), grad(entries * dim);
  auto evaluate = [&](const Vector& b) {
    trial = pred_;
    for (int j = 0; j < dim; ++j)
      if (active[j] && b[j] != 0.0) class_slot(trial, j) += b[j] * columns[j];
    return lambda_ * b.sum() + loss_.value(trial);
  };

  Vector b = Vector::Zero(dim);
  for (int it = 0; it < cfg.line_search_max_iter; ++it) {
    trial = pred_;
    for (int j = 0; j < dim; ++j)
      if (active[j] && b[j] != 0.0) class_slot(trial, j) += b[j] * columns[j];
    const double h = lambda_ * b.sum() + loss_.gradient(trial, grad);

    Vector g = Vector::Zero(dim);
    double pg = 0.0;
    std::vector<int> free;
    for (int j = 0; j < dim; ++j) {
      if (!active[j]) continue;
      g[j] = lambda_ + class_view(std::span<const double>(grad), j).dot(columns[j]);
      const double pj = b[j] > 0.0 ? g[j] : std::min(g[j], 0.0);
      pg = std::max(pg, std::abs(pj));
      if (b[j] > 0.0 || g[j] < 0.0) free.push_back(j);
    }
    if (pg <= cfg.line_search_grad_tol || free.empty()) break;

    const Matrix hess = loss_.curvature(trial, dir);
    const auto nf = static_cast<Eigen::Index>(free.size());
    Matrix hf(nf, nf);
    Vector gf(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      gf[a] = g[free[a]];
      for (Eigen::Index c = 0; c < nf; ++c) hf(a, c) = hess(free[a], free[c]);
    }
    hf.diagonal().array() += 1e-14 * (1.0 + hf.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Matrix> ldlt(hf);
    Vector step = ldlt.info() == Eigen::Success ? Vector(ldlt.solve(-gf)) : Vector(-gf);
    if (!step.allFinite() || step.dot(gf) >= 0.0) step = -gf / std::max(hf.diagonal().maxCoeff(), 1e-12);

    bool accepted = false;
    double t = 1.0;
    for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
      Vector nb = b;
      for (Eigen::Index a = 0; a < nf; ++a) nb[free[a]] = std::max(0.0, b[free[a]] + t * step[a]);
      const double decrease = g.dot(nb - b);
      if (decrease >= 0.0) continue;
      const double hn = evaluate(nb);
      if (hn <= h + kArmijo * decrease) {
        b = nb;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  int appended = 0;
  for (int j = 0; j < dim; ++j) {
    if (!active[j] || !(b[j] > 0.0)) continue;
    model_.per_class[j].push_back({b[j], directions[j]->u, directions[j]->v});
    auto& c = cache_[j];
    c.conservativeResize(Eigen::NoChange, c.cols() + 1);
    c.col(c.cols() - 1) = columns[j];
    ++appended;
  }
  if (appended > 0) {
    for (int j = 0; j < dim; ++j)
      if (active[j] && b[j] > 0.0) class_slot(pred_, j) += b[j] * columns[j];
    objective_ = lambda_ * model_.atomic_mass() + loss_.value(pred_);
  }
  return appended;
}

void LiftedState::merge_duplicates() {
  for (int j = 0; j < loss_.dim(); ++j) {
    auto& atoms = model_.per_class[j];
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      for (std::size_t b = a + 1; b < atoms.size();) {
        if (same_atom(atoms[a], atoms[b])) {
          atoms[a].weight += atoms[b].weight;
          atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(b));
          auto& c = cache_[j];
          const Eigen::Index last = c.cols() - 1;
          for (Eigen::Index k = static_cast<Eigen::Index>(b); k < last; ++k) c.col(k) = c.col(k + 1);
          c.conservativeResize(Eigen::NoChange, last);
        } else {
          ++b;
        }
      }
    }
  }
}

void LiftedState::prune() {
  for (int j = 0; j < loss_.dim(); ++j) {
    auto& atoms = model_.per_class[j];
    auto& c = cache_[j];
    Eigen::Index keep = 0;
    std::vector<Atom> kept;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if (atoms[a].weight < kPruneWeight) continue;
      if (keep != static_cast<Eigen::Index>(a)) c.col(keep) = c.col(static_cast<Eigen::Index>(a));
      kept.push_back(std::move(atoms[a]));
      ++keep;
    }
    atoms = std::move(kept);
    c.conservativeResize(Eigen::NoChange, keep);
  }
}

// Projected Newton on the weights, with Hessian products through the
// entry values and a truncated CG solve on the free set.
void LiftedState::polish(std::vector<Vector>& x, const FitConfig& cfg) const {
  const int dim = loss_.dim();
  const std::size_t buf = loss_.entry_count() * dim;
  std::vector<double> pred, grad(buf), vin(buf), vout(buf);
  std::vector<Vector> g(dim);
  auto eval = [&](const std::vector<Vector>& w, bool with_grad) {
    predictions_for(w, pred);
    double mass = 0.0;
    for (const auto& v : w) mass += v.sum();
    if (!with_grad) return lambda_ * mass + loss_.value(pred);
    const double val = lambda_ * mass + loss_.gradient(pred, grad);
    for (int j = 0; j < dim; ++j) {
      g[j] = cache_[j].transpose() * class_view(std::span<const double>(grad), j);
      g[j].array() += lambda_;
    }
    return val;
  };

  for (int it = 0; it < cfg.line_search_max_iter; ++it) {
    const double f0 = eval(x, true);
    const std::vector<double> base = pred;
    std::vector<Vector> mask(dim), r(dim), s(dim), q(dim), d(dim);
    double pg = 0.0;
    for (int j = 0; j < dim; ++j) {
      mask[j] = Vector::Zero(x[j].size());
      for (Eigen::Index a = 0; a < x[j].size(); ++a) {
        const bool free = x[j][a] > 0.0 || g[j][a] < 0.0;
        if (free) {
          mask[j][a] = 1.0;
          pg = std::max(pg, std::abs(g[j][a]));
        }
      }
    }
    if (pg <= 1e-15) return;

    auto hess = [&](const std::vector<Vector>& v, std::vector<Vector>& out) {
      for (int j = 0; j < dim; ++j)
        class_slot(vin, j) = cache_[j] * v[j].cwiseProduct(mask[j]);
      loss_.hessian_product(base, vin, vout);
      for (int j = 0; j < dim; ++j)
        out[j] = (cache_[j].transpose() * class_view(std::span<const double>(vout), j))
                     .cwiseProduct(mask[j]);
    };
    auto dot = [&](const std::vector<Vector>& a, const std::vector<Vector>& b) {
      double t = 0.0;
      for (int j = 0; j < dim; ++j) t += a[j].dot(b[j]);
      return t;
    };

    for (int j = 0; j < dim; ++j) {
      s[j] = Vector::Zero(x[j].size());
      r[j] = -g[j].cwiseProduct(mask[j]);
      d[j] = r[j];
    }
    double rr = dot(r, r);
    const double stop = 1e-24 * rr;
    for (int k = 0; k < 200 && rr > stop; ++k) {
      hess(d, q);
      const double dq = dot(d, q);
      if (!(dq > 0.0)) break;
      const double alpha = rr / dq;
      for (int j = 0; j < dim; ++j) {
        s[j] += alpha * d[j];
        r[j] -= alpha * q[j];
      }
      const double rn = dot(r, r);
      for (int j = 0; j < dim; ++j) d[j] = r[j] + (rn / rr) * d[j];
      rr = rn;
    }
    if (dot(s, s) == 0.0) return;

    auto maxabs = [](const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; };
    bool accepted = false;
    double t = 1.0;
    std::vector<Vector> nx(dim);
    for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
      double decrease = 0.0, moved = 0.0;
      for (int j = 0; j < dim; ++j) {
        nx[j] = (x[j] + t * s[j]).cwiseMax(0.0);
        decrease += g[j].dot(nx[j] - x[j]);
        moved = std::max(moved, maxabs(nx[j] - x[j]));
      }
      if (moved == 0.0) return;
      if (decrease >= 0.0) continue;
      if (eval(nx, false) <= f0 + kArmijo * decrease) {
        accepted = true;
        break;
      }
    }
    if (!accepted) return;
    double step = 0.0;
    for (int j = 0; j < dim; ++j) {
      step = std::max(step, maxabs(nx[j] - x[j]));
      x[j] = nx[j];
    }
    if (step <= 1e-13) return;
  }
}

void LiftedState::correction(const FitConfig& cfg) {
  merge_duplicates();
  const int dim = loss_.dim();
  std::vector<Vector> x(dim), y(dim), xn(dim), gy(dim);
  for (int j = 0; j < dim; ++j) x[j] = weights(j);
  if (model_.atom_count() == 0) {
    refresh_predictions();
    return;
  }

  std::vector<double> pred, grad(loss_.entry_count() * dim);
  auto value_at = [&](std::span<const Vector> w) {
    predictions_for(w, pred);
    double mass = 0.0;
    for (const auto& v : w) mass += v.sum();
    return lambda_ * mass + loss_.value(pred);
  };
  auto gradient_at = [&](std::span<const Vector> w, std::vector<Vector>& out) {
    predictions_for(w, pred);
    double mass = 0.0;
    for (const auto& v : w) mass += v.sum();
    const double val = lambda_ * mass + loss_.gradient(pred, grad);
    for (int j = 0; j < dim; ++j) {
      out[j] = cache_[j].transpose() * class_view(std::span<const double>(grad), j);
      out[j].array() += lambda_;
    }
    return val;
  };

  double fx = value_at(x);
  y = x;
  double t = 1.0;
  double lip = std::max(loss_.smoothness(), 1e-12);
  for (int it = 0; it < cfg.correction_max_iter; ++it) {
    const double fy = gradient_at(y, gy);
    double fxn = 0.0;
    for (int bt = 0; bt < 100; ++bt) {
      double lin = 0.0, quad = 0.0;
      for (int j = 0; j < dim; ++j) {
        xn[j] = (y[j] - gy[j] / lip).cwiseMax(0.0);
        const Vector d = xn[j] - y[j];
        lin += gy[j].dot(d);
        quad += d.squaredNorm();
      }
      fxn = value_at(xn);
      if (fxn <= fy + lin + 0.5 * lip * quad + 1e-15 * std::abs(fy)) break;
      lip *= 2.0;
    }
    if (fxn > fx) {
      // Momentum overshoot: restart from the last accepted iterate.
      if (t == 1.0) break;
      t = 1.0;
      y = x;
      continue;
    }
    const double change = (fx - fxn) / std::max(1.0, std::abs(fxn));
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (int j = 0; j < dim; ++j) {
      y[j] = xn[j] + ((t - 1.0) / tn) * (xn[j] - x[j]);
      y[j] = y[j].cwiseMax(0.0);
    }
    x = xn;
    fx = fxn;
    t = tn;
    lip *= 0.9;
    if (change <= cfg.correction_rel_tol) break;
  }
  polish(x, cfg);

  for (int j = 0; j < dim; ++j) {
    auto& atoms = model_.per_class[j];
    for (std::size_t a = 0; a < atoms.size(); ++a)
      atoms[a].weight = x[j][static_cast<Eigen::Index>(a)];
  }
  prune();
  refresh_predictions();
}

std::vector<std::optional<SingularTriple>> class_oracles(
    std::span<const SparseMatrix> grads, const FitConfig& cfg, int iteration,
    std::span<const std::optional<Vector>> starts = {}) {
  std::vector<std::optional<SingularTriple>> out(grads.size());
  for (std::size_t j = 0; j < grads.size(); ++j) {
    SparseMatrix neg = grads[j];
    for (auto& e : neg.entries) e.value = -e.value;
    const std::optional<Vector> none;
    try {
      out[j] = top_singular_pair(neg, oracle_seed(cfg.seed, iteration, static_cast<int>(j)),
                                 cfg.svd_tol, cfg.svd_max_iter, j < starts.size() ? starts[j] : none);
    } catch (const ZeroMatrixError&) {
      out[j] = std::nullopt;
    }
  }
  return out;
}

double descent_gap(std::span<const SparseMatrix> grads,
                   std::span<const std::optional<SingularTriple>> oracles, double lambda) {
  double best = 0.0;
  for (std::size_t j = 0; j < grads.size(); ++j)
    if (oracles[j]) best = std::min(best, grads[j].bilinear(oracles[j]->u, oracles[j]->v));
  return lambda + best;
}

}  // namespace

// ---------------------------------------------------------------------------

double objective(const AtomicModel& model, const SampleLoss& loss, double lambda) {
  check_model(model, loss);
  return lambda * model.atomic_mass() + loss.value(predictions_at(loss, model));
}

double objective(const AtomicModel& model, const ObservationSet& obs, double lambda) {
  return objective(model, MultinomialLogitLoss(obs), lambda);
}

AtomicModel atom_step(const AtomicModel& model, const SampleLoss& loss, double lambda,
                      std::span<const std::optional<AtomDirection>> directions,
                      const FitConfig& cfg) {
  LiftedState state(loss, model, lambda);
  state.atom_step(directions, cfg);
  return state.release();
}

AtomicModel atom_step(const AtomicModel& model, const ObservationSet& obs, double lambda,
                      std::span<const std::optional<AtomDirection>> directions,
                      const FitConfig& cfg) {
  return atom_step(model, MultinomialLogitLoss(obs), lambda, directions, cfg);
}

AtomicModel correction_step(const AtomicModel& model, const SampleLoss& loss, double lambda,
                            const FitConfig& cfg) {
  LiftedState state(loss, model, lambda);
  state.correction(cfg);
  return state.release();
}

AtomicModel correction_step(const AtomicModel& model, const ObservationSet& obs, double lambda,
                            const FitConfig& cfg) {
  return correction_step(model, MultinomialLogitLoss(obs), lambda, cfg);
}

DualityCertificate duality_certificate(const AtomicModel& model, const SampleLoss& loss,
                                       const FitConfig& cfg) {
  LiftedState state(loss, model, cfg.lambda);
  const auto grad = state.gradient();
  const auto mats = gradient_matrices(loss, grad);
  const auto oracles = class_oracles(mats, cfg, -1);
  return {descent_gap(mats, oracles, cfg.lambda), state.support_gap(grad)};
}

DualityCertificate duality_certificate(const AtomicModel& model, const ObservationSet& obs,
                                       const FitConfig& cfg) {
  return duality_certificate(model, MultinomialLogitLoss(obs), cfg);
}

FitResult fit_lifted(const SampleLoss& loss, int classes, const FitConfig& cfg,
                     bool allow_zero_lambda) {
  cfg.validate(allow_zero_lambda);
  if (classes - 1 != loss.dim()) throw DimensionMismatch("class count does not match the loss");
  LiftedState state(loss, AtomicModel(loss.rows(), loss.cols(), classes), cfg.lambda);

  FitReport report;
  report.objective_trace.push_back(state.objective());
  report.atom_counts.push_back(0);
  report.stop_reason = StopReason::max_iters;

  // Power iterations start from the previous right singular vectors; a
  // stop is only accepted once cold-started oracles confirm it.
  std::vector<std::optional<Vector>> warm(loss.dim());
  int flat = 0;
  int k = 0;
  while (k < cfg.max_iters) {
    const double before = state.objective();
    const auto grad = state.gradient();
    const auto mats = gradient_matrices(loss, grad);
    auto oracles = class_oracles(mats, cfg, k, warm);
    double g = descent_gap(mats, oracles, cfg.lambda);
    if (g > -cfg.epsilon / 2.0 && state.support_gap(grad) <= cfg.epsilon) {
      oracles = class_oracles(mats, cfg, -1);
      g = descent_gap(mats, oracles, cfg.lambda);
    }
    for (std::size_t j = 0; j < oracles.size(); ++j)
      if (oracles[j]) warm[j] = oracles[j]->v;

    if (g <= -cfg.epsilon / 2.0) {
      std::vector<std::optional<AtomDirection>> dirs(oracles.size());
      for (std::size_t j = 0; j < oracles.size(); ++j)
        if (oracles[j]) dirs[j] = AtomDirection{oracles[j]->u, oracles[j]->v};
      state.atom_step(dirs, cfg);
    } else {
      if (state.support_gap(grad) <= cfg.epsilon) {
        report.stop_reason = StopReason::duality_gap_met;
        report.converged = true;
        break;
      }
      state.correction(cfg);
    }
    ++k;
    report.objective_trace.push_back(state.objective());
    report.atom_counts.push_back(0);

    const double progress = before - state.objective();
    flat = progress <= 1e-15 * std::max(1.0, std::abs(before)) ? flat + 1 : 0;
    if (flat >= 5) {
      report.stop_reason = StopReason::stalled;
      break;
    }
  }
  report.iterations = k;
  return {state.release(), std::move(report)};
}

FitResult fit(const ObservationSet& obs, const FitConfig& cfg) {
  cfg.validate();
  obs.validate();
  if (obs.empty()) throw InvalidArgument("fit needs at least one observation");
  MultinomialLogitLoss loss(obs);
  return fit_lifted(loss, obs.classes, cfg);
}

double zero_model_lambda(const SampleLoss& loss, const FitConfig& cfg) {
  std::vector<double> pred(loss.entry_count() * loss.dim(), 0.0), grad(pred.size());
  loss.gradient(pred, grad);
  const auto mats = gradient_matrices(loss, grad);
  double best = 0.0;
  for (const auto& m : mats) {
    try {
      best = std::max(best, top_singular_pair(m, cfg.seed, cfg.svd_tol, cfg.svd_max_iter).sigma);
    } catch (const ZeroMatrixError&) {
    }
  }
  return best;
}

}  // namespace famc
