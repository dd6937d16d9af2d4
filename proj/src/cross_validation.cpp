#include "famc/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "famc/errors.hpp"
#include "famc/gaussian.hpp"
#include "famc/link.hpp"
#include "famc/loss.hpp"
#include "famc/solver.hpp"

namespace famc {

int lambda_grid_size(std::size_t n) {
  if (n == 0) throw InvalidArgument("grid needs at least one sample");
  return std::max(2, static_cast<int>(std::ceil(0.8 * std::log(static_cast<double>(n)))));
}

std::vector<double> lambda_grid(double lambda_max, std::size_t n) {
  if (!(lambda_max > 0.0)) throw InvalidArgument("lambda_max must be positive");
  const int size = lambda_grid_size(n);
  const double lo = std::log(lambda_max / 1000.0), hi = std::log(lambda_max);
  std::vector<double> grid(size);
  for (int i = 0; i < size; ++i) grid[i] = std::exp(lo + (hi - lo) * i / (size - 1));
  grid.back() = lambda_max;
  return grid;
}

double lambda_max(const ObservationSet& obs, Link link, std::span<const double> label_values) {
  if (link == Link::logit) return zero_model_lambda(MultinomialLogitLoss(obs));
  const auto levels = label_values.empty() ? default_label_values(obs.classes)
                                           : std::vector<double>(label_values.begin(), label_values.end());
  return zero_model_lambda(SquaredLoss(obs, levels));
}

std::vector<Fold> kfold(const ObservationSet& obs, int folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument("need at least two folds");
  if (obs.size() < static_cast<std::size_t>(folds)) throw InvalidArgument("fewer samples than folds");
  std::vector<std::size_t> order(obs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Fold> out(folds);
  for (auto& f : out) {
    for (auto* part : {&f.train, &f.validation}) {
      part->rows = obs.rows;
      part->cols = obs.cols;
      part->classes = obs.classes;
    }
  }
  const std::size_t n = obs.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto fold = static_cast<int>(i * folds / n);
    for (int f = 0; f < folds; ++f)
      (f == fold ? out[f].validation : out[f].train).samples.push_back(obs.samples[order[i]]);
  }
  return out;
}

namespace {

double validation_loss(const Fold& fold, Link link, const FitConfig& cfg,
                       std::span<const double> levels) {
  if (link == Link::logit) {
    const auto fitted = fit(fold.train, cfg);
    return negative_log_likelihood(fitted.model, fold.validation);
  }
  const auto fitted = fit_gaussian(fold.train, cfg, levels);
  SquaredLoss loss(fold.validation, levels);
  AtomicModel m(fold.train.rows, fold.train.cols, 2);
  m.per_class[0] = fitted.model.atoms;
  return loss.value(predictions_at(loss, m));
}

}  // namespace

CvResult cross_validate(const ObservationSet& obs, Link link, int folds, const FitConfig& base,
                        std::span<const double> grid, std::span<const double> label_values) {
  if (grid.empty()) throw InvalidArgument("empty lambda grid");
  const auto levels = label_values.empty() ? default_label_values(obs.classes)
                                           : std::vector<double>(label_values.begin(), label_values.end());
  const auto parts = kfold(obs, folds, base.seed);
  // Every (lambda, fold) fit starts from the zero model, so cells are
  // independent of each other and of the grid order.
  CvResult result;
  for (double lambda : grid) {
    FitConfig cfg = base;
    cfg.lambda = lambda;
    std::vector<double> losses;
    for (const auto& part : parts) losses.push_back(validation_loss(part, link, cfg, levels));
    const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / losses.size();
    double ss = 0.0;
    for (double l : losses) ss += (l - mean) * (l - mean);
    result.rows.push_back({lambda, mean, std::sqrt(ss / (losses.size() - 1))});
  }
  const auto best = std::min_element(result.rows.begin(), result.rows.end(),
                                     [](const CvRow& a, const CvRow& b) {
                                       return a.mean_val_loss < b.mean_val_loss;
                                     });
  result.chosen_lambda = best->lambda;
  return result;
}

CvResult cross_validate(const ObservationSet& obs, Link link, int folds, const FitConfig& base,
                        std::span<const double> label_values) {
  const double top = lambda_max(obs, link, label_values);
  if (!(top > 0.0)) throw InvalidArgument("data gradient vanishes at zero; no lambda grid");
  const auto grid = lambda_grid(top, obs.size());
  return cross_validate(obs, link, folds, base, grid, label_values);
}

}  // namespace famc
