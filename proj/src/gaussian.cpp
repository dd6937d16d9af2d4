#include "famc/gaussian.hpp"

#include <cmath>
#include <limits>

#include "famc/errors.hpp"
#include "famc/loss.hpp"

namespace famc {

namespace {

double normal_cdf(double z) {
  if (z == std::numeric_limits<double>::infinity()) return 1.0;
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

void check_levels(std::span<const double> levels, int classes) {
  if (levels.size() != static_cast<std::size_t>(classes))
    throw DimensionMismatch("label encoding must hold one value per class");
  for (std::size_t j = 1; j < levels.size(); ++j)
    if (!(levels[j] > levels[j - 1]))
      throw InvalidArgument("label encoding must be strictly increasing");
}

}  // namespace

std::vector<double> default_label_values(int classes) {
  std::vector<double> v(classes);
  for (int j = 0; j < classes; ++j) v[j] = j + 1.0;
  return v;
}

Vector GaussianModel::values_at(std::span<const EntryIndex> pairs) const {
  AtomicModel m(rows, cols, 2);
  m.per_class[0] = atoms;
  return evaluate_entries(m, pairs).col(0);
}

GaussianFit fit_gaussian(const ObservationSet& obs, const FitConfig& cfg,
                         std::span<const double> label_values) {
  cfg.validate(/*allow_zero_lambda=*/true);
  obs.validate();
  if (obs.empty()) throw InvalidArgument("fit_gaussian needs at least one observation");
  std::vector<double> levels = label_values.empty()
                                   ? default_label_values(obs.classes)
                                   : std::vector<double>(label_values.begin(), label_values.end());
  check_levels(levels, obs.classes);

  SquaredLoss loss(obs, levels);
  auto [atomic, report] = fit_lifted(loss, 2, cfg, /*allow_zero_lambda=*/true);

  GaussianFit out;
  out.report = std::move(report);
  auto& model = out.model;
  model.rows = obs.rows;
  model.cols = obs.cols;
  model.classes = obs.classes;
  model.lambda = cfg.lambda;
  model.atoms = std::move(atomic.per_class[0]);
  model.label_values = levels;

  std::vector<EntryIndex> pairs;
  pairs.reserve(obs.size());
  for (const auto& s : obs.samples) pairs.push_back({s.row, s.col});
  const Vector fitted = model.values_at(pairs);
  double rss = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double r = levels[obs.samples[i].label - 1] - fitted[static_cast<Eigen::Index>(i)];
    rss += r * r;
  }
  model.sigma_hat = std::max(std::sqrt(rss / static_cast<double>(obs.size())), kSigmaFloor);
  return out;
}

Vector gaussian_bin_probs(double value, double sigma, std::span<const double> levels) {
  const auto p = static_cast<Eigen::Index>(levels.size());
  Vector out(p);
  double lower = 0.0;  // F at the previous edge; first edge is -inf
  for (Eigen::Index j = 0; j < p; ++j) {
    const double upper =
        j + 1 == p ? 1.0 : normal_cdf((0.5 * (levels[j] + levels[j + 1]) - value) / sigma);
    out[j] = std::max(upper - lower, 0.0);
    lower = upper;
  }
  return out;
}

std::vector<Vector> gaussian_class_probs(const GaussianModel& model,
                                         std::span<const EntryIndex> pairs) {
  if (model.classes < 2) throw InvalidArgument("need at least two classes");
  const auto levels = model.label_values.empty() ? default_label_values(model.classes)
                                                 : model.label_values;
  check_levels(levels, model.classes);
  const Vector values = model.values_at(pairs);
  std::vector<Vector> out;
  out.reserve(pairs.size());
  for (Eigen::Index i = 0; i < values.size(); ++i)
    out.push_back(gaussian_bin_probs(values[i], model.sigma_hat, levels));
  return out;
}

ProbabilityField gaussian_field(const GaussianModel& model) {
  ProbabilityField field(model.rows, model.cols, model.classes);
  std::vector<EntryIndex> pairs;
  pairs.reserve(static_cast<std::size_t>(model.rows) * model.cols);
  for (int k = 0; k < model.rows; ++k)
    for (int l = 0; l < model.cols; ++l) pairs.push_back({k, l});
  const auto probs = gaussian_class_probs(model, pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto dst = field.at(pairs[i].row, pairs[i].col);
    for (int j = 0; j < model.classes; ++j) dst[j] = probs[i][j];
  }
  return field;
}

}  // namespace famc
