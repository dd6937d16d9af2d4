#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "famc/cross_validation.hpp"
#include "famc/errors.hpp"
#include "famc/gaussian.hpp"
#include "famc/link.hpp"
#include "famc/solver.hpp"
#include "support.hpp"

using namespace famc;
using namespace famc::testing;

TEST(LambdaGrid, SizeRule) {
  EXPECT_EQ(lambda_grid_size(100000), 10);
  EXPECT_EQ(lambda_grid_size(1000), 6);
  EXPECT_EQ(lambda_grid_size(1), 2);
}

TEST(LambdaGrid, GeometricAscending) {
  const auto g = lambda_grid(2.0, 1000);
  ASSERT_EQ(g.size(), 6u);
  EXPECT_NEAR(g.front(), 2e-3, 1e-15);
  EXPECT_NEAR(g.back(), 2.0, 1e-15);
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(g[k] / g[k - 1], std::pow(1000.0, 0.2), 1e-12);
}

TEST(LambdaMax, ZeroModelBoundary) {
  const auto obs = random_obs(6, 7, 3, 150, 4);
  const double top = lambda_max(obs, Link::logit);
  FitConfig cfg;
  cfg.lambda = top * 1.001;
  EXPECT_EQ(fit(obs, cfg).model.atom_count(), 0u);
  cfg.lambda = top * 0.9;
  EXPECT_GT(fit(obs, cfg).model.atom_count(), 0u);

  const double gtop = lambda_max(obs, Link::gaussian);
  cfg.lambda = gtop * 1.001;
  EXPECT_TRUE(fit_gaussian(obs, cfg).model.atoms.empty());
  cfg.lambda = gtop * 0.9;
  EXPECT_FALSE(fit_gaussian(obs, cfg).model.atoms.empty());
}

TEST(Kfold, PartitionsSamples) {
  const auto obs = random_obs(8, 8, 2, 103, 2);
  const auto folds = kfold(obs, 5, 9);
  ASSERT_EQ(folds.size(), 5u);
  std::vector<std::tuple<int, int, int>> all, seen;
  for (const auto& s : obs.samples) all.push_back({s.row, s.col, s.label});
  for (const auto& f : folds) {
    EXPECT_GE(f.validation.samples.size(), 20u);
    EXPECT_LE(f.validation.samples.size(), 21u);
    EXPECT_EQ(f.train.samples.size() + f.validation.samples.size(), obs.samples.size());
    EXPECT_EQ(f.train.rows, obs.rows);
    EXPECT_EQ(f.train.classes, obs.classes);
    for (const auto& s : f.validation.samples) seen.push_back({s.row, s.col, s.label});
  }
  std::sort(all.begin(), all.end());
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(all, seen);
  EXPECT_THROW(kfold(obs, 1, 0), InvalidArgument);
}

TEST(CrossValidate, ChoosesGridMinimum) {
  const auto obs = random_obs(6, 6, 3, 200, 5);
  FitConfig base;
  const auto r = cross_validate(obs, Link::logit, 3, base);
  ASSERT_EQ(r.rows.size(), static_cast<std::size_t>(lambda_grid_size(200)));
  const auto best = std::min_element(r.rows.begin(), r.rows.end(), [](const CvRow& a, const CvRow& b) {
    return a.mean_val_loss < b.mean_val_loss;
  });
  EXPECT_EQ(r.chosen_lambda, best->lambda);
  for (const auto& row : r.rows) EXPECT_GE(row.sd, 0.0);
}

TEST(CrossValidate, CellMatchesIndependentFit) {
  const auto obs = random_obs(5, 6, 2, 120, 6);
  FitConfig base;
  base.seed = 3;
  const std::vector<double> grid{0.01, 0.05};
  const auto r = cross_validate(obs, Link::logit, 4, base, grid, {});
  const auto folds = kfold(obs, 4, base.seed);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double sum = 0.0;
    for (const auto& f : folds) {
      FitConfig cfg = base;
      cfg.lambda = grid[k];
      const auto m = fit(f.train, cfg).model;
      sum += negative_log_likelihood(m, f.validation);
    }
    EXPECT_NEAR(r.rows[k].mean_val_loss, sum / 4, 1e-12);
  }
}

TEST(CrossValidate, GaussianLossIsHalfMse) {
  const auto obs = random_obs(5, 5, 3, 100, 7);
  FitConfig base;
  const std::vector<double> grid{0.05};
  const auto r = cross_validate(obs, Link::gaussian, 2, base, grid, {});
  const auto folds = kfold(obs, 2, base.seed);
  double sum = 0.0;
  for (const auto& f : folds) {
    FitConfig cfg = base;
    cfg.lambda = 0.05;
    const auto g = fit_gaussian(f.train, cfg).model;
    std::vector<EntryIndex> pairs;
    for (const auto& s : f.validation.samples) pairs.push_back({s.row, s.col});
    const Vector x = g.values_at(pairs);
    double ss = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double d = f.validation.samples[i].label - x[static_cast<Eigen::Index>(i)];
      ss += d * d;
    }
    sum += 0.5 * ss / static_cast<double>(pairs.size());
  }
  EXPECT_NEAR(r.rows[0].mean_val_loss, sum / 2, 1e-12);
}

TEST(CrossValidate, Deterministic) {
  const auto obs = random_obs(5, 5, 2, 80, 8);
  FitConfig base;
  const auto a = cross_validate(obs, Link::logit, 3, base);
  const auto b = cross_validate(obs, Link::logit, 3, base);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) EXPECT_EQ(a.rows[k].mean_val_loss, b.rows[k].mean_val_loss);
  EXPECT_EQ(a.chosen_lambda, b.chosen_lambda);
}
