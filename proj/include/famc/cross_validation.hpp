#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "famc/core.hpp"

namespace famc {

enum class Link { logit, gaussian };

/// Grid size ceil(0.8 ln n), at least 2.
int lambda_grid_size(std::size_t n);

/// Geometric grid of lambda_grid_size(n) points from lambda_max / 1000 up
/// to lambda_max, ascending.
std::vector<double> lambda_grid(double lambda_max, std::size_t n);

/// Largest useful lambda for the data: the zero model is optimal at and
/// above it.
double lambda_max(const ObservationSet& obs, Link link, std::span<const double> label_values = {});

struct Fold {
  ObservationSet train;
  ObservationSet validation;
};

/// Seeded shuffle, then `folds` contiguous validation blocks whose sizes
/// differ by at most one.
std::vector<Fold> kfold(const ObservationSet& obs, int folds, std::uint64_t seed);

struct CvRow {
  double lambda = 0.0;
  double mean_val_loss = 0.0;
  double sd = 0.0;
};

struct CvResult {
  std::vector<CvRow> rows;
  double chosen_lambda = 0.0;
};

/// Validation loss of a model fitted with `lambda` on each fold: the
/// multinomial negative log-likelihood for logit, half the mean squared
/// error for gaussian. Chooses the grid point with the smallest mean
/// (earliest on ties).
CvResult cross_validate(const ObservationSet& obs, Link link, int folds, const FitConfig& base,
                        std::span<const double> label_values = {});

/// Same, on a caller-supplied grid.
CvResult cross_validate(const ObservationSet& obs, Link link, int folds, const FitConfig& base,
                        std::span<const double> grid, std::span<const double> label_values);

}  // namespace famc
