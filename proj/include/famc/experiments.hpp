#pragma once

// Simulation studies: ground truth -> sampled observations -> lambda by
// cross-validation -> logit and Gaussian fits -> KL against the truth and
// prediction error on fresh test draws.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "famc/core.hpp"
#include "famc/cross_validation.hpp"

namespace famc {

enum class Experiment { fig1, table2, table3 };

std::string_view to_string(Experiment e);
std::optional<Experiment> parse_experiment(std::string_view name);

/// floor(full * scale), guarded against representation error, at least 1.
int scaled_dimension(int full, double scale);

constexpr int kPaperRows = 900;
constexpr int kPaperCols = 1350;

/// One (classes, observation count) setting of an experiment.
struct ExperimentCell {
  int classes = 2;
  long long n = 0;
  /// n / (rows * cols)
  double fraction = 0.0;
};

struct ReproduceOptions {
  Experiment experiment = Experiment::table2;
  double scale = 1.0;
  int seeds = 5;
  int folds = 5;
  int rank = 5;
  double gamma_scale = 1.0;
  /// Fresh test draws per run for the prediction error.
  long long test_size = 20000;
  /// Worker threads; runs are independent and results land in fixed slots.
  int threads = 1;
  FitConfig base;
  /// Replaces the experiment's default cells when non-empty.
  std::vector<ExperimentCell> cells;
};

/// Default cells. fig1: p in {2, 5} at sampling fractions 0.05, 0.1 and
/// 0.2. table2 (p = 2) and table3 (p = 5): the 10, 50, 100 and 500
/// thousand observation columns scaled by 0.6 * scale, i.e. divided by
/// ten at scale 1/6.
std::vector<ExperimentCell> default_cells(Experiment e, double scale);

struct RunResult {
  int classes = 2;
  long long n = 0;
  double fraction = 0.0;
  int seed = 0;
  Link method = Link::logit;
  double lambda = 0.0;
  double kl = 0.0;
  double hellinger_sq = 0.0;
  double prediction_error = 0.0;
  int iterations = 0;
  std::size_t atoms = 0;
  std::string stop_reason;
};

struct SummaryRow {
  int classes = 2;
  long long n = 0;
  double fraction = 0.0;
  Link method = Link::logit;
  int seeds = 0;
  double kl_mean = 0.0;
  double kl_sd = 0.0;
  double prediction_error_mean = 0.0;
  double prediction_error_sd = 0.0;
  double lambda_mean = 0.0;
};

struct ReproduceResult {
  Experiment experiment = Experiment::table2;
  int rows = 0;
  int cols = 0;
  std::vector<RunResult> runs;
  std::vector<SummaryRow> summary;
};

std::string_view to_string(Link link);

/// Seeds for one run. The truth depends on (seed, classes) only, so every
/// observation count of a seed is drawn from the same matrix.
struct RunSeeds {
  std::uint64_t truth;
  std::uint64_t sample;
  std::uint64_t test;
  std::uint64_t cv;
};
RunSeeds run_seeds(int seed, int classes, long long n);

/// Runs one (cell, seed) for both methods: logit first, then Gaussian.
std::vector<RunResult> run_cell(const ExperimentCell& cell, int seed, int rows, int cols,
                                const ReproduceOptions& options);

/// Runs every (cell, seed) pair, `threads` at a time. Progress goes to
/// `log` when given.
ReproduceResult reproduce(const ReproduceOptions& options, std::ostream* log = nullptr);

/// Mean and sample standard deviation over seeds per (classes, n, method).
std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs);

std::string runs_csv(const ReproduceResult& result);
std::string summary_csv(const ReproduceResult& result);

/// Writes <experiment>_runs.csv and <experiment>_summary.csv into dir.
void write_reproduce(const std::filesystem::path& dir, const ReproduceResult& result);

}  // namespace famc
