#include "famc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include "famc/data_io.hpp"
#include "famc/errors.hpp"
#include "famc/gaussian.hpp"
#include "famc/link.hpp"
#include "famc/metrics.hpp"
#include "famc/simulate.hpp"
#include "famc/solver.hpp"

namespace famc {

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::fig1:
      return "fig1";
    case Experiment::table2:
      return "table2";
    case Experiment::table3:
      return "table3";
  }
  return "unknown";
}

std::optional<Experiment> parse_experiment(std::string_view name) {
  for (auto e : {Experiment::fig1, Experiment::table2, Experiment::table3})
    if (name == to_string(e)) return e;
  return std::nullopt;
}

std::string_view to_string(Link link) { return link == Link::logit ? "logit" : "gaussian"; }

int scaled_dimension(int full, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("scale must be positive");
  return std::max(1, static_cast<int>(std::floor(full * scale + 1e-6)));
}

std::vector<ExperimentCell> default_cells(Experiment e, double scale) {
  const double entries = static_cast<double>(scaled_dimension(kPaperRows, scale)) *
                         scaled_dimension(kPaperCols, scale);
  std::vector<ExperimentCell> cells;
  if (e == Experiment::fig1) {
    for (int p : {2, 5}) {
      for (double f : {0.05, 0.1, 0.2}) {
        const auto n = std::max(1LL, std::llround(f * entries));
        cells.push_back({p, n, n / entries});
      }
    }
    return cells;
  }
  const int p = e == Experiment::table2 ? 2 : 5;
  for (double paper_n : {1e4, 5e4, 1e5, 5e5}) {
    const auto n = std::max(1LL, std::llround(paper_n * 0.6 * scale));
    cells.push_back({p, n, n / entries});
  }
  return cells;
}

namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

RunSeeds run_seeds(int seed, int classes, long long n) {
  const auto s = static_cast<std::uint64_t>(seed);
  const auto p = static_cast<std::uint64_t>(classes);
  const auto nn = static_cast<std::uint64_t>(n);
  return {mix(mix(s) ^ p), mix(mix(s ^ 0x51ULL) ^ mix(p) ^ mix(nn)),
          mix(mix(s ^ 0x7EULL) ^ mix(p) ^ mix(nn + 1)), mix(mix(s ^ 0xC5ULL) ^ mix(p) ^ mix(nn + 2))};
}

std::vector<RunResult> run_cell(const ExperimentCell& cell, int seed, int rows, int cols,
                                const ReproduceOptions& options) {
  if (cell.n < options.folds) throw InvalidArgument("cell has fewer observations than folds");
  const auto seeds = run_seeds(seed, cell.classes, cell.n);
  const auto truth = make_ground_truth(rows, cols, cell.classes, options.rank,
                                       options.gamma_scale, seeds.truth);
  const auto dist = make_sampling(SamplingKind::uniform, rows, cols, 1.0, 0);
  const auto train = sample_observations(truth, dist, static_cast<std::size_t>(cell.n), seeds.sample);
  const auto test =
      sample_observations(truth, dist, static_cast<std::size_t>(options.test_size), seeds.test);
  const auto truth_field = logit_field(truth);

  FitConfig base = options.base;
  base.seed = seeds.cv;

  std::vector<RunResult> out;
  for (Link method : {Link::logit, Link::gaussian}) {
    RunResult r;
    r.classes = cell.classes;
    r.n = cell.n;
    r.fraction = cell.fraction;
    r.seed = seed;
    r.method = method;
    const auto cv = cross_validate(train, method, options.folds, base);
    FitConfig cfg = base;
    cfg.lambda = cv.chosen_lambda;
    r.lambda = cv.chosen_lambda;
    ProbabilityField est;
    FitReport report;
    if (method == Link::logit) {
      auto fitted = fit(train, cfg);
      est = logit_field(fitted.model);
      r.atoms = fitted.model.atom_count();
      report = std::move(fitted.report);
    } else {
      auto fitted = fit_gaussian(train, cfg);
      est = gaussian_field(fitted.model);
      r.atoms = fitted.model.atoms.size();
      report = std::move(fitted.report);
    }
    r.iterations = report.iterations;
    r.stop_reason = std::string(to_string(report.stop_reason));
    r.kl = kl_divergence(truth_field, est);
    r.hellinger_sq = hellinger_sq(truth_field, est);
    r.prediction_error = prediction_error(est, test);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs) {
  using Key = std::tuple<int, long long, int>;
  std::map<Key, std::vector<const RunResult*>> groups;
  for (const auto& r : runs) groups[{r.classes, r.n, static_cast<int>(r.method)}].push_back(&r);
  std::vector<SummaryRow> rows;
  for (const auto& [key, group] : groups) {
    std::vector<double> kl, pe, lam;
    for (const auto* r : group) {
      kl.push_back(r->kl);
      pe.push_back(r->prediction_error);
      lam.push_back(r->lambda);
    }
    SummaryRow s;
    s.classes = std::get<0>(key);
    s.n = std::get<1>(key);
    s.fraction = group.front()->fraction;
    s.method = static_cast<Link>(std::get<2>(key));
    s.seeds = static_cast<int>(group.size());
    s.kl_mean = mean_of(kl);
    s.kl_sd = sd_of(kl);
    s.prediction_error_mean = mean_of(pe);
    s.prediction_error_sd = sd_of(pe);
    s.lambda_mean = mean_of(lam);
    rows.push_back(s);
  }
  return rows;
}

ReproduceResult reproduce(const ReproduceOptions& options, std::ostream* log) {
  if (options.seeds < 1) throw InvalidArgument("need at least one seed");
  if (options.threads < 1) throw InvalidArgument("need at least one thread");
  if (options.test_size < 1) throw InvalidArgument("test size must be positive");
  ReproduceResult result;
  result.experiment = options.experiment;
  result.rows = scaled_dimension(kPaperRows, options.scale);
  result.cols = scaled_dimension(kPaperCols, options.scale);
  const auto cells =
      options.cells.empty() ? default_cells(options.experiment, options.scale) : options.cells;

  struct Job {
    ExperimentCell cell;
    int seed;
  };
  std::vector<Job> jobs;
  for (const auto& c : cells)
    for (int s = 0; s < options.seeds; ++s) jobs.push_back({c, s});

  std::vector<std::vector<RunResult>> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex, error_mutex;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      {
        std::lock_guard lock(error_mutex);
        if (error) return;
      }
      try {
        const auto t0 = std::chrono::steady_clock::now();
        slots[i] = run_cell(jobs[i].cell, jobs[i].seed, result.rows, result.cols, options);
        if (log) {
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          std::lock_guard lock(log_mutex);
          *log << "[" << to_string(options.experiment) << "] p=" << jobs[i].cell.classes
               << " n=" << jobs[i].cell.n << " seed=" << jobs[i].seed << " done in " << secs
               << " s\n";
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };

  const int workers = std::min<int>(options.threads, static_cast<int>(jobs.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  for (auto& s : slots)
    for (auto& r : s) result.runs.push_back(std::move(r));
  result.summary = summarize(result.runs);
  return result;
}

std::string runs_csv(const ReproduceResult& result) {
  std::string out =
      "experiment,rows,cols,classes,n,fraction,seed,method,lambda,kl,hellinger_sq,"
      "prediction_error,iterations,atoms,stop_reason\n";
  for (const auto& r : result.runs) {
    out += std::string(to_string(result.experiment)) + "," + std::to_string(result.rows) + "," +
           std::to_string(result.cols) + "," + std::to_string(r.classes) + "," +
           std::to_string(r.n) + "," + fmt(r.fraction) + "," + std::to_string(r.seed) + "," +
           std::string(to_string(r.method)) + "," + fmt(r.lambda) + "," + fmt(r.kl) + "," +
           fmt(r.hellinger_sq) + "," + fmt(r.prediction_error) + "," +
           std::to_string(r.iterations) + "," + std::to_string(r.atoms) + "," + r.stop_reason +
           "\n";
  }
  return out;
}

std::string summary_csv(const ReproduceResult& result) {
  std::string out =
      "experiment,rows,cols,classes,n,fraction,method,seeds,kl_mean,kl_sd,"
      "prediction_error_mean,prediction_error_sd,lambda_mean\n";
  for (const auto& s : result.summary) {
    out += std::string(to_string(result.experiment)) + "," + std::to_string(result.rows) + "," +
           std::to_string(result.cols) + "," + std::to_string(s.classes) + "," +
           std::to_string(s.n) + "," + fmt(s.fraction) + "," + std::string(to_string(s.method)) +
           "," + std::to_string(s.seeds) + "," + fmt(s.kl_mean) + "," + fmt(s.kl_sd) + "," +
           fmt(s.prediction_error_mean) + "," + fmt(s.prediction_error_sd) + "," +
           fmt(s.lambda_mean) + "\n";
  }
  return out;
}

void write_reproduce(const std::filesystem::path& dir, const ReproduceResult& result) {
  std::filesystem::create_directories(dir);
  const std::string stem(to_string(result.experiment));
  write_file_atomic(dir / (stem + "_runs.csv"), runs_csv(result));
  write_file_atomic(dir / (stem + "_summary.csv"), summary_csv(result));
}

}  // namespace famc
