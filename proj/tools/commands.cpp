#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <ostream>
#include <sstream>
#include <thread>
#include <variant>

#include "famc/cross_validation.hpp"
#include "famc/data_io.hpp"
#include "famc/errors.hpp"
#include "famc/experiments.hpp"
#include "famc/gaussian.hpp"
#include "famc/link.hpp"
#include "famc/metrics.hpp"
#include "famc/simulate.hpp"
#include "famc/solver.hpp"

namespace famc::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct ShapeFlags {
  std::optional<int> rows, cols, classes;

  void add(CLI::App* app) {
    app->add_option("--rows", rows, "Row count (default: largest index + 1)")->check(CLI::PositiveNumber);
    app->add_option("--cols", cols, "Column count (default: largest index + 1)")->check(CLI::PositiveNumber);
    app->add_option("--classes", classes, "Label count p (default: largest label)")
        ->check(CLI::Range(2, 1 << 20));
  }
  ShapeOverride shape() const { return {rows, cols, classes}; }
};

struct SolverFlags {
  double eps = FitConfig{}.epsilon;
  int max_iters = FitConfig{}.max_iters;
  std::uint64_t seed = 0;
  std::string link = "logit";
  std::vector<double> levels;

  void add(CLI::App* app) {
    app->add_option("--link", link, "logit or gaussian")
        ->check(CLI::IsMember({"logit", "gaussian"}))
        ->capture_default_str();
    app->add_option("--eps", eps, "Duality gap tolerance")->capture_default_str();
    app->add_option("--max-iters", max_iters, "Outer iteration cap")->capture_default_str();
    app->add_option("--seed", seed, "Seed for the singular vector oracle")->capture_default_str();
    app->add_option("--levels", levels, "Gaussian link: real value of each label, increasing");
  }
  Link parsed_link() const { return link == "logit" ? Link::logit : Link::gaussian; }
  FitConfig config(double lambda) const {
    FitConfig cfg;
    cfg.lambda = lambda;
    cfg.epsilon = eps;
    cfg.max_iters = max_iters;
    cfg.seed = seed;
    return cfg;
  }
  void check(int classes) const {
    if (!levels.empty() && link != "gaussian") throw UsageError("--levels requires --link gaussian");
    if (!levels.empty() && static_cast<int>(levels.size()) != classes)
      throw UsageError("--levels needs one value per class");
  }
};

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
  int rows = 0, cols = 0, classes = 2, rank = 5;
  double gamma_scale = 1.0, skew = 1.0;
  long long n_obs = 1000;
  std::string sampling = "uniform";
  std::uint64_t seed = 0;
  std::string out_obs, out_truth;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
  auto* c = app.add_subcommand("simulate", "Draw a ground truth and sampled observations");
  c->add_option("--rows", a.rows)->required()->check(CLI::PositiveNumber);
  c->add_option("--cols", a.cols)->required()->check(CLI::PositiveNumber);
  c->add_option("--classes", a.classes)->capture_default_str()->check(CLI::Range(2, 1 << 20));
  c->add_option("--rank", a.rank)->capture_default_str()->check(CLI::NonNegativeNumber);
  c->add_option("--gamma-scale", a.gamma_scale)->capture_default_str()->check(CLI::NonNegativeNumber);
  c->add_option("--n-obs", a.n_obs)->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--sampling", a.sampling)
      ->capture_default_str()
      ->check(CLI::IsMember({"uniform", "product"}));
  c->add_option("--skew", a.skew, "Product sampling: weights log-uniform in [1, skew]")
      ->capture_default_str();
  c->add_option("--seed", a.seed)->capture_default_str();
  c->add_option("--out-obs", a.out_obs)->required();
  c->add_option("--out-truth", a.out_truth)->required();
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  if (a.rank > std::min(a.rows, a.cols))
    throw UsageError("--rank must not exceed min(--rows, --cols)");
  if (!(a.skew >= 1.0)) throw UsageError("--skew must be at least 1");
  if (a.sampling == "uniform" && a.skew != 1.0)
    throw UsageError("--skew only applies to --sampling product");
  const auto kind = a.sampling == "uniform" ? SamplingKind::uniform : SamplingKind::product;
  const auto truth = make_ground_truth(a.rows, a.cols, a.classes, a.rank, a.gamma_scale, a.seed);
  const auto dist = make_sampling(kind, a.rows, a.cols, a.skew, a.seed + 1);
  const auto obs = sample_observations(truth, dist, static_cast<std::size_t>(a.n_obs), a.seed + 2);
  write_observations(a.out_obs, obs);
  write_truth(a.out_truth, truth);
  out << "rows=" << a.rows << "\ncols=" << a.cols << "\nclasses=" << a.classes
      << "\nn_obs=" << obs.size() << "\nmu=" << real(dist.mu()) << "\nl_c=" << real(dist.l_c())
      << "\n";
  return kExitOk;
}

// --- fit -------------------------------------------------------------------

struct FitArgs {
  std::string obs, out_model;
  ShapeFlags shape;
  SolverFlags solver;
  double lambda = 0.0;
};

void add_fit(CLI::App& app, FitArgs& a) {
  auto* c = app.add_subcommand("fit", "Fit a model to an observation file");
  c->add_option("--obs", a.obs, "Observation CSV")->required();
  a.shape.add(c);
  a.solver.add(c);
  c->add_option("--lambda", a.lambda, "Nuclear norm weight")->required();
  c->add_option("--out-model", a.out_model, "Where to write the fitted model");
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const FitConfig cfg = a.solver.config(a.lambda);
  const bool gaussian = a.solver.parsed_link() == Link::gaussian;
  cfg.validate(gaussian);
  const auto obs = read_observations(a.obs, ObservationFormat::csv, a.shape.shape());
  a.solver.check(obs.classes);

  FitReport report;
  std::size_t atoms = 0;
  std::optional<double> sigma_hat;
  if (gaussian) {
    auto fitted = fit_gaussian(obs, cfg, a.solver.levels);
    atoms = fitted.model.atoms.size();
    sigma_hat = fitted.model.sigma_hat;
    if (!a.out_model.empty()) write_model(a.out_model, fitted.model);
    report = std::move(fitted.report);
  } else {
    auto fitted = fit(obs, cfg);
    atoms = fitted.model.atom_count();
    if (!a.out_model.empty()) write_model(a.out_model, fitted.model, cfg.lambda);
    report = std::move(fitted.report);
  }
  out << "objective=" << real(report.final_objective()) << "\niterations=" << report.iterations
      << "\natoms=" << atoms << "\nstop_reason=" << to_string(report.stop_reason) << "\n";
  if (sigma_hat) out << "sigma_hat=" << real(*sigma_hat) << "\n";
  return kExitOk;
}

// --- cv --------------------------------------------------------------------

struct CvArgs {
  std::string obs;
  ShapeFlags shape;
  SolverFlags solver;
  int folds = 5;
};

void add_cv(CLI::App& app, CvArgs& a) {
  auto* c = app.add_subcommand("cv", "Choose lambda by k-fold cross-validation");
  c->add_option("--obs", a.obs, "Observation CSV")->required();
  a.shape.add(c);
  a.solver.add(c);
  c->add_option("--folds", a.folds)->capture_default_str()->check(CLI::Range(2, 1000));
}

int cmd_cv(const CvArgs& a, std::ostream& out) {
  a.solver.config(1.0).validate();
  const auto obs = read_observations(a.obs, ObservationFormat::csv, a.shape.shape());
  a.solver.check(obs.classes);
  if (obs.size() < static_cast<std::size_t>(a.folds))
    throw UsageError("fewer observations than --folds");
  const auto result = cross_validate(obs, a.solver.parsed_link(), a.folds, a.solver.config(1.0),
                                     a.solver.levels);
  out << "lambda,mean_val_loss,sd,chosen\n";
  for (const auto& row : result.rows)
    out << real(row.lambda) << ',' << real(row.mean_val_loss) << ',' << real(row.sd) << ','
        << (row.lambda == result.chosen_lambda ? 1 : 0) << '\n';
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string model, truth, test_obs, format = "kv";
  int classes = 0;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("eval", "Score a fitted model");
  c->add_option("--model", a.model)->required();
  c->add_option("--classes", a.classes)->required()->check(CLI::Range(2, 1 << 20));
  c->add_option("--truth", a.truth, "Dense truth file: KL, Hellinger and Frobenius errors");
  c->add_option("--test-obs", a.test_obs, "Observation CSV: prediction error");
  c->add_option("--out", a.format)->capture_default_str()->check(CLI::IsMember({"csv", "kv"}));
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.truth.empty() && a.test_obs.empty())
    throw UsageError("eval needs --truth, --test-obs or both");
  const auto stored = read_model(a.model);
  const auto* logit = std::get_if<AtomicModel>(&stored.model);
  const auto* gauss = std::get_if<GaussianModel>(&stored.model);
  const int rows = logit ? logit->rows : gauss->rows;
  const int cols = logit ? logit->cols : gauss->cols;
  const int classes = logit ? logit->classes : gauss->classes;
  if (classes != a.classes)
    throw DimensionMismatch("model has " + std::to_string(classes) + " classes, --classes says " +
                            std::to_string(a.classes));

  EvalReport report;
  if (!a.truth.empty()) {
    const auto truth = read_truth(a.truth);
    if (static_cast<int>(truth.size()) != classes - 1 || truth[0].rows() != rows ||
        truth[0].cols() != cols)
      throw DimensionMismatch("truth file does not match the model shape");
    const auto truth_field = logit_field(truth);
    const auto est = logit ? logit_field(*logit) : gaussian_field(*gauss);
    report.kl = kl_divergence(truth_field, est);
    report.hellinger_sq = hellinger_sq(truth_field, est);
    if (logit) report.frobenius_sq_normalized = frobenius_error(truth, densify(*logit));
  }
  if (!a.test_obs.empty()) {
    const auto test = read_observations(a.test_obs, ObservationFormat::csv, {rows, cols, classes});
    std::vector<EntryIndex> pairs;
    pairs.reserve(test.size());
    for (const auto& s : test.samples) pairs.push_back({s.row, s.col});
    const auto probs = logit ? logit_probs_at(*logit, pairs) : gaussian_class_probs(*gauss, pairs);
    report.prediction_error = prediction_error(probs, test);
  }
  out << (a.format == "kv" ? report.to_kv() : report.to_csv());
  return kExitOk;
}

// --- reproduce ---------------------------------------------------------------

struct ReproduceArgs {
  std::string experiment, out_dir;
  double scale = 0.0;
  int seeds = 5;
};

void add_reproduce(CLI::App& app, ReproduceArgs& a) {
  auto* c = app.add_subcommand("reproduce", "Run a simulation study and write CSV results");
  c->add_option("--experiment", a.experiment)
      ->required()
      ->check(CLI::IsMember({"fig1", "table2", "table3"}));
  c->add_option("--scale", a.scale, "Fraction of the 900 x 1350 reference size")->required();
  c->add_option("--seeds", a.seeds)->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--out", a.out_dir, "Output directory")->required();
}

int cmd_reproduce(const ReproduceArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.scale > 0.0 && a.scale <= 1.0)) throw UsageError("--scale must lie in (0, 1]");
  ReproduceOptions options;
  options.experiment = *parse_experiment(a.experiment);
  options.scale = a.scale;
  options.seeds = a.seeds;
  options.threads = thread_count();
  const auto result = reproduce(options, &err);
  write_reproduce(a.out_dir, result);
  out << summary_csv(result);
  return kExitOk;
}

}  // namespace

int thread_count() {
  if (const char* env = std::getenv("FAM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min(v, 1024L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank matrix completion over finite alphabets", "famc"};
  app.require_subcommand(1);
  SimulateArgs sim;
  FitArgs fit_args;
  CvArgs cv_args;
  EvalArgs eval_args;
  ReproduceArgs rep;
  add_simulate(app, sim);
  add_fit(app, fit_args);
  add_cv(app, cv_args);
  add_eval(app, eval_args);
  add_reproduce(app, rep);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "simulate") return cmd_simulate(sim, out);
    if (name == "fit") return cmd_fit(fit_args, out);
    if (name == "cv") return cmd_cv(cv_args, out);
    if (name == "eval") return cmd_eval(eval_args, out);
    return cmd_reproduce(rep, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace famc::cli
