// rwl1: generate synthetic problems, solve single instances, run ensembles.
//
// Exit codes: 0 ok, 1 usage, 2 input, 3 solver failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <toml.hpp>

#include "rwl1/adaptive.hpp"
#include "rwl1/bench.hpp"
#include "rwl1/config.hpp"
#include "rwl1/matrix_market.hpp"
#include "rwl1/metrics.hpp"
#include "rwl1/prox.hpp"
#include "rwl1/reweight.hpp"
#include "rwl1/signals.hpp"

namespace fs = std::filesystem;
using namespace rwl1;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInput = 2, kSolver = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string g15(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  std::string kind = "blocks";
  long long n = 256;
  long long m = 128;
  std::string snr = "40";
  std::uint64_t seed = 0;
  std::string out = ".";
};

double parse_snr(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("--snr must be a number of dB or 'inf', got '" + s + "'");
}

int cmd_gen(const GenArgs& a) {
  if (a.n < 16 || !is_power_of_two(a.n))
    throw UsageError("--n must be a power of two >= 16, got " + std::to_string(a.n));
  if (a.m < 1 || a.m > a.n) throw UsageError("--m must satisfy 1 <= m <= n");
  SignalKind kind;
  try {
    kind = parse_signal_kind(a.kind);
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
  const double snr = parse_snr(a.snr);
  const auto p = make_problem(kind, a.n, a.m, snr, a.seed, 0);

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw InputError("cannot create output directory " + a.out + ": " + ec.message());
  const fs::path dir(a.out);
  mm::save((dir / "A.mtx").string(), p.A);
  mm::save((dir / "y.mtx").string(), p.y);
  mm::save((dir / "xbar.mtx").string(), p.xbar);

  toml::table meta{{"kind", a.kind},
                   {"n", static_cast<std::int64_t>(a.n)},
                   {"m", static_cast<std::int64_t>(a.m)},
                   {"seed", static_cast<std::int64_t>(a.seed)},
                   {"sigma", p.sigma},
                   {"tau", p.tau}};
  if (std::isinf(snr))
    meta.insert("snr_db", "inf");
  else
    meta.insert("snr_db", snr);
  const auto meta_path = (dir / "meta.toml").string();
  std::ofstream out(meta_path);
  if (!out) throw InputError("cannot write " + meta_path);
  out << meta << '\n';
  if (!out) throw InputError("write failed for " + meta_path);
  std::cout << "wrote " << (dir / "A.mtx").string() << ", y.mtx, xbar.mtx, meta.toml"
            << " (sigma=" << g15(p.sigma) << ", tau=" << g15(p.tau) << ")\n";
  return kOk;
}

// ---- solve -----------------------------------------------------------------

struct SolveArgs {
  std::string dir;
  std::string a_path, y_path, xbar_path, meta_path;
  std::string solver = "lasso";
  std::string tau = "auto";
  int reweight_iters = 0;
  std::string arw_policy = "reciprocal";
  std::string factor = "cholesky";
  double kkt_tol = 1e-8;
  int max_steps = 0;
  int refactor_period = GramFactor::kDefaultRefactorPeriod;
  double grad_tol = 1e-8;
  double continuation_factor = 4.0;
  int max_inner = 200000;
  std::string out;
};

std::string resolve(const std::string& explicit_path, const std::string& dir, const char* name) {
  if (!explicit_path.empty()) return explicit_path;
  if (!dir.empty()) return (fs::path(dir) / name).string();
  return {};
}

struct IterLine {
  Vector x;
  Vector w;
  double matvec;
  double kkt;
};

int cmd_solve(const SolveArgs& a) {
  const std::string a_path = resolve(a.a_path, a.dir, "A.mtx");
  const std::string y_path = resolve(a.y_path, a.dir, "y.mtx");
  if (a_path.empty() || y_path.empty()) throw UsageError("give --dir or both --A and --y");
  std::string xbar_path = resolve(a.xbar_path, a.dir, "xbar.mtx");
  std::string meta_path = resolve(a.meta_path, a.dir, "meta.toml");
  if (a.xbar_path.empty() && !xbar_path.empty() && !fs::exists(xbar_path)) xbar_path.clear();
  if (a.meta_path.empty() && !meta_path.empty() && !fs::exists(meta_path)) meta_path.clear();

  DenseMatrix A;
  Vector y;
  std::optional<Vector> xbar;
  try {
    A = mm::load_matrix(a_path);
    y = mm::load_vector(y_path);
    if (!xbar_path.empty()) xbar = mm::load_vector(xbar_path);
  } catch (const mm::FormatError& e) {
    throw InputError(e.what());
  }
  if (y.size() != A.rows())
    throw InputError("y has " + std::to_string(y.size()) + " entries but A has " +
                     std::to_string(A.rows()) + " rows");
  if (xbar && xbar->size() != A.cols())
    throw InputError("xbar has " + std::to_string(xbar->size()) + " entries but A has " +
                     std::to_string(A.cols()) + " columns");

  double tau = 0.0;
  if (a.tau == "auto") {
    if (meta_path.empty()) throw InputError("--tau auto needs meta.toml (use --meta or --dir)");
    toml::table meta;
    try {
      meta = toml::parse_file(meta_path);
    } catch (const toml::parse_error& e) {
      throw InputError(meta_path + ": " + std::string(e.description()));
    }
    const auto sigma = meta["sigma"].value<double>();
    if (!sigma) throw InputError(meta_path + ": missing numeric 'sigma'");
    tau = default_tau(*sigma, A.cols());
    if (!(tau > 0.0)) throw InputError(meta_path + ": sigma is zero, --tau auto is undefined");
  } else {
    try {
      std::size_t used = 0;
      tau = std::stod(a.tau, &used);
      if (used != a.tau.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError("--tau must be 'auto' or a positive number, got '" + a.tau + "'");
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) throw UsageError("--tau must be positive");
  }

  SolverOptions opts;
  opts.kkt_tol = a.kkt_tol;
  opts.max_steps = a.max_steps;
  opts.refactor_period = a.refactor_period;
  opts.factor_mode = a.factor == "inverse" ? FactorMode::inverse : FactorMode::cholesky;
  ProxOptions popts;
  popts.grad_tol = a.grad_tol;
  popts.continuation_factor = a.continuation_factor;
  popts.max_inner = a.max_inner;
  AdaptivePolicy policy;
  try {
    policy = AdaptivePolicy::parse(a.arw_policy);
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }

  const WeightedProblem problem = WeightedProblem::uniform(A, y, tau);
  std::vector<IterLine> lines;
  if (a.solver == "lasso") {
    const auto r = solve_lasso(problem, opts);
    lines.push_back({r.x, problem.w, r.report.applications, r.report.kkt_residual});
  } else if (a.solver == "irw") {
    const auto r = solve_irw(problem, a.reweight_iters, opts);
    for (std::size_t k = 0; k < r.iterates.size(); ++k)
      lines.push_back({r.iterates[k], r.weights[k], r.reports[k].applications, r.reports[k].kkt_residual});
  } else if (a.solver == "arw") {
    const auto r = solve_arw(problem, policy, opts);
    lines.push_back({r.x, r.w, r.report.applications, r.report.kkt_residual});
  } else if (a.solver == "prox") {
    OpCounter c;
    popts.lipschitz = estimate_lipschitz(A, popts.power_iters, c);
    auto r = prox_solve(problem, popts);
    lines.push_back({r.x, r.w, r.report.applications + c.applications(), r.report.kkt_residual});
    for (int k = 1; k <= a.reweight_iters; ++k) {
      Vector w_new;
      try {
        w_new = update_weights_irw(r.x, tau, A.rows());
      } catch (const DegenerateWeights&) {
        w_new = problem.w;
      }
      const Vector x0 = r.x;
      r = prox_solve(WeightedProblem{A, y, w_new, tau}, popts, &x0);
      lines.push_back({r.x, r.w, r.report.applications, r.report.kkt_residual});
    }
  } else if (a.solver == "prox_adaptive") {
    const auto r = prox_solve_adaptive(A, y, tau, popts);
    lines.push_back({r.x, r.w, r.report.applications, r.report.kkt_residual});
  } else {
    throw UsageError("unknown solver '" + a.solver + "'");
  }

  std::cout << "solver " << a.solver << "  tau " << g15(tau) << '\n';
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto& l = lines[k];
    const WeightedProblem wp{A, y, l.w, tau};
    std::cout << "iter " << k;
    if (xbar) std::cout << "  ser_db " << g15(ser_db(*xbar, l.x));
    std::cout << "  matvec " << g15(l.matvec) << "  kkt_residual " << g15(l.kkt)
              << "  objective " << g15(wp.objective(l.x)) << '\n';
  }
  if (!a.out.empty()) {
    try {
      mm::save(a.out, lines.back().x);
    } catch (const mm::FormatError& e) {
      throw InputError(e.what());
    }
  }
  return kOk;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> jobs;
  std::string out = ".";
};

int cmd_bench(const BenchArgs& a) {
  ExperimentConfig cfg;
  if (!a.config.empty()) {
    try {
      cfg = load_experiment_config(a.config);
    } catch (const ConfigError& e) {
      throw InputError(e.what());
    }
  }
  if (a.seed) cfg.seed = *a.seed;
  if (a.trials) cfg.trials = *a.trials;
  if (a.jobs) cfg.jobs = *a.jobs;
  try {
    cfg.validate();
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }

  const auto results = run_experiment(cfg);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw InputError("cannot create output directory " + a.out + ": " + ec.message());
  const auto trials_path = (fs::path(a.out) / "trials.csv").string();
  const auto summary_path = (fs::path(a.out) / "summary.csv").string();
  std::ofstream t(trials_path);
  std::ofstream s(summary_path);
  if (!t || !s) throw InputError("cannot write CSV files into " + a.out);
  write_trials_csv(t, results);
  write_summary_csv(s, summarize(results));

  std::size_t failed = 0;
  for (const auto& r : results) failed += r.any_failed() ? 1 : 0;
  std::cout << "wrote " << trials_path << " and " << summary_path << " (" << results.size()
            << " solver runs, " << failed << " with failures)\n";
  return failed == results.size() ? kSolver : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted l1 homotopy solvers and benchmark harness"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a synthetic problem as Matrix Market files");
  g->add_option("--kind", gen.kind, "blocks or heavisine")->capture_default_str();
  g->add_option("--n", gen.n, "signal length, power of two >= 16")->capture_default_str();
  g->add_option("--m", gen.m, "number of measurements")->capture_default_str();
  g->add_option("--snr", gen.snr, "measurement SNR in dB, or inf")->capture_default_str();
  g->add_option("--seed", gen.seed, "master seed")->capture_default_str();
  g->add_option("-o,--out", gen.out, "output directory")->capture_default_str();

  SolveArgs sol;
  auto* s = app.add_subcommand("solve", "solve one instance");
  s->add_option("--dir", sol.dir, "directory holding A.mtx, y.mtx, [xbar.mtx], [meta.toml]");
  s->add_option("--A", sol.a_path, "sensing matrix");
  s->add_option("--y", sol.y_path, "measurements");
  s->add_option("--xbar", sol.xbar_path, "ground truth, enables SER output");
  s->add_option("--meta", sol.meta_path, "meta.toml with sigma, for --tau auto");
  s->add_option("--solver", sol.solver, "lasso, irw, arw, prox or prox_adaptive")
      ->check(CLI::IsMember({"lasso", "irw", "arw", "prox", "prox_adaptive"}))
      ->capture_default_str();
  s->add_option("--tau", sol.tau, "threshold, or auto for sigma sqrt(ln N)")->capture_default_str();
  s->add_option("--reweight-iters", sol.reweight_iters, "reweighting rounds (irw, prox)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  s->add_option("--arw-policy", sol.arw_policy, "half-max, reciprocal or hybrid:<k>")->capture_default_str();
  s->add_option("--factor", sol.factor, "Gram factor mode")
      ->check(CLI::IsMember({"cholesky", "inverse"}))
      ->capture_default_str();
  s->add_option("--kkt-tol", sol.kkt_tol, "homotopy KKT tolerance")->capture_default_str();
  s->add_option("--max-steps", sol.max_steps, "homotopy step cap, 0 for 20 min(M, N)")->capture_default_str();
  s->add_option("--refactor-period", sol.refactor_period, "updates between refactorizations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  s->add_option("--grad-tol", sol.grad_tol, "prox KKT tolerance (relative)")->capture_default_str();
  s->add_option("--continuation-factor", sol.continuation_factor, "prox level divisor")
      ->check(CLI::Range(1.0 + 1e-12, 1e300))
      ->capture_default_str();
  s->add_option("--max-inner", sol.max_inner, "prox iteration cap")->capture_default_str();
  s->add_option("-o,--out", sol.out, "write the solution to this .mtx file");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "run an ensemble experiment and write CSV");
  b->add_option("--config", bench.config, "experiment TOML file");
  b->add_option("--seed", bench.seed, "override the master seed");
  b->add_option("--trials", bench.trials, "override trials per cell")->check(CLI::PositiveNumber);
  b->add_option("--jobs", bench.jobs, "worker threads")->check(CLI::PositiveNumber);
  b->add_option("-o,--out", bench.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen);
    if (s->parsed()) return cmd_solve(sol);
    return cmd_bench(bench);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const mm::FormatError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const ContractViolation& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolver;
  }
}
