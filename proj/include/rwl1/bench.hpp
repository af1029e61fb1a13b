#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "rwl1/adaptive.hpp"
#include "rwl1/metrics.hpp"
#include "rwl1/prox.hpp"
#include "rwl1/reweight.hpp"
#include "rwl1/signals.hpp"

namespace rwl1 {

/// Solver names accepted by the runner, in output order.
inline const std::vector<std::string>& known_solvers() {
  static const std::vector<std::string> names{"lasso", "irw", "arw", "prox", "prox_adaptive"};
  return names;
}

/// Nearest even integer to n / divisor.
inline Index rounded_m(Index n, double divisor) {
  require(divisor > 0.0, "rounded_m: divisor must be positive");
  return 2 * static_cast<Index>(std::llround(static_cast<double>(n) / divisor / 2.0));
}

struct ExperimentConfig {
  SignalKind signal = SignalKind::blocks;
  std::vector<Index> n_values{256};
  std::vector<double> m_divisors{2.0, 2.5, 3.0, 3.5, 4.0};
  std::vector<Index> m_values;  // explicit M list; overrides m_divisors when non-empty
  int trials = 100;
  double snr_db = 40.0;
  int reweight_iters = 5;
  std::vector<std::string> solvers = known_solvers();
  std::uint64_t seed = 0;
  AdaptivePolicy arw_policy;
  SolverOptions homotopy;
  ProxOptions prox = [] {
    ProxOptions p;
    p.grad_tol = 1e-7;
    return p;
  }();
  double kkt_fail = 1e-6;  // scaled KKT residual above which a row is flagged failed
  int jobs = 1;

  void validate() const {
    require(!n_values.empty(), "experiment: n list is empty");
    for (Index n : n_values)
      require(is_power_of_two(n) && n >= 16, "experiment: n = " + std::to_string(n) +
                                                 " is not a power of two >= 16");
    require(!m_values.empty() || !m_divisors.empty(), "experiment: no M values");
    require(trials >= 1, "experiment: trials must be at least 1");
    require(reweight_iters >= 0, "experiment: reweight_iters must be non-negative");
    require(!solvers.empty(), "experiment: solver list is empty");
    for (const auto& s : solvers)
      require(std::find(known_solvers().begin(), known_solvers().end(), s) != known_solvers().end(),
              "experiment: unknown solver '" + s + "'");
    require(jobs >= 1, "experiment: jobs must be at least 1");
    for (const auto& [n, m] : cells())
      require(m >= 1 && m <= n, "experiment: M = " + std::to_string(m) + " invalid for N = " +
                                    std::to_string(n));
  }

  std::vector<std::pair<Index, Index>> cells() const {
    std::vector<std::pair<Index, Index>> out;
    for (Index n : n_values) {
      if (!m_values.empty())
        for (Index m : m_values) out.emplace_back(n, m);
      else
        for (double d : m_divisors) out.emplace_back(n, rounded_m(n, d));
    }
    return out;
  }

  /// Master seed of one (N, M) cell; trials inside a cell use derive_seed(cell, ..., trial).
  std::uint64_t cell_seed(Index n, Index m) const {
    return derive_seed(seed, "cell:" + std::to_string(n) + "x" + std::to_string(m));
  }
};

/// One solver on one trial. Per-iteration vectors all have the same length:
/// reweight_iters + 1 for irw and prox, 1 otherwise.
struct TrialResult {
  int trial_id = 0;
  std::string solver;
  Index n = 0;
  Index m = 0;
  double snr_db = 0.0;
  std::vector<double> ser_db;
  std::vector<double> matvec;        // A^T A applications spent in that iteration
  std::vector<double> wall_ms;
  std::vector<double> kkt_residual;  // scaled, under that iteration's weights
  std::vector<char> failed;
  std::string error;

  std::size_t iterations() const { return ser_db.size(); }
  double kkt_residual_final() const { return kkt_residual.empty() ? 0.0 : kkt_residual.back(); }
  double total_matvec() const {
    double t = 0.0;
    for (double v : matvec) t += v;
    return t;
  }
  bool any_failed() const { return std::find(failed.begin(), failed.end(), 1) != failed.end(); }
};

namespace detail {

inline void push_row(TrialResult& r, double ser, double matvec, double ms, double kkt, double tol) {
  r.ser_db.push_back(ser);
  r.matvec.push_back(matvec);
  r.wall_ms.push_back(ms);
  r.kkt_residual.push_back(kkt);
  r.failed.push_back(!(kkt <= tol) || !std::isfinite(ser));
}

/// Pads a trial interrupted by an exception with failed rows.
inline void pad_failed(TrialResult& r, std::size_t rows, const std::string& what) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.error = what;
  if (!r.failed.empty()) r.failed.back() = 1;
  while (r.ser_db.size() < rows) {
    r.ser_db.push_back(nan);
    r.matvec.push_back(nan);
    r.wall_ms.push_back(nan);
    r.kkt_residual.push_back(nan);
    r.failed.push_back(1);
  }
}

inline TrialResult run_solver(const std::string& solver, const SyntheticProblem& p,
                              const ExperimentConfig& cfg, double lipschitz, double lipschitz_cost) {
  TrialResult r;
  r.solver = solver;
  r.n = p.A.cols();
  r.m = p.A.rows();
  r.snr_db = cfg.snr_db;
  const double tol = cfg.kkt_fail;
  const std::size_t rows = (solver == "irw" || solver == "prox") ? cfg.reweight_iters + 1 : 1;
  const WeightedProblem problem = WeightedProblem::uniform(p.A, p.y, p.tau);

  try {
    if (solver == "lasso") {
      const auto res = solve_lasso(problem, cfg.homotopy);
      push_row(r, ser_db(p.xbar, res.x), res.report.applications, res.report.wall_ms,
               res.report.kkt_scaled, tol);
    } else if (solver == "arw") {
      const auto res = solve_arw(problem, cfg.arw_policy, cfg.homotopy);
      push_row(r, ser_db(p.xbar, res.x), res.report.applications, res.report.wall_ms,
               res.report.kkt_scaled, tol);
    } else if (solver == "irw") {
      // Driven round by round so a failure keeps the rows already finished.
      OpCounter counter;
      auto first = detail::run_lasso_path(problem, cfg.homotopy, counter);
      push_row(r, ser_db(p.xbar, first.x), first.report.applications, first.report.wall_ms,
               first.report.kkt_scaled, tol);
      ActiveSetState state = std::move(first.state);
      Vector w = problem.w;
      for (int k = 1; k <= cfg.reweight_iters; ++k) {
        Vector w_new;
        try {
          w_new = update_weights_irw(state.x, p.tau, r.m);
        } catch (const DegenerateWeights&) {
          w_new = problem.w;
        }
        const auto rep = track_weight_change(state, p.A, p.y, w, w_new, cfg.homotopy);
        push_row(r, ser_db(p.xbar, state.x), rep.applications, rep.wall_ms, rep.kkt_scaled, tol);
        w = std::move(w_new);
      }
    } else if (solver == "prox") {
      ProxOptions opts = cfg.prox;
      opts.lipschitz = lipschitz;
      auto res = prox_solve(problem, opts);
      push_row(r, ser_db(p.xbar, res.x), res.report.applications + lipschitz_cost,
               res.report.wall_ms, res.report.kkt_scaled, tol);
      Vector x = res.x;
      for (int k = 1; k <= cfg.reweight_iters; ++k) {
        Vector w_new;
        try {
          w_new = update_weights_irw(x, p.tau, r.m);
        } catch (const DegenerateWeights&) {
          w_new = problem.w;
        }
        const WeightedProblem weighted{p.A, p.y, std::move(w_new), p.tau};
        res = prox_solve(weighted, opts, &x);
        x = res.x;
        push_row(r, ser_db(p.xbar, x), res.report.applications, res.report.wall_ms,
                 res.report.kkt_scaled, tol);
      }
    } else if (solver == "prox_adaptive") {
      ProxOptions opts = cfg.prox;
      opts.lipschitz = lipschitz;
      const auto res = prox_solve_adaptive(p.A, p.y, p.tau, opts);
      push_row(r, ser_db(p.xbar, res.x), res.report.applications + lipschitz_cost,
               res.report.wall_ms, res.report.kkt_scaled, tol);
    } else {
      throw ContractViolation("unknown solver '" + solver + "'");
    }
  } catch (const ContractViolation&) {
    throw;
  } catch (const std::exception& e) {
    pad_failed(r, rows, e.what());
  }
  return r;
}

}  // namespace detail

/// All solvers on one trial of one cell, in config order.
inline std::vector<TrialResult> run_trial(const ExperimentConfig& cfg, Index n, Index m, int trial) {
  const SyntheticProblem p =
      make_problem(cfg.signal, n, m, cfg.snr_db, cfg.cell_seed(n, m), static_cast<std::uint64_t>(trial));
  double lipschitz = cfg.prox.lipschitz;
  double lipschitz_cost = 0.0;
  const bool needs_prox = std::find_if(cfg.solvers.begin(), cfg.solvers.end(), [](const auto& s) {
                            return s.rfind("prox", 0) == 0;
                          }) != cfg.solvers.end();
  if (needs_prox && !(lipschitz > 0.0)) {
    OpCounter c;
    lipschitz = estimate_lipschitz(p.A, cfg.prox.power_iters, c);
    lipschitz_cost = c.applications();
  }
  std::vector<TrialResult> out;
  for (const auto& s : cfg.solvers) {
    out.push_back(detail::run_solver(s, p, cfg, lipschitz, lipschitz_cost));
    out.back().trial_id = trial;
  }
  return out;
}

/// Runs every (cell, trial) pair, `cfg.jobs` at a time. Output is sorted by
/// cell, then trial, then solver order, independent of scheduling.
inline std::vector<TrialResult> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Task {
    Index n;
    Index m;
    int trial;
  };
  std::vector<Task> tasks;
  for (const auto& [n, m] : cfg.cells())
    for (int t = 0; t < cfg.trials; ++t) tasks.push_back({n, m, t});

  std::vector<std::vector<TrialResult>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++)
      slots[i] = run_trial(cfg, tasks[i].n, tasks[i].m, tasks[i].trial);
  };
  const int jobs = std::min<int>(cfg.jobs, static_cast<int>(tasks.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  std::vector<TrialResult> out;
  for (auto& s : slots)
    for (auto& r : s) out.push_back(std::move(r));
  return out;
}

struct SummaryRow {
  std::string solver;
  Index n = 0;
  Index m = 0;
  int iter = 0;
  std::string metric;
  MeanStd stats;
};

/// Mean and sample deviation per (solver, cell, iteration) of ser_db, matvec,
/// wall_ms and kkt_residual over non-failed rows, plus the failure fraction
/// under metric "failed" (counted over all rows).
inline std::vector<SummaryRow> summarize(const std::vector<TrialResult>& results) {
  require(!results.empty(), "summarize: no results");
  struct Acc {
    std::vector<double> ser, matvec, wall, kkt, failed;
  };
  std::map<std::tuple<std::size_t, Index, Index, int>, Acc> groups;
  std::map<std::size_t, std::string> names;
  for (const auto& r : results) {
    auto it = std::find(known_solvers().begin(), known_solvers().end(), r.solver);
    const auto order = static_cast<std::size_t>(it - known_solvers().begin());
    names[order] = r.solver;
    for (std::size_t k = 0; k < r.iterations(); ++k) {
      auto& acc = groups[{order, r.n, r.m, static_cast<int>(k)}];
      acc.failed.push_back(r.failed[k] ? 1.0 : 0.0);
      if (r.failed[k]) continue;
      acc.ser.push_back(r.ser_db[k]);
      acc.matvec.push_back(r.matvec[k]);
      acc.wall.push_back(r.wall_ms[k]);
      acc.kkt.push_back(r.kkt_residual[k]);
    }
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, acc] : groups) {
    const auto& [order, n, m, iter] = key;
    auto add = [&](const char* metric, const std::vector<double>& v) {
      rows.push_back({names[order], n, m, iter, metric, mean_stddev(v)});
    };
    add("ser_db", acc.ser);
    add("matvec", acc.matvec);
    add("wall_ms", acc.wall);
    add("kkt_residual", acc.kkt);
    add("failed", acc.failed);
  }
  return rows;
}

/// Fixed-format numbers so equal inputs give equal bytes.
inline std::string csv_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_trials_csv(std::ostream& os, const std::vector<TrialResult>& results,
                             bool include_wall = true) {
  os << "trial_id,solver,n,m,snr_db,iter,ser_db,matvec,wall_ms,kkt_residual,failed\n";
  for (const auto& r : results)
    for (std::size_t k = 0; k < r.iterations(); ++k)
      os << r.trial_id << ',' << r.solver << ',' << r.n << ',' << r.m << ',' << csv_real(r.snr_db)
         << ',' << k << ',' << csv_real(r.ser_db[k]) << ',' << csv_real(r.matvec[k]) << ','
         << (include_wall ? csv_real(r.wall_ms[k]) : std::string("0")) << ','
         << csv_real(r.kkt_residual[k]) << ',' << (r.failed[k] ? 1 : 0) << '\n';
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "solver,n,m,iter,metric,mean,stddev,count\n";
  for (const auto& r : rows)
    os << r.solver << ',' << r.n << ',' << r.m << ',' << r.iter << ',' << r.metric << ','
       << csv_real(r.stats.mean) << ',' << csv_real(r.stats.stddev) << ',' << r.stats.count << '\n';
}

}  // namespace rwl1
