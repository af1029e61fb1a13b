#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rwl1/bench.hpp"
#include "rwl1/config.hpp"
#include "rwl1/metrics.hpp"

using namespace rwl1;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n_values = {64};
  cfg.m_values = {32};
  cfg.trials = 3;
  cfg.reweight_iters = 2;
  cfg.seed = 17;
  return cfg;
}

std::string trials_csv(const std::vector<TrialResult>& r) {
  std::ostringstream os;
  write_trials_csv(os, r, false);
  return os.str();
}

}  // namespace

TEST(SerDb, Examples) {
  EXPECT_EQ(ser_db(vec({1, 2}), vec({1, 2})), kSerCapDb);
  EXPECT_NEAR(ser_db(vec({10, 0}), vec({9, 0})), 20.0, 1e-12);
  EXPECT_NEAR(ser_db(vec({3, 4}), vec({0, 0})), 0.0, 1e-12);
  EXPECT_THROW(ser_db(vec({0, 0}), vec({1, 0})), ContractViolation);
  EXPECT_THROW(ser_db(vec({1, 0}), vec({1})), ContractViolation);
}

TEST(MeanStddev, MatchesTwoPassOracle) {
  const std::vector<double> v{1.0, 2.0, 4.0, 8.0, 16.5};
  const auto s = mean_stddev(v);
  EXPECT_NEAR(s.mean, oracle::mean(v), 1e-14);
  EXPECT_NEAR(s.stddev, oracle::stddev(v), 1e-14);
  EXPECT_EQ(s.count, 5u);
  const std::vector<double> shifted{1e9 + 1, 1e9 + 2, 1e9 + 3};
  EXPECT_NEAR(mean_stddev(shifted).stddev, 1.0, 1e-7);
  const std::vector<double> one{3.0};
  EXPECT_EQ(mean_stddev(one).stddev, 0.0);
  EXPECT_TRUE(std::isnan(mean_stddev(std::span<const double>{}).mean));
}

TEST(RoundedM, EvenNearest) {
  EXPECT_EQ(rounded_m(256, 2.0), 128);
  EXPECT_EQ(rounded_m(256, 2.5), 102);
  EXPECT_EQ(rounded_m(256, 3.0), 86);
  EXPECT_EQ(rounded_m(256, 3.5), 74);
  EXPECT_EQ(rounded_m(256, 4.0), 64);
  EXPECT_THROW(rounded_m(256, 0.0), ContractViolation);
}

TEST(RunExperiment, ShapeOfResults) {
  auto cfg = small_config();
  const auto res = run_experiment(cfg);
  ASSERT_EQ(res.size(), 3u * known_solvers().size());
  for (const auto& r : res) {
    const std::size_t rows = (r.solver == "irw" || r.solver == "prox") ? 3u : 1u;
    EXPECT_EQ(r.iterations(), rows) << r.solver;
    EXPECT_EQ(r.n, 64);
    EXPECT_EQ(r.m, 32);
    EXPECT_FALSE(r.any_failed()) << r.solver << " " << r.error;
    for (std::size_t k = 0; k < rows; ++k) {
      EXPECT_GT(r.matvec[k], 0.0);
      EXPECT_LE(r.kkt_residual[k], cfg.kkt_fail);
    }
  }
}

TEST(RunExperiment, SingleLassoTrial) {
  auto cfg = small_config();
  cfg.trials = 1;
  cfg.solvers = {"lasso"};
  const auto res = run_experiment(cfg);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_EQ(res[0].iterations(), 1u);
  const auto sp = make_problem(SignalKind::blocks, 64, 32, 40.0, cfg.cell_seed(64, 32), 0);
  const auto direct = solve_lasso(WeightedProblem::uniform(sp.A, sp.y, sp.tau), cfg.homotopy);
  EXPECT_NEAR(res[0].ser_db[0], ser_db(sp.xbar, direct.x), 1e-12);
}

TEST(RunExperiment, DeterministicAcrossRunsAndJobs) {
  auto cfg = small_config();
  const std::string a = trials_csv(run_experiment(cfg));
  EXPECT_EQ(a, trials_csv(run_experiment(cfg)));
  cfg.jobs = 4;
  EXPECT_EQ(a, trials_csv(run_experiment(cfg)));
  cfg.seed = 18;
  EXPECT_NE(a, trials_csv(run_experiment(cfg)));
}

TEST(RunExperiment, StepCapMarksFailureWithoutAbort) {
  auto cfg = small_config();
  cfg.solvers = {"lasso", "arw"};
  cfg.homotopy.max_steps = 2;
  const auto res = run_experiment(cfg);
  ASSERT_EQ(res.size(), 6u);
  for (const auto& r : res) {
    EXPECT_TRUE(r.any_failed());
    EXPECT_FALSE(r.error.empty());
  }
  const auto rows = summarize(res);
  for (const auto& s : rows)
    if (s.metric == "failed") EXPECT_EQ(s.stats.mean, 1.0);
}

TEST(Summarize, AgreesWithOracle) {
  auto cfg = small_config();
  cfg.trials = 5;
  cfg.solvers = {"lasso", "irw"};
  const auto res = run_experiment(cfg);
  const auto rows = summarize(res);
  std::vector<double> lasso_ser, irw_last;
  for (const auto& r : res) {
    if (r.solver == "lasso") lasso_ser.push_back(r.ser_db[0]);
    if (r.solver == "irw") irw_last.push_back(r.ser_db.back());
  }
  int seen = 0;
  for (const auto& s : rows) {
    if (s.metric != "ser_db") continue;
    if (s.solver == "lasso" && s.iter == 0) {
      EXPECT_NEAR(s.stats.mean, oracle::mean(lasso_ser), 1e-12);
      EXPECT_NEAR(s.stats.stddev, oracle::stddev(lasso_ser), 1e-10);
      ++seen;
    }
    if (s.solver == "irw" && s.iter == 2) {
      EXPECT_NEAR(s.stats.mean, oracle::mean(irw_last), 1e-12);
      EXPECT_EQ(s.stats.count, 5u);
      ++seen;
    }
  }
  EXPECT_EQ(seen, 2);
}

TEST(Summarize, ExcludesFailedRows) {
  TrialResult ok{0, "lasso", 64, 32, 40.0, {10.0}, {5.0}, {1.0}, {1e-9}, {0}, ""};
  TrialResult bad{1, "lasso", 64, 32, 40.0, {-3.0}, {7.0}, {1.0}, {1.0}, {1}, "x"};
  const auto rows = summarize({ok, bad});
  for (const auto& s : rows) {
    if (s.metric == "ser_db") {
      EXPECT_EQ(s.stats.mean, 10.0);
      EXPECT_EQ(s.stats.count, 1u);
    }
    if (s.metric == "failed") EXPECT_EQ(s.stats.mean, 0.5);
  }
}

TEST(Csv, Headers) {
  auto cfg = small_config();
  cfg.trials = 1;
  cfg.solvers = {"arw"};
  const auto res = run_experiment(cfg);
  std::ostringstream t, s;
  write_trials_csv(t, res);
  write_summary_csv(s, summarize(res));
  EXPECT_EQ(t.str().substr(0, t.str().find('\n')),
            "trial_id,solver,n,m,snr_db,iter,ser_db,matvec,wall_ms,kkt_residual,failed");
  EXPECT_EQ(s.str().substr(0, s.str().find('\n')), "solver,n,m,iter,metric,mean,stddev,count");
  EXPECT_EQ(csv_real(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(csv_real(0.125), "0.125");
}

TEST(Config, ParsesAllSections) {
  const auto cfg = parse_experiment_config(R"(
[experiment]
signal = "heavisine"
n = [128, 256]
m_divisors = [2.0, 4.0]
trials = 7
snr_db = 30.0
reweight_iters = 3
solvers = ["lasso", "arw"]
seed = 99
arw_policy = "hybrid:4"
jobs = 2
kkt_fail = 1e-5

[homotopy]
kkt_tol = 1e-9
max_steps = 500
factor = "inverse"
refactor_period = 100

[prox]
grad_tol = 1e-6
level_tol = 1e-2
max_inner = 1000
continuation_factor = 8.0
power_iters = 20
)");
  EXPECT_EQ(cfg.signal, SignalKind::heavisine);
  EXPECT_EQ(cfg.n_values, (std::vector<Index>{128, 256}));
  EXPECT_EQ(cfg.cells().size(), 4u);
  EXPECT_EQ(cfg.cells()[1], (std::pair<Index, Index>{128, 32}));
  EXPECT_EQ(cfg.trials, 7);
  EXPECT_EQ(cfg.snr_db, 30.0);
  EXPECT_EQ(cfg.reweight_iters, 3);
  EXPECT_EQ(cfg.solvers, (std::vector<std::string>{"lasso", "arw"}));
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.arw_policy.kind, WeightPolicy::hybrid);
  EXPECT_EQ(cfg.arw_policy.switch_step, 4);
  EXPECT_EQ(cfg.jobs, 2);
  EXPECT_EQ(cfg.kkt_fail, 1e-5);
  EXPECT_EQ(cfg.homotopy.kkt_tol, 1e-9);
  EXPECT_EQ(cfg.homotopy.max_steps, 500);
  EXPECT_EQ(cfg.homotopy.factor_mode, FactorMode::inverse);
  EXPECT_EQ(cfg.homotopy.refactor_period, 100);
  EXPECT_EQ(cfg.prox.grad_tol, 1e-6);
  EXPECT_EQ(cfg.prox.level_tol, 1e-2);
  EXPECT_EQ(cfg.prox.max_inner, 1000);
  EXPECT_EQ(cfg.prox.continuation_factor, 8.0);
  EXPECT_EQ(cfg.prox.power_iters, 20);
}

TEST(Config, DefaultsAndExplicitM) {
  const auto d = parse_experiment_config("");
  EXPECT_EQ(d.cells().size(), 5u);
  EXPECT_EQ(d.trials, 100);
  const auto m = parse_experiment_config("[experiment]\nn = 64\nm = [20, 30]\n");
  EXPECT_EQ(m.cells(), (std::vector<std::pair<Index, Index>>{{64, 20}, {64, 30}}));
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_experiment_config("[experiment\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\nn = 100\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\ntrials = \"many\"\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\nsolvers = [\"lars\"]\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\nsignal = \"chirp\"\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[homotopy]\nfactor = \"qr\"\n"), ConfigError);
  EXPECT_THROW(parse_experiment_config("[experiment]\nn = 64\nm = [80]\n"), ConfigError);
  EXPECT_THROW(load_experiment_config("/nonexistent/config.toml"), ConfigError);
}
