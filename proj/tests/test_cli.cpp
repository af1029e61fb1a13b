// Drives the rwl1 executable end to end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(RWL1_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(RWL1_TEST_SCRATCH) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<double> column(const std::string& out, const std::string& key) {
  std::vector<double> v;
  const std::regex re(key + " ([-+0-9.eE]+|nan|inf)");
  for (auto it = std::sregex_iterator(out.begin(), out.end(), re); it != std::sregex_iterator(); ++it)
    v.push_back(std::stod((*it)[1].str()));
  return v;
}

}  // namespace

TEST(CliGen, WritesFilesDeterministically) {
  const auto a = scratch("gen_a"), b = scratch("gen_b");
  ASSERT_EQ(run("gen --kind blocks --n 64 --m 32 --seed 3 -o " + a.string()).code, 0);
  ASSERT_EQ(run("gen --kind blocks --n 64 --m 32 --seed 3 -o " + b.string()).code, 0);
  for (const char* f : {"A.mtx", "y.mtx", "xbar.mtx", "meta.toml"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto c = scratch("gen_c");
  ASSERT_EQ(run("gen --kind blocks --n 64 --m 32 --seed 4 -o " + c.string()).code, 0);
  EXPECT_NE(slurp(a / "y.mtx"), slurp(c / "y.mtx"));
}

TEST(CliGen, UsageErrors) {
  const auto d = scratch("gen_bad");
  EXPECT_EQ(run("gen --kind blocks --n 100 --m 32 -o " + d.string()).code, 1);
  EXPECT_EQ(run("gen --kind chirp --n 64 --m 32 -o " + d.string()).code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
}

TEST(CliSolve, ArwAutoTau) {
  const auto d = scratch("solve_arw");
  ASSERT_EQ(run("gen --kind blocks --n 128 --m 64 --seed 5 -o " + d.string()).code, 0);
  const auto r = run("solve --dir " + d.string() + " --solver arw --tau auto");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto kkt = column(r.out, "kkt_residual");
  ASSERT_EQ(kkt.size(), 1u) << r.out;
  EXPECT_LE(kkt[0], 1e-8);
}

TEST(CliSolve, IrwPrintsEveryIteration) {
  const auto d = scratch("solve_irw");
  ASSERT_EQ(run("gen --kind heavisine --n 128 --m 64 --seed 6 -o " + d.string()).code, 0);
  const auto r = run("solve --dir " + d.string() + " --solver irw --reweight-iters 5");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(column(r.out, "ser_db").size(), 6u) << r.out;
}

TEST(CliSolve, ProxMatchesLassoObjective) {
  const auto d = scratch("solve_prox");
  ASSERT_EQ(run("gen --kind blocks --n 64 --m 32 --seed 7 -o " + d.string()).code, 0);
  const auto lasso = run("solve --dir " + d.string() + " --solver lasso");
  const auto prox = run("solve --dir " + d.string() + " --solver prox --reweight-iters 0 --grad-tol 1e-11 --max-inner 2000000");
  ASSERT_EQ(lasso.code, 0) << lasso.out;
  ASSERT_EQ(prox.code, 0) << prox.out;
  const auto a = column(lasso.out, "objective"), b = column(prox.out, "objective");
  ASSERT_EQ(a.size(), 1u);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NEAR(a[0], b[0], 1e-8);
}

TEST(CliSolve, InputErrors) {
  const auto d = scratch("solve_bad");
  ASSERT_EQ(run("gen --kind blocks --n 64 --m 32 --seed 8 -o " + d.string()).code, 0);
  const auto e = scratch("solve_bad_other");
  ASSERT_EQ(run("gen --kind blocks --n 64 --m 16 --seed 8 -o " + e.string()).code, 0);
  // y from a 16-row problem against a 32-row A.
  EXPECT_EQ(run("solve --A " + (d / "A.mtx").string() + " --y " + (e / "y.mtx").string() +
                " --tau 0.1 --solver lasso")
                .code,
            2);
  EXPECT_EQ(run("solve --dir " + (d / "missing").string() + " --solver lasso").code, 2);
  EXPECT_EQ(run("solve --dir " + d.string() + " --solver lars").code, 1);
}

TEST(CliBench, SmokeRun) {
  const auto d = scratch("bench");
  {
    std::ofstream cfg(d / "exp.toml");
    cfg << "[experiment]\nn = 64\nm = [32]\ntrials = 2\nreweight_iters = 1\n"
           "solvers = [\"lasso\", \"arw\"]\nseed = 1\n";
  }
  const auto r = run("bench --config " + (d / "exp.toml").string() + " --jobs 2 -o " + (d / "out").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string trials = slurp(d / "out" / "trials.csv");
  const std::string summary = slurp(d / "out" / "summary.csv");
  EXPECT_EQ(std::count(trials.begin(), trials.end(), '\n'), 1 + 2 * 2);
  EXPECT_NE(summary.find("arw,64,32,0,ser_db"), std::string::npos);
  EXPECT_EQ(run("bench --config " + (d / "nope.toml").string() + " -o " + (d / "o2").string()).code, 2);
}
