#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rwl1/signals.hpp"

using namespace rwl1;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Orthonormal Haar analysis matrix for length 8, rows ordered
// [scaling, coarsest detail, ..., finest detail].
Eigen::MatrixXd haar8() {
  const double a = 1.0 / std::sqrt(8.0), b = 0.5, c = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(8, 8);
  H.row(0).setConstant(a);
  H.row(1) << a, a, a, a, -a, -a, -a, -a;
  H.row(2) << b, b, -b, -b, 0, 0, 0, 0;
  H.row(3) << 0, 0, 0, 0, b, b, -b, -b;
  for (int k = 0; k < 4; ++k) {
    H(4 + k, 2 * k) = c;
    H(4 + k, 2 * k + 1) = -c;
  }
  return H;
}

}  // namespace

TEST(Random, DeterministicStreams) {
  Rng a(42), b(42), c(43);
  bool differ = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differ |= x != c.next();
  }
  EXPECT_TRUE(differ);
}

TEST(Random, DeriveSeedSeparatesLabelsAndIndices) {
  std::set<std::uint64_t> seen;
  for (const char* label : {"signal", "matrix", "noise"})
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(7, label, i));
  EXPECT_EQ(seen.size(), 150u);
  EXPECT_EQ(derive_seed(7, "signal", 3), derive_seed(7, "signal", 3));
  EXPECT_NE(derive_seed(7, "signal", 3), derive_seed(8, "signal", 3));
}

TEST(Random, DistributionMoments) {
  Rng r(1);
  std::vector<double> u, g;
  for (int i = 0; i < 200000; ++i) {
    const double x = r.uniform();
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
    u.push_back(x);
    g.push_back(r.normal());
  }
  EXPECT_NEAR(oracle::mean(u), 0.5, 0.005);
  EXPECT_NEAR(oracle::mean(g), 0.0, 0.01);
  EXPECT_NEAR(oracle::stddev(g), 1.0, 0.01);
  std::vector<int> hits(11, 0);
  for (int i = 0; i < 110000; ++i) {
    const auto k = r.uniform_int(-5, 5);
    ASSERT_GE(k, -5);
    ASSERT_LE(k, 5);
    ++hits[static_cast<std::size_t>(k + 5)];
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}

TEST(Haar, Examples) {
  EXPECT_LE((haar_forward(vec({1, 1, 1, 1})) - vec({2, 0, 0, 0})).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(haar_forward(Vector::Ones(6)), ContractViolation);
  EXPECT_THROW(haar_inverse(Vector::Ones(12)), ContractViolation);
}

TEST(Haar, MatchesExplicitMatrix) {
  const Eigen::MatrixXd H = haar8();
  ASSERT_LE((H * H.transpose() - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-15);
  for (unsigned seed = 0; seed < 5; ++seed) {
    const Vector x = oracle::random_vector(8, seed);
    EXPECT_LE((haar_forward(x) - H * x).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Wavelets, ParsevalAndRoundTrip) {
  for (Index n : {16, 64, 256, 1024}) {
    const Vector x = oracle::random_vector(n, static_cast<unsigned>(n));
    for (int kind = 0; kind < 2; ++kind) {
      const Vector c = kind == 0 ? haar_forward(x) : daub4_forward(x);
      const Vector back = kind == 0 ? haar_inverse(c) : daub4_inverse(c);
      EXPECT_NEAR(c.norm(), x.norm(), 1e-12 * x.norm());
      EXPECT_LE((back - x).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Daub4, ConstantHasNoDetail) {
  const Vector c = daub4_forward(Vector::Constant(64, 3.0));
  EXPECT_NEAR(c(0), 3.0 * 8.0, 1e-12);
  EXPECT_LE(c.tail(63).cwiseAbs().maxCoeff(), 1e-12);
  // Two vanishing moments: a periodic-safe linear ramp leaves the interior
  // finest coefficients at zero.
  Vector ramp(64);
  for (Index i = 0; i < 64; ++i) ramp(i) = static_cast<double>(i);
  const Vector r = daub4_forward(ramp);
  EXPECT_LE(r.segment(32, 31).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Daub4, SynthesisMatrixIsOrthogonal) {
  const Index n = 32;
  Eigen::MatrixXd W(n, n);
  for (Index j = 0; j < n; ++j) W.col(j) = daub4_forward(Vector::Unit(n, j));
  EXPECT_LE((W * W.transpose() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Blocks, Structure) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Vector s = gen_blocks({SignalKind::blocks, 256, seed});
    EXPECT_EQ(s(0), 0.0);
    int regions = 1;
    for (Index i = 1; i < 256; ++i) {
      const double d = s(i) - s(i - 1);
      EXPECT_EQ(d, std::round(d));
      EXPECT_LE(std::abs(d), 5.0);
      if (d != 0.0) ++regions;
    }
    EXPECT_LE(regions, 11);
    EXPECT_EQ(s, gen_blocks({SignalKind::blocks, 256, seed}));
  }
  EXPECT_NE(gen_blocks({SignalKind::blocks, 256, 1}), gen_blocks({SignalKind::blocks, 256, 2}));
  EXPECT_THROW(gen_blocks({SignalKind::blocks, 100, 1}), ContractViolation);
  EXPECT_THROW(gen_blocks({SignalKind::blocks, 8, 1}), ContractViolation);
}

TEST(Blocks, HaarSparsity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Vector c = sparsify(SignalKind::blocks, gen_blocks({SignalKind::blocks, 256, seed}));
    Index nnz = 0;
    for (Index i = 0; i < c.size(); ++i) nnz += std::abs(c(i)) > 1e-9;
    EXPECT_LE(nnz, 11 * 8 + 1);
  }
}

TEST(HeaviSine, BareSinusoid) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Vector s = gen_heavisine({SignalKind::heavisine, 512, seed}, 0.0);
    EXPECT_LE(s.cwiseAbs().maxCoeff(), 6.0);
    EXPECT_GE(s.cwiseAbs().maxCoeff(), 4.0 * 0.99);
    // c cycles in [2, 2.5] cross zero 4 times on (0, N) (3 at exactly c = 2).
    int crossings = 0;
    for (Index i = 2; i < 512; ++i) crossings += (s(i) > 0) != (s(i - 1) > 0);
    EXPECT_GE(crossings, 3);
    EXPECT_LE(crossings, 4);
  }
}

TEST(HeaviSine, OffsetsAndDeterminism) {
  const SignalSpec spec{SignalKind::heavisine, 256, 9};
  const Vector s = gen_heavisine(spec);
  EXPECT_EQ(s, gen_heavisine(spec));
  EXPECT_EQ(s, gen_signal(spec));
  const Vector diff = s - gen_heavisine(spec, 0.0);
  std::set<long long> levels;
  for (double d : diff) levels.insert(std::llround(d * 1e9));
  EXPECT_LE(levels.size(), 3u);
  EXPECT_GE(levels.size(), 2u);
}

TEST(GaussianMatrix, Statistics) {
  const DenseMatrix A = gen_gaussian_matrix(256, 512, 3);
  EXPECT_NEAR(A.mean(), 0.0, 0.01 / std::sqrt(256.0) * 4);
  std::vector<double> norms;
  for (Index j = 0; j < 512; ++j) norms.push_back(A.col(j).norm());
  EXPECT_NEAR(oracle::mean(norms), 1.0, 0.01);
  EXPECT_EQ(A, gen_gaussian_matrix(256, 512, 3));
}

TEST(Noise, SnrOnTarget) {
  const Vector clean = oracle::random_vector(512, 5);
  for (double snr : {10.0, 20.0, 40.0}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto n = add_noise_at_snr(clean, snr, seed);
      EXPECT_NEAR(n.sigma, clean.norm() / (std::sqrt(512.0) * std::pow(10.0, snr / 20.0)), 1e-15);
      const double measured = 20.0 * std::log10(clean.norm() / (n.y - clean).norm());
      EXPECT_NEAR(measured, snr, 1.5);
    }
  }
}

TEST(Noise, InfiniteSnrIsExact) {
  const Vector clean = oracle::random_vector(64, 6);
  const auto n = add_noise_at_snr(clean, std::numeric_limits<double>::infinity(), 1);
  EXPECT_EQ(n.y, clean);
  EXPECT_EQ(n.sigma, 0.0);
  EXPECT_THROW(add_noise_at_snr(Vector::Zero(4), 20.0, 1), ContractViolation);
}

TEST(MakeProblem, ConsistentAndReplayable) {
  const auto p = make_problem(SignalKind::blocks, 256, 128, 40.0, 3, 7);
  EXPECT_EQ(p.A.rows(), 128);
  EXPECT_EQ(p.xbar.size(), 256);
  EXPECT_LE((desparsify(SignalKind::blocks, p.xbar) - p.signal).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(p.tau, p.sigma * std::sqrt(std::log(256.0)), 1e-15);
  const auto q = make_problem(SignalKind::blocks, 256, 128, 40.0, 3, 7);
  EXPECT_EQ(p.y, q.y);
  EXPECT_NE(p.y, make_problem(SignalKind::blocks, 256, 128, 40.0, 3, 8).y);
  EXPECT_THROW(make_problem(SignalKind::blocks, 256, 300, 40.0, 3, 7), ContractViolation);
  EXPECT_THROW(parse_signal_kind("chirp"), ContractViolation);
}
