#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "rwl1/linalg.hpp"
#include "rwl1/random.hpp"
#include "rwl1/wavelets.hpp"

namespace rwl1 {

enum class SignalKind { blocks, heavisine };

inline const char* to_string(SignalKind k) { return k == SignalKind::blocks ? "blocks" : "heavisine"; }

inline SignalKind parse_signal_kind(const std::string& s) {
  if (s == "blocks") return SignalKind::blocks;
  if (s == "heavisine") return SignalKind::heavisine;
  throw ContractViolation("unknown signal kind '" + s + "' (expected blocks or heavisine)");
}

struct SignalSpec {
  SignalKind kind = SignalKind::blocks;
  Index n = 256;
  std::uint64_t seed = 0;

  void validate() const {
    require(is_power_of_two(n) && n >= 16,
            "signal length must be a power of two >= 16, got " + std::to_string(n));
  }
};

struct MeasurementSpec {
  Index m = 128;
  double snr_db = 40.0;
  std::uint64_t seed = 0;
};

/// `count` distinct interior boundaries in [1, n), sorted.
inline std::vector<Index> random_boundaries(Rng& rng, Index n, int count) {
  require(count >= 0 && count < n, "random_boundaries: too many regions for the length");
  std::vector<Index> cuts;
  while (static_cast<int>(cuts.size()) < count) {
    const Index b = static_cast<Index>(rng.uniform_int(1, n - 1));
    if (std::find(cuts.begin(), cuts.end(), b) == cuts.end()) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  return cuts;
}

/// Piecewise constant: 11 regions, the first at zero, each next one offset by
/// an integer drawn uniformly from [-5, 5].
inline Vector gen_blocks(const SignalSpec& spec) {
  spec.validate();
  require(spec.kind == SignalKind::blocks, "gen_blocks: spec.kind must be blocks");
  Rng rng(spec.seed);
  const auto cuts = random_boundaries(rng, spec.n, 10);
  Vector s(spec.n);
  double value = 0.0;
  std::size_t next = 0;
  for (Index i = 0; i < spec.n; ++i) {
    if (next < cuts.size() && i == cuts[next]) {
      value += static_cast<double>(rng.uniform_int(-5, 5));
      ++next;
    }
    s(i) = value;
  }
  return s;
}

/// a sin(2 pi c t / N) with a ~ U[4, 6], c ~ U[2, 2.5], plus an independent
/// N(0, 1) offset on each of three regions. `jump_scale` multiplies the offsets
/// (0 gives the bare sinusoid).
inline Vector gen_heavisine(const SignalSpec& spec, double jump_scale = 1.0) {
  spec.validate();
  require(spec.kind == SignalKind::heavisine, "gen_heavisine: spec.kind must be heavisine");
  Rng rng(spec.seed);
  const double amplitude = rng.uniform(4.0, 6.0);
  const double cycles = rng.uniform(2.0, 2.5);
  const auto cuts = random_boundaries(rng, spec.n, 2);
  const double offsets[3] = {rng.normal(), rng.normal(), rng.normal()};
  Vector s(spec.n);
  const double n = static_cast<double>(spec.n);
  for (Index i = 0; i < spec.n; ++i) {
    const int region = (i >= cuts[0]) + (i >= cuts[1]);
    s(i) = amplitude * std::sin(2.0 * std::numbers::pi * cycles * static_cast<double>(i) / n) +
           jump_scale * offsets[region];
  }
  return s;
}

inline Vector gen_signal(const SignalSpec& spec) {
  return spec.kind == SignalKind::blocks ? gen_blocks(spec) : gen_heavisine(spec);
}

/// Haar for blocks, Daubechies-4 for heavisine.
inline Vector sparsify(SignalKind kind, const Vector& signal) {
  return kind == SignalKind::blocks ? haar_forward(signal) : daub4_forward(signal);
}

inline Vector desparsify(SignalKind kind, const Vector& coeffs) {
  return kind == SignalKind::blocks ? haar_inverse(coeffs) : daub4_inverse(coeffs);
}

/// i.i.d. N(0, 1/m) entries, i.e. standard deviation 1/sqrt(m).
inline DenseMatrix gen_gaussian_matrix(Index m, Index n, std::uint64_t seed) {
  require(m > 0 && n > 0, "gen_gaussian_matrix: dimensions must be positive");
  Rng rng(seed);
  const double sd = 1.0 / std::sqrt(static_cast<double>(m));
  DenseMatrix A(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) A(i, j) = sd * rng.normal();
  return A;
}

struct NoisyMeasurement {
  Vector y;
  double sigma = 0.0;
};

/// sigma = ||clean|| / (sqrt(M) 10^(snr/20)). An infinite snr_db adds nothing.
inline NoisyMeasurement add_noise_at_snr(const Vector& clean, double snr_db, std::uint64_t seed) {
  require(clean.size() > 0 && clean.norm() > 0.0, "add_noise_at_snr: clean signal is all zero");
  require(!std::isnan(snr_db), "add_noise_at_snr: snr_db is NaN");
  NoisyMeasurement out{clean, 0.0};
  if (std::isinf(snr_db) && snr_db > 0.0) return out;
  out.sigma = clean.norm() / (std::sqrt(static_cast<double>(clean.size())) * std::pow(10.0, snr_db / 20.0));
  Rng rng(seed);
  for (Index i = 0; i < out.y.size(); ++i) out.y(i) += out.sigma * rng.normal();
  return out;
}

/// tau = sigma sqrt(ln N)
inline double default_tau(double sigma, Index n) {
  return sigma * std::sqrt(std::log(static_cast<double>(n)));
}

struct SyntheticProblem {
  Vector signal;
  Vector xbar;
  DenseMatrix A;
  Vector y;
  double sigma = 0.0;
  double tau = 0.0;
};

/// One replayable instance; every random piece has its own derived seed.
inline SyntheticProblem make_problem(SignalKind kind, Index n, Index m, double snr_db,
                                     std::uint64_t master, std::uint64_t trial) {
  require(m > 0 && m <= n, "make_problem: need 0 < m <= n");
  SyntheticProblem p;
  p.signal = gen_signal({kind, n, derive_seed(master, "signal", trial)});
  p.xbar = sparsify(kind, p.signal);
  p.A = gen_gaussian_matrix(m, n, derive_seed(master, "matrix", trial));
  const auto noisy = add_noise_at_snr(p.A * p.xbar, snr_db, derive_seed(master, "noise", trial));
  p.y = noisy.y;
  p.sigma = noisy.sigma;
  p.tau = default_tau(p.sigma, n);
  return p;
}

}  // namespace rwl1
