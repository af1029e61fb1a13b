#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "rwl1/homotopy.hpp"
#include "rwl1/linalg.hpp"
#include "rwl1/random.hpp"

namespace rwl1 {

/// sign(u) max(|u| - alpha, 0)
inline double soft_threshold(double u, double alpha) {
  require(alpha >= 0.0, "soft_threshold: alpha must be non-negative");
  const double mag = std::abs(u) - alpha;
  return mag > 0.0 ? std::copysign(mag, u) : 0.0;
}

inline Vector soft_threshold(const Vector& u, const Vector& alpha) {
  Vector out(u.size());
  for (Index i = 0; i < u.size(); ++i) out(i) = soft_threshold(u(i), alpha(i));
  return out;
}

struct ProxOptions {
  double lipschitz = 0.0;           // <= 0: estimate by power iteration
  int power_iters = 50;
  double grad_tol = 1e-8;           // final KKT tolerance, relative to max(1, ||A^T y||_inf)
  double level_tol = 1e-3;          // same, for intermediate continuation levels
  int max_inner = 200000;
  double continuation_factor = 4.0;
  bool adaptive_reweight = false;
  double beta = 0.0;                // <= 0: beta = M ||x||_2^2 / ||x||_1^2
};

/// Largest eigenvalue of A^T A by power iteration, times 1.05.
inline double estimate_lipschitz(const DenseMatrix& A, int iters, OpCounter& counter) {
  require(iters >= 1, "estimate_lipschitz: iters must be at least 1");
  if (A.size() == 0) return 1.05;
  Rng rng(0x5eed'11b5'c4a1'e000ULL);
  Vector v(A.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  v.normalize();
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vector u = matvec_transpose(A, matvec(A, v, counter), counter);
    lambda = v.dot(u);
    const double norm = u.norm();
    if (norm == 0.0) break;
    v = u / norm;
  }
  return 1.05 * lambda;
}

inline double estimate_lipschitz(const DenseMatrix& A, int iters = 200) {
  OpCounter scratch;
  return estimate_lipschitz(A, iters, scratch);
}

/// One shrinkage step: soft(x - A^T (A x - y) / L, w / L).
inline Vector ista_step(const DenseMatrix& A, const Vector& y, const Vector& w, const Vector& x,
                        double lipschitz) {
  const Vector g = A.transpose() * (A * x - y);
  return soft_threshold(x - g / lipschitz, w / lipschitz);
}

struct ProxResult {
  Vector x;
  Vector w;  // weights of the final level
  SolveReport report;
};

namespace detail {

inline Vector beta_weights(const Vector& x, double level, Index m, double beta_fixed) {
  Vector w = Vector::Constant(x.size(), level);
  const double l1 = x.lpNorm<1>();
  if (!(l1 > 0.0)) return w;
  const double beta = beta_fixed > 0.0 ? beta_fixed
                                       : static_cast<double>(m) * x.squaredNorm() / (l1 * l1);
  for (Index i = 0; i < x.size(); ++i) {
    const double scaled = beta * std::abs(x(i));
    if (scaled > 1.0) w(i) = level / scaled;
  }
  return w;
}

/// ISTA at fixed weights until the KKT residual drops to `tol`. Each pass
/// evaluates the gradient once (one A, one A^T) and reuses it for both the
/// stopping test and the shrinkage step.
inline void ista_level(const DenseMatrix& A, const Vector& y, const Vector& w, double lipschitz,
                       double tol, int max_total, Vector& x, SolveReport& rep, OpCounter& counter) {
  const Vector thresh = w / lipschitz;
  while (true) {
    const Vector g = matvec_transpose(A, matvec(A, x, counter) - y, counter);
    rep.kkt_residual = kkt_residual_from_correlations(g, w, x);
    if (rep.kkt_residual <= tol) return;
    if (rep.steps >= max_total)
      throw MaxSteps("prox solver exceeded " + std::to_string(max_total) + " inner iterations", x);
    for (Index i = 0; i < x.size(); ++i) x(i) = soft_threshold(x(i) - g(i) / lipschitz, thresh(i));
    ++rep.steps;
  }
}

inline ProxResult run_prox(const DenseMatrix& A, const Vector& y, const Vector& w, double tau,
                           const ProxOptions& opts, const Vector* warm_start, OpCounter& counter) {
  const auto start = detail::Clock::now();
  require(y.size() == A.rows() && w.size() == A.cols(), "prox_solve: dimension mismatch");
  require(tau > 0.0, "prox_solve: tau must be positive");
  require(opts.continuation_factor > 1.0, "prox_solve: continuation_factor must exceed 1");

  const double lipschitz =
      opts.lipschitz > 0.0 ? opts.lipschitz : estimate_lipschitz(A, opts.power_iters, counter);
  require(lipschitz > 0.0, "prox_solve: Lipschitz constant must be positive");

  ProxResult res;
  const Vector aty = matvec_transpose(A, y, counter);
  const double scale = std::max(1.0, inf_norm(aty));

  // Level l uses weights (l / tau) w, or the beta rule when reweighting.
  double level = 0.0;
  for (Index i = 0; i < aty.size(); ++i) level = std::max(level, std::abs(aty(i)) * tau / w(i));
  res.x = Vector::Zero(A.cols());
  if (warm_start) {
    require(warm_start->size() == A.cols(), "prox_solve: warm start has wrong length");
    res.x = *warm_start;
    level = tau;
  }
  level = std::max(level, tau);

  while (true) {
    const bool final_level = level <= tau;
    if (opts.adaptive_reweight)
      res.w = beta_weights(res.x, level, A.rows(), opts.beta);
    else
      res.w = w * (level / tau);
    ista_level(A, y, res.w, lipschitz, (final_level ? opts.grad_tol : opts.level_tol) * scale,
               opts.max_inner, res.x, res.report, counter);
    if (final_level) break;
    level = std::max(tau, level / opts.continuation_factor);
  }

  res.report.kkt_scaled = res.report.kkt_residual / scale;
  res.report.applications = counter.applications();
  res.report.wall_ms = detail::elapsed_ms(start);
  return res;
}

}  // namespace detail

/// Iterative shrinkage-thresholding for the weighted problem with
/// continuation from the level where x = 0 is optimal down to problem.tau.
/// With a warm start the continuation is skipped.
inline ProxResult prox_solve(const WeightedProblem& problem, const ProxOptions& opts = {},
                             const Vector* warm_start = nullptr) {
  problem.validate();
  OpCounter counter;
  ProxOptions plain = opts;
  plain.adaptive_reweight = false;
  return detail::run_prox(problem.A, problem.y, problem.w, problem.tau, plain, warm_start, counter);
}

/// Continuation with adaptive reweighting: whenever the level changes the
/// weights become min(level, level / (beta |x_i|)) from the current iterate.
inline ProxResult prox_solve_adaptive(const DenseMatrix& A, const Vector& y, double tau,
                                      const ProxOptions& opts = {}) {
  require(y.size() == A.rows(), "prox_solve_adaptive: y length does not match A");
  OpCounter counter;
  ProxOptions adaptive = opts;
  adaptive.adaptive_reweight = true;
  return detail::run_prox(A, y, Vector::Constant(A.cols(), tau), tau, adaptive, nullptr, counter);
}

}  // namespace rwl1
