#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rwl1/homotopy.hpp"

namespace rwl1 {

/// Blend of old and new weights, (1 - epsilon) w_old + epsilon w_new.
struct WeightTransition {
  Vector w_old;
  Vector w_new;
  double epsilon = 0.0;

  void validate() const {
    require(w_old.size() == w_new.size(), "WeightTransition: weight arrays differ in length");
    require(w_old.size() == 0 || (w_old.minCoeff() > 0.0 && w_new.minCoeff() > 0.0),
            "WeightTransition: weights must be strictly positive");
    require(epsilon >= 0.0 && epsilon <= 1.0, "WeightTransition: epsilon outside [0, 1]");
  }

  Vector blended() const { return (1.0 - epsilon) * w_old + epsilon * w_new; }
};

/// dx_G = (A_G^T A_G)^{-1} (W_old - W_new) z, zero off the support.
inline Vector irw_direction(const ActiveSetState& state, const WeightTransition& t) {
  return detail::support_direction(state, t.w_old - t.w_new);
}

/// Next critical epsilon. q_i = (1 - eps) w_i + eps w~_i, s_i = w~_i - w_i.
inline StepOutcome irw_step_size(const ActiveSetState& state, const Vector& direction,
                                 const WeightTransition& t, const DenseMatrix& A,
                                 OpCounter& counter, Index skip = -1) {
  require(t.epsilon < 1.0, "irw_step_size: epsilon already reached 1");
  Vector d = detail::gram_direction(state, A, direction, counter);
  const double eps = t.epsilon;
  const auto plus = detail::constraint_hit_step(
      state, d, [&](Index i) { return (1.0 - eps) * t.w_old(i) + eps * t.w_new(i); },
      [&](Index i) { return t.w_new(i) - t.w_old(i); }, skip);
  const auto minus = detail::shrink_to_zero_step(state, direction);
  StepOutcome out = detail::choose_event(plus, minus, 1.0 - eps, 1.0);
  out.direction = direction;
  out.gram_direction = std::move(d);
  return out;
}

/// w_i = tau / (beta |x_i| + eps_reg), beta = M ||x||_2^2 / ||x||_1^2.
inline Vector update_weights_irw(const Vector& x_prev, double tau, Index m, double eps_reg = 1.0) {
  require(tau > 0.0 && eps_reg > 0.0, "update_weights_irw: tau and eps_reg must be positive");
  const double l1 = x_prev.lpNorm<1>();
  if (!(l1 > 0.0)) throw DegenerateWeights("update_weights_irw: previous solution is all zero");
  const double beta = static_cast<double>(m) * x_prev.squaredNorm() / (l1 * l1);
  return (tau / (beta * x_prev.array().abs() + eps_reg)).matrix();
}

/// Walks epsilon from 0 to 1 so that the solution for w_old becomes the
/// solution for w_new. `state` must be optimal for w_old on entry and is
/// optimal for w_new on return.
inline SolveReport track_weight_change(ActiveSetState& state, const DenseMatrix& A, const Vector& y,
                                       const Vector& w_old, const Vector& w_new,
                                       const SolverOptions& opts = {}) {
  const auto start = detail::Clock::now();
  OpCounter counter;
  WeightTransition t{w_old, w_new, 0.0};
  t.validate();
  require(w_old.size() == A.cols(), "track_weight_change: weight length mismatch");
  const double scale = kkt_scale(A, y);

  SolveReport rep;
  const int cap = opts.step_cap(A.rows(), A.cols());
  Index skip = -1;
  Vector weights;
  while (t.epsilon < 1.0) {
    if (rep.steps >= cap)
      throw MaxSteps("reweighting homotopy exceeded " + std::to_string(cap) + " steps", state.x);
    const Vector dx = irw_direction(state, t);
    const StepOutcome out = irw_step_size(state, dx, t, A, counter, skip);
    const Index before = state.support_size();
    skip = detail::commit(state, A, out);
    t.epsilon = out.kind == StepKind::reached_target ? 1.0 : t.epsilon + out.step_size;
    ++rep.steps;
    if (out.kind != StepKind::reached_target) ++rep.breakpoints;
    if (opts.on_step) {
      weights = t.blended();
      opts.on_step(PathEvent{out.kind, out.index, out.step_size, t.epsilon, before,
                             state.support_size(), state, weights});
    }
  }

  detail::finish_report(rep, state, w_new, scale);
  if (rep.kkt_scaled > opts.kkt_tol) {
    detail::polish(state, A, y, w_new, counter);
    detail::finish_report(rep, state, w_new, scale);
  }
  rep.applications = counter.applications();
  rep.wall_ms = detail::elapsed_ms(start);
  return rep;
}

struct IrwResult {
  Vector x;
  std::vector<SolveReport> reports;  // one per iteration, iteration 0 is the plain lasso
  std::vector<Vector> iterates;
  std::vector<Vector> weights;
  ActiveSetState state;
};

/// Iterative reweighting: a uniform-weight lasso solve, then `reweight_iters`
/// warm-started weight transitions with weights from update_weights_irw.
inline IrwResult solve_irw(const WeightedProblem& problem, int reweight_iters,
                           const SolverOptions& opts = {}, double eps_reg = 1.0) {
  require(reweight_iters >= 0, "solve_irw: reweight_iters must be non-negative");
  const WeightedProblem uniform{problem.A, problem.y, Vector::Constant(problem.cols(), problem.tau),
                                problem.tau};
  uniform.validate();

  IrwResult res;
  OpCounter counter;
  HomotopyResult first = detail::run_lasso_path(uniform, opts, counter);
  res.state = std::move(first.state);
  res.reports.push_back(first.report);
  res.iterates.push_back(first.x);
  res.weights.push_back(uniform.w);

  for (int k = 1; k <= reweight_iters; ++k) {
    Vector w_new;
    try {
      w_new = update_weights_irw(res.state.x, problem.tau, problem.rows(), eps_reg);
    } catch (const DegenerateWeights&) {
      w_new = uniform.w;
    }
    res.reports.push_back(
        track_weight_change(res.state, problem.A, problem.y, res.weights.back(), w_new, opts));
    res.iterates.push_back(res.state.x);
    res.weights.push_back(std::move(w_new));
  }
  res.x = res.state.x;
  return res;
}

}  // namespace rwl1
