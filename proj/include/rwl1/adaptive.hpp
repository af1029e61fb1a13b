#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "rwl1/homotopy.hpp"

namespace rwl1 {

enum class WeightPolicy { half_max, reciprocal, hybrid };

/// How active-set target weights are chosen at each step.
///   half_max:   every active target is max_{i in G} w_i / 2
///   reciprocal: min(tau, tau / (beta |x_i|)), beta = M ||x||_2^2 / ||x||_1^2
///   hybrid:     half_max for the first `switch_step` steps, then reciprocal
struct AdaptivePolicy {
  WeightPolicy kind = WeightPolicy::reciprocal;
  int switch_step = 10;

  /// Accepts "half-max", "reciprocal", "hybrid" and "hybrid:<k>".
  static AdaptivePolicy parse(const std::string& text) {
    if (text == "half-max" || text == "half_max") return {WeightPolicy::half_max, 10};
    if (text == "reciprocal") return {WeightPolicy::reciprocal, 10};
    if (text == "hybrid") return {WeightPolicy::hybrid, 10};
    if (text.rfind("hybrid:", 0) == 0) {
      std::size_t used = 0;
      int k = -1;
      try {
        k = std::stoi(text.substr(7), &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == text.size() - 7 && k >= 0) return {WeightPolicy::hybrid, k};
    }
    throw ContractViolation("unknown adaptive weight policy '" + text +
                            "' (expected half-max, reciprocal or hybrid:<k>)");
  }
};

struct AdaptiveWeightState {
  Vector w;
  Vector w_target;
  AdaptivePolicy policy;
  int step = 0;
  Index skip = -1;  // left at a zero-length step; not re-added on the next step
};

namespace detail {

inline Vector reciprocal_targets(const ActiveSetState& state, double tau, Index m) {
  Vector target = Vector::Constant(state.x.size(), tau);
  const double l1 = state.x.lpNorm<1>();
  if (!(l1 > 0.0)) return target;
  const double beta = static_cast<double>(m) * state.x.squaredNorm() / (l1 * l1);
  for (Index col : state.support()) {
    const double scaled = beta * std::abs(state.x(col));
    target(col) = scaled > 1.0 ? tau / scaled : tau;
  }
  return target;
}

}  // namespace detail

/// Desired weights for the next step. The inactive set gets one shared value,
/// the larger of tau and the largest active target.
inline Vector select_target_weights(const ActiveSetState& state, const AdaptiveWeightState& ws,
                                    double tau, Index m) {
  const auto& support = state.support();
  Vector target = ws.w;
  bool half = ws.policy.kind == WeightPolicy::half_max ||
              (ws.policy.kind == WeightPolicy::hybrid && ws.step < ws.policy.switch_step);
  if (half) {
    double wmax = 0.0;
    for (Index col : support) wmax = std::max(wmax, ws.w(col));
    for (Index col : support) target(col) = wmax / 2.0;
  } else {
    const Vector rec = detail::reciprocal_targets(state, tau, m);
    for (Index col : support) target(col) = rec(col);
  }

  double active_max = 0.0;
  for (Index col : support) active_max = std::max(active_max, target(col));
  const double inactive = std::max(active_max, tau);
  std::vector<char> active(static_cast<std::size_t>(target.size()), 0);
  for (Index col : support) active[static_cast<std::size_t>(col)] = 1;
  for (Index i = 0; i < target.size(); ++i)
    if (!active[static_cast<std::size_t>(i)]) target(i) = inactive;
  return target;
}

/// dx_G = (A_G^T A_G)^{-1} (W - W~) z, zero off the support.
inline Vector arw_direction(const ActiveSetState& state, const AdaptiveWeightState& ws) {
  return detail::support_direction(state, ws.w - ws.w_target);
}

/// One adaptive step: move weights toward ws.w_target until either an active
/// element hits zero (delta^- <= 1, removal) or the targets are reached
/// (delta* = 1), in which case the largest inactive correlation enters with
/// its weight pinned to that correlation. Inactive weights are then reset to
/// max_j |a_j^T (A x - y)|.
///
/// The outcome is reached_target when delta* = 1 but nothing enters: either
/// every weight and inactive correlation is already at or below tau, or the
/// support cannot grow further.
inline StepOutcome arw_step(ActiveSetState& state, AdaptiveWeightState& ws, const DenseMatrix& A,
                            double tau, OpCounter& counter) {
  const Vector dx = arw_direction(state, ws);
  Vector d = detail::gram_direction(state, A, dx, counter);
  auto minus = detail::shrink_to_zero_step(state, dx);
  // An element that entered last step still sits at zero. If the new
  // direction pushes it against its sign it cannot stay, so it leaves before
  // anything moves.
  const auto& cols = state.support();
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (state.x(cols[k]) == 0.0 && dx(cols[k]) * state.signs[k] < 0.0) {
      minus = {0.0, cols[k]};
      break;
    }
  }

  StepOutcome out;
  if (minus.first <= 1.0) {
    out.kind = StepKind::remove;
    out.index = minus.second;
    out.step_size = minus.first;
  } else {
    out.kind = StepKind::add;
    out.step_size = 1.0;
  }
  if (!std::isfinite(out.step_size) || out.step_size < 0.0)
    throw PathStall("adaptive step: no admissible step size");

  const double delta = out.step_size;
  state.x.noalias() += delta * dx;
  state.correlations.noalias() += delta * d;
  for (Index col : state.support()) ws.w(col) += delta * (ws.w_target(col) - ws.w(col));

  ws.skip = -1;
  if (out.kind == StepKind::remove) {
    if (delta == 0.0) ws.skip = out.index;
    const Index pos = state.factor.position_of(out.index);
    state.x(out.index) = 0.0;
    state.factor.remove(pos);
    state.signs.erase(state.signs.begin() + pos);
  } else {
    std::vector<char> active(static_cast<std::size_t>(state.x.size()), 0);
    for (Index col : state.support()) active[static_cast<std::size_t>(col)] = 1;
    double active_wmax = 0.0;
    for (Index col : state.support()) active_wmax = std::max(active_wmax, ws.w(col));
    Index arg = -1;
    double best = -1.0;
    for (Index i = 0; i < state.correlations.size(); ++i) {
      if (active[static_cast<std::size_t>(i)] || i == ws.skip) continue;
      const double c = std::abs(state.correlations(i));
      if (c > best) { best = c; arg = i; }
    }
    const bool full = state.support_size() >= std::min(A.rows(), A.cols());
    if (arg < 0 || full || (best <= tau && active_wmax <= tau)) {
      out.kind = StepKind::reached_target;
    } else {
      out.index = arg;
      ws.w(arg) = best;
      const double z = -sign_of(state.correlations(arg));
      state.factor.insert(A, arg);
      state.signs.push_back(z == 0.0 ? 1.0 : z);
    }
  }

  double corr_max = inf_norm(state.correlations);
  std::vector<char> active(static_cast<std::size_t>(state.x.size()), 0);
  for (Index col : state.support()) active[static_cast<std::size_t>(col)] = 1;
  for (Index i = 0; i < ws.w.size(); ++i)
    if (!active[static_cast<std::size_t>(i)]) ws.w(i) = corr_max;
  ++ws.step;

  out.direction = dx;
  out.gram_direction = std::move(d);
  return out;
}

struct ArwResult {
  Vector x;
  Vector w;
  SolveReport report;
  ActiveSetState state;
};

/// Adaptive reweighting homotopy. Starts from x = 0 with every weight at
/// ||A^T y||_inf and stops once max_i w_i <= tau.
inline ArwResult solve_arw(const WeightedProblem& problem, const AdaptivePolicy& policy = {},
                           const SolverOptions& opts = {}) {
  const auto start = detail::Clock::now();
  require(problem.y.size() == problem.A.rows(), "solve_arw: y length does not match A");
  require(std::isfinite(problem.tau) && problem.tau > 0.0, "solve_arw: tau must be positive");
  const DenseMatrix& A = problem.A;
  const Index n = A.cols();

  OpCounter counter;
  ArwResult res;
  res.state = detail::empty_state(A, problem.y, opts, counter);
  ActiveSetState& st = res.state;
  const double corr0 = inf_norm(st.correlations);
  const double scale = std::max(1.0, corr0);

  AdaptiveWeightState ws;
  ws.policy = policy;
  ws.w = Vector::Constant(n, corr0 > 0.0 ? corr0 : problem.tau);

  if (corr0 > problem.tau) {
    Index first = 0;
    st.correlations.cwiseAbs().maxCoeff(&first);
    st.factor.insert(A, first);
    st.signs.push_back(-sign_of(st.correlations(first)));

    const int cap = opts.step_cap(A.rows(), n);
    // The inactive weight is a correlation maximum that can only reach tau up
    // to roundoff, hence the relative slack in the stopping test.
    const double stop = problem.tau * (1.0 + 1e-10);
    while (ws.w.maxCoeff() > stop) {
      if (res.report.steps >= cap)
        throw MaxSteps("adaptive homotopy exceeded " + std::to_string(cap) + " steps", st.x);
      ws.w_target = select_target_weights(st, ws, problem.tau, A.rows());
      const Index before = st.support_size();
      const StepOutcome out = arw_step(st, ws, A, problem.tau, counter);
      ++res.report.steps;
      if (out.kind != StepKind::reached_target) ++res.report.breakpoints;
      if (opts.on_step)
        opts.on_step(PathEvent{out.kind, out.index, out.step_size, ws.w.maxCoeff(), before,
                               st.support_size(), st, ws.w});
      // Full support with targets already met: nothing left to move.
      if (out.kind == StepKind::reached_target &&
          out.direction.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, inf_norm(st.x)))
        break;
    }
    for (Index i = 0; i < n; ++i)
      if (st.x(i) == 0.0 && ws.w(i) > problem.tau && ws.w(i) <= stop) ws.w(i) = problem.tau;
  }

  detail::finish_report(res.report, st, ws.w, scale);
  if (res.report.kkt_scaled > opts.kkt_tol) {
    detail::polish(st, A, problem.y, ws.w, counter);
    detail::finish_report(res.report, st, ws.w, scale);
  }
  res.x = st.x;
  res.w = ws.w;
  res.report.applications = counter.applications();
  res.report.wall_ms = detail::elapsed_ms(start);
  return res;
}

}  // namespace rwl1
