#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rwl1/errors.hpp"
#include "rwl1/gram_factor.hpp"
#include "rwl1/linalg.hpp"

namespace rwl1 {

/// minimize sum_i w_i |x_i| + 1/2 ||A x - y||^2, with tau the target threshold.
struct WeightedProblem {
  DenseMatrix A;
  Vector y;
  Vector w;
  double tau = 0.0;

  static WeightedProblem uniform(DenseMatrix A, Vector y, double tau) {
    const Index n = A.cols();
    return WeightedProblem{std::move(A), std::move(y), Vector::Constant(n, tau), tau};
  }

  Index rows() const { return A.rows(); }
  Index cols() const { return A.cols(); }

  void validate() const {
    require(y.size() == A.rows(), "WeightedProblem: y has length " + std::to_string(y.size()) +
                                      " but A has " + std::to_string(A.rows()) + " rows");
    require(w.size() == A.cols(), "WeightedProblem: w has length " + std::to_string(w.size()) +
                                      " but A has " + std::to_string(A.cols()) + " columns");
    require(A.allFinite() && y.allFinite(), "WeightedProblem: non-finite entries in A or y");
    require(w.allFinite() && (w.size() == 0 || w.minCoeff() > 0.0),
            "WeightedProblem: weights must be finite and strictly positive");
    require(std::isfinite(tau) && tau > 0.0, "WeightedProblem: tau must be finite and positive");
  }

  double objective(const Eigen::Ref<const Vector>& x) const {
    return w.cwiseProduct(x.cwiseAbs()).sum() + 0.5 * (A * x - y).squaredNorm();
  }
};

enum class StepKind { add, remove, reached_target };

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::add: return "add";
    case StepKind::remove: return "remove";
    default: return "reached_target";
  }
}

/// Homotopy walker state. Support order is the factor's column order and
/// `signs` is aligned with it; `correlations` caches p = A^T (A x - y).
struct ActiveSetState {
  Vector x;
  GramFactor factor;
  std::vector<double> signs;
  Vector correlations;

  const std::vector<Index>& support() const { return factor.columns(); }
  Index support_size() const { return factor.order(); }

  Vector signs_vector() const {
    return Eigen::Map<const Vector>(signs.data(), static_cast<Index>(signs.size()));
  }
};

struct StepOutcome {
  StepKind kind = StepKind::reached_target;
  Index index = -1;          // entering or leaving column
  double step_size = 0.0;    // delta*
  Vector direction;          // dx, zero off the support
  Vector gram_direction;     // d = A^T A dx
};

struct SolveReport {
  int steps = 0;             // homotopy iterations (one A^T A each)
  int breakpoints = 0;       // support changes
  double applications = 0;   // A^T A applications, half-unit convention
  double kkt_residual = 0;   // absolute, under the final weights
  double kkt_scaled = 0;     // kkt_residual / max(1, ||A^T y||_inf)
  double wall_ms = 0;
};

/// Snapshot handed to SolverOptions::on_step after each committed step.
struct PathEvent {
  StepKind kind;
  Index index;
  double step_size;
  double level;              // tau level (lasso), epsilon (irw), max weight (arw)
  Index support_before;
  Index support_after;
  const ActiveSetState& state;
  const Vector& weights;     // weights the committed iterate is optimal for
};

struct SolverOptions {
  double kkt_tol = 1e-8;
  int max_steps = 0;  // 0 selects 20 * min(M, N)
  FactorMode factor_mode = FactorMode::cholesky;
  int refactor_period = GramFactor::kDefaultRefactorPeriod;
  std::function<void(const PathEvent&)> on_step;

  int step_cap(Index m, Index n) const {
    return max_steps > 0 ? max_steps : static_cast<int>(20 * std::min(m, n));
  }
};

/// Optimality gap of x for the weighted problem (A, y, w).
///
/// On the support: |a_i^T (Ax - y) + w_i sign(x_i)|. Off it: the amount by
/// which |a_i^T (Ax - y)| exceeds w_i. Returns the maximum over all indices.
inline double kkt_residual_from_correlations(const Eigen::Ref<const Vector>& p,
                                             const Eigen::Ref<const Vector>& w,
                                             const Eigen::Ref<const Vector>& x) {
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double gap = x(i) != 0.0 ? std::abs(p(i) + w(i) * sign_of(x(i)))
                                   : std::max(0.0, std::abs(p(i)) - w(i));
    worst = std::max(worst, gap);
  }
  return worst;
}

inline double kkt_residual(const DenseMatrix& A, const Vector& y, const Vector& w, const Vector& x) {
  require(x.size() == A.cols() && w.size() == A.cols() && y.size() == A.rows(),
          "kkt_residual: dimension mismatch");
  const Vector p = A.transpose() * (A * x - y);
  return kkt_residual_from_correlations(p, w, x);
}

inline double kkt_residual(const WeightedProblem& problem, const Vector& x) {
  return kkt_residual(problem.A, problem.y, problem.w, x);
}

/// Scale used to make KKT residuals comparable across problems.
inline double kkt_scale(const DenseMatrix& A, const Vector& y) {
  return std::max(1.0, inf_norm(A.transpose() * y));
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// dx with A_G^T A_G dx_G = coeff_G .* z and zero elsewhere.
inline Vector support_direction(const ActiveSetState& state, const Eigen::Ref<const Vector>& coeff) {
  const auto& support = state.support();
  const Index s = state.support_size();
  Vector rhs(s);
  for (Index k = 0; k < s; ++k) rhs(k) = coeff(support[k]) * state.signs[k];
  const Vector u = state.factor.solve(rhs);
  Vector dx = Vector::Zero(state.x.size());
  for (Index k = 0; k < s; ++k) dx(support[k]) = u(k);
  return dx;
}

/// d = A^T A dx using the cached support columns; one A^T A application.
inline Vector gram_direction(const ActiveSetState& state, const DenseMatrix& A,
                             const Vector& dx, OpCounter& counter) {
  const auto& support = state.support();
  Vector coeffs(state.support_size());
  for (Index k = 0; k < coeffs.size(); ++k) coeffs(k) = dx(support[k]);
  counter.count_application(Operator::A);
  const Vector adx = state.factor.apply_columns(coeffs);
  return matvec_transpose(A, adx, counter);
}

/// Smallest positive ratio -x_i / dx_i over the support (delta^-).
inline std::pair<double, Index> shrink_to_zero_step(const ActiveSetState& state, const Vector& dx) {
  double best = std::numeric_limits<double>::infinity();
  Index arg = -1;
  for (Index col : state.support()) {
    if (dx(col) == 0.0) continue;
    const double ratio = -state.x(col) / dx(col);
    if (ratio > 0.0 && ratio < best) {
      best = ratio;
      arg = col;
    }
  }
  return {best, arg};
}

/// Smallest positive delta at which an inactive constraint
/// |p_i + delta d_i| <= q_i + delta s_i becomes active (delta^+).
template <typename Q, typename S>
std::pair<double, Index> constraint_hit_step(const ActiveSetState& state, const Vector& d, Q&& q,
                                             S&& s, Index skip) {
  const Vector& p = state.correlations;
  std::vector<char> active(static_cast<std::size_t>(p.size()), 0);
  for (Index col : state.support()) active[static_cast<std::size_t>(col)] = 1;

  double best = std::numeric_limits<double>::infinity();
  Index arg = -1;
  for (Index i = 0; i < p.size(); ++i) {
    if (active[static_cast<std::size_t>(i)]) continue;
    const double qi = q(i);
    const double si = s(i);
    const double den_up = d(i) - si;
    const double den_dn = d(i) + si;
    // A just-removed index sits on one bound and moves inward from it, so
    // only the opposite bound can be hit within this segment.
    const bool check_up = i != skip || p(i) < 0.0;
    const bool check_dn = i != skip || p(i) > 0.0;
    if (check_up && den_up != 0.0) {
      const double delta = (qi - p(i)) / den_up;
      if (delta > 0.0 && delta < best) { best = delta; arg = i; }
    }
    if (check_dn && den_dn != 0.0) {
      const double delta = (-qi - p(i)) / den_dn;
      if (delta > 0.0 && delta < best) { best = delta; arg = i; }
    }
  }
  return {best, arg};
}

/// Picks the event among add / remove / reaching the end of the parameter
/// range. Ties within 1e-12 (relative to `scale`) favour reaching the target,
/// then removal.
inline StepOutcome choose_event(std::pair<double, Index> plus, std::pair<double, Index> minus,
                                double limit, double scale) {
  const double tie = 1e-12 * std::max(1.0, scale);
  StepOutcome out;
  const double first_event = std::min(plus.first, minus.first);
  if (first_event >= limit - tie) {
    out.kind = StepKind::reached_target;
    out.step_size = limit;
  } else if (minus.first <= plus.first + tie) {
    out.kind = StepKind::remove;
    out.index = minus.second;
    out.step_size = minus.first;
  } else {
    out.kind = StepKind::add;
    out.index = plus.second;
    out.step_size = plus.first;
  }
  if (!std::isfinite(out.step_size) || out.step_size < 0.0)
    throw PathStall("no admissible step size (delta* = " + std::to_string(out.step_size) + ")");
  return out;
}

/// Entering column `col` is dependent on the support (typically a full
/// support of size M). With v = (u, z) and A_G u = -z a_col, A v = 0 and the
/// objective is flat along v at this breakpoint, so x slides along v until a
/// support coefficient reaches zero; that column leaves and `col` takes its
/// place. Returns the leaving column.
inline Index swap_in(ActiveSetState& state, const DenseMatrix& A, Index col, double z) {
  const auto& support = state.support();
  const Index s = state.support_size();
  const Vector u = state.factor.solve(-z * (state.factor.column_cache().transpose() * A.col(col)));
  double best = std::numeric_limits<double>::infinity();
  Index pos = -1;
  for (Index k = 0; k < s; ++k) {
    const double xk = state.x(support[k]);
    if (u(k) == 0.0 || sign_of(u(k)) == sign_of(xk)) continue;
    const double t = -xk / u(k);
    if (t < best) { best = t; pos = k; }
  }
  if (pos < 0) throw PathStall("dependent column " + std::to_string(col) + " cannot be swapped in");
  for (Index k = 0; k < s; ++k) state.x(support[k]) += best * u(k);
  state.x(col) = best * z;
  const Index leaving = support[pos];
  state.x(leaving) = 0.0;
  state.factor.remove(pos);
  state.signs.erase(state.signs.begin() + pos);
  state.factor.insert(A, col);
  state.signs.push_back(z);
  return leaving;
}

/// Moves along the outcome and applies its support change. Returns the
/// column removed from the support (or -1).
inline Index commit(ActiveSetState& state, const DenseMatrix& A, const StepOutcome& out) {
  state.x.noalias() += out.step_size * out.direction;
  state.correlations.noalias() += out.step_size * out.gram_direction;
  if (out.kind == StepKind::remove) {
    const Index pos = state.factor.position_of(out.index);
    state.x(out.index) = 0.0;
    state.factor.remove(pos);
    state.signs.erase(state.signs.begin() + pos);
    return out.index;
  }
  if (out.kind == StepKind::add) {
    double z = -sign_of(state.correlations(out.index));
    if (z == 0.0) z = 1.0;
    try {
      state.factor.insert(A, out.index);
    } catch (const DegenerateGram&) {
      return swap_in(state, A, out.index, z);
    }
    state.signs.push_back(z);
  }
  return -1;
}

inline ActiveSetState empty_state(const DenseMatrix& A, const Vector& y, const SolverOptions& opts,
                                  OpCounter& counter) {
  ActiveSetState st;
  st.x = Vector::Zero(A.cols());
  st.factor = GramFactor(opts.factor_mode, A.rows(), opts.refactor_period);
  st.correlations = -matvec_transpose(A, y, counter);
  return st;
}

/// Recomputes x on the support from the normal equations and refreshes p.
inline void polish(ActiveSetState& state, const DenseMatrix& A, const Vector& y, const Vector& w,
                   OpCounter& counter) {
  state.factor.refactorize();
  const auto& support = state.support();
  const Index s = state.support_size();
  if (s > 0) {
    Vector rhs(s);
    const Eigen::MatrixXd& cols = state.factor.column_cache();
    const Vector aty = cols.transpose() * y;
    for (Index k = 0; k < s; ++k) rhs(k) = aty(k) - w(support[k]) * state.signs[k];
    const Vector xs = state.factor.solve(rhs);
    for (Index k = 0; k < s; ++k) state.x(support[k]) = xs(k);
  }
  state.correlations = matvec_transpose(A, matvec(A, state.x, counter) - y, counter);
}

inline void finish_report(SolveReport& rep, const ActiveSetState& state, const Vector& w,
                          double scale) {
  rep.kkt_residual = kkt_residual_from_correlations(state.correlations, w, state.x);
  rep.kkt_scaled = rep.kkt_residual / scale;
}

}  // namespace detail

/// Lasso update direction: A_G^T A_G dx_G = profile_G .* z, zero off the
/// support. `profile` is w / tau; uniform weights give profile = 1.
inline Vector lasso_direction(const ActiveSetState& state, const Vector& profile) {
  return detail::support_direction(state, profile);
}

inline Vector lasso_direction(const ActiveSetState& state) {
  return lasso_direction(state, Vector::Ones(state.x.size()));
}

/// Next breakpoint of the lasso path when the level drops from
/// `tau_current` toward `tau_target`. Weights along the path are
/// level * profile. `skip` excludes a just-removed column from re-entry.
inline StepOutcome lasso_step_size(const ActiveSetState& state, const Vector& direction,
                                   double tau_current, double tau_target, const Vector& profile,
                                   const DenseMatrix& A, OpCounter& counter, Index skip = -1) {
  require(tau_current > tau_target, "lasso_step_size: tau_current must exceed the target");
  Vector d = detail::gram_direction(state, A, direction, counter);
  const auto plus = detail::constraint_hit_step(
      state, d, [&](Index i) { return tau_current * profile(i); },
      [&](Index i) { return -profile(i); }, skip);
  const auto minus = detail::shrink_to_zero_step(state, direction);
  StepOutcome out = detail::choose_event(plus, minus, tau_current - tau_target, tau_current);
  out.direction = direction;
  out.gram_direction = std::move(d);
  return out;
}

struct HomotopyResult {
  Vector x;
  SolveReport report;
  ActiveSetState state;
};

namespace detail {

inline HomotopyResult run_lasso_path(const WeightedProblem& problem, const SolverOptions& opts,
                                     OpCounter& counter) {
  const auto start = Clock::now();
  const DenseMatrix& A = problem.A;
  const Index n = A.cols();
  HomotopyResult res;
  res.state = empty_state(A, problem.y, opts, counter);
  ActiveSetState& st = res.state;
  const double scale = std::max(1.0, inf_norm(st.correlations));
  const Vector profile = problem.w / problem.tau;

  // Level at which x = 0 stops being optimal.
  Index first = 0;
  double level = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double l = std::abs(st.correlations(i)) / profile(i);
    if (l > level) { level = l; first = i; }
  }

  if (level > problem.tau) {
    st.factor.insert(A, first);
    st.signs.push_back(-sign_of(st.correlations(first)));
    const int cap = opts.step_cap(A.rows(), n);
    Index skip = -1;
    Vector weights;
    while (true) {
      if (res.report.steps >= cap)
        throw MaxSteps("lasso homotopy exceeded " + std::to_string(cap) + " steps", st.x);
      const Vector dx = lasso_direction(st, profile);
      const StepOutcome out = lasso_step_size(st, dx, level, problem.tau, profile, A, counter, skip);
      const Index before = st.support_size();
      skip = commit(st, A, out);
      level = out.kind == StepKind::reached_target ? problem.tau : level - out.step_size;
      ++res.report.steps;
      if (out.kind != StepKind::reached_target) ++res.report.breakpoints;
      if (opts.on_step) {
        weights = level * profile;
        opts.on_step(PathEvent{out.kind, out.index, out.step_size, level, before,
                               st.support_size(), st, weights});
      }
      if (out.kind == StepKind::reached_target) break;
    }
  }

  finish_report(res.report, st, problem.w, scale);
  if (res.report.kkt_scaled > opts.kkt_tol) {
    polish(st, A, problem.y, problem.w, counter);
    finish_report(res.report, st, problem.w, scale);
  }
  res.x = st.x;
  res.report.applications = counter.applications();
  res.report.wall_ms = elapsed_ms(start);
  return res;
}

}  // namespace detail

/// Weighted lasso by homotopy: the level starts at the value where x = 0 is
/// optimal and shrinks to problem.tau, one support change per breakpoint.
/// Unequal weights are followed as level * (w / tau).
inline HomotopyResult solve_lasso(const WeightedProblem& problem, const SolverOptions& opts = {}) {
  problem.validate();
  OpCounter counter;
  return detail::run_lasso_path(problem, opts, counter);
}

}  // namespace rwl1
