#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rwl1/errors.hpp"
#include "rwl1/linalg.hpp"

namespace rwl1 {

enum class FactorMode { cholesky, inverse };

inline const char* to_string(FactorMode mode) {
  return mode == FactorMode::cholesky ? "cholesky" : "inverse";
}

/// Rank-one updatable representation of the Gram matrix G = A_G^T A_G of the
/// columns currently in the support.
///
/// In cholesky mode the payload is the upper-triangular R with R^T R = G.
/// In inverse mode the payload is G^{-1}, updated through the block form of
/// the matrix inversion lemma. Columns are kept in insertion order, which is
/// the order of the support; a copy of A_G is cached so that A_G c and the
/// periodic refactorization never touch the full matrix.
///
/// After `refactor_period` incremental updates the payload is rebuilt from
/// the column cache, which bounds accumulated roundoff.
class GramFactor {
 public:
  static constexpr double kPivotRelTol = 1e-12;
  static constexpr int kDefaultRefactorPeriod = 500;

  GramFactor() = default;
  GramFactor(FactorMode mode, Index rows, int refactor_period = kDefaultRefactorPeriod)
      : mode_(mode), rows_(rows), refactor_period_(refactor_period), cache_(rows, 0) {}

  FactorMode mode() const noexcept { return mode_; }
  Index order() const noexcept { return static_cast<Index>(columns_.size()); }
  bool empty() const noexcept { return columns_.empty(); }
  Index rows() const noexcept { return rows_; }
  const std::vector<Index>& columns() const noexcept { return columns_; }
  const Eigen::MatrixXd& payload() const noexcept { return payload_; }
  const Eigen::MatrixXd& column_cache() const noexcept { return cache_; }
  int updates_since_refactor() const noexcept { return updates_; }
  int refactor_count() const noexcept { return refactors_; }

  /// Position of column `col` in the support order, or -1.
  Index position_of(Index col) const {
    auto it = std::find(columns_.begin(), columns_.end(), col);
    return it == columns_.end() ? -1 : static_cast<Index>(it - columns_.begin());
  }
  bool contains(Index col) const { return position_of(col) >= 0; }

  /// Append column `col` of A to the factor.
  void insert(const DenseMatrix& A, Index col) {
    require(A.rows() == rows_, "GramFactor::insert: matrix has " + std::to_string(A.rows()) +
                                   " rows, factor expects " + std::to_string(rows_));
    require(col >= 0 && col < A.cols(), "GramFactor::insert: column index out of range");
    require(!contains(col), "GramFactor::insert: column " + std::to_string(col) + " already present");

    const Vector a = A.col(col);
    const double aa = a.squaredNorm();
    const Index s = order();
    const Vector v = cache_.transpose() * a;
    const double tol = kPivotRelTol * std::max(max_diag_, aa);

    if (mode_ == FactorMode::cholesky) {
      Vector r = v;
      if (s > 0) payload_.triangularView<Eigen::Upper>().transpose().solveInPlace(r);
      const double pivot2 = aa - r.squaredNorm();
      if (!(pivot2 > tol)) throw DegenerateGram(static_cast<std::size_t>(col), pivot2);
      payload_.conservativeResize(s + 1, s + 1);
      payload_.col(s).head(s) = r;
      payload_.row(s).head(s).setZero();
      payload_(s, s) = std::sqrt(pivot2);
    } else {
      const Vector b = payload_ * v;
      const double schur = aa - v.dot(b);
      if (!(schur > tol)) throw DegenerateGram(static_cast<std::size_t>(col), schur);
      payload_.conservativeResize(s + 1, s + 1);
      payload_.topLeftCorner(s, s).noalias() += (b * b.transpose()) / schur;
      payload_.col(s).head(s) = -b / schur;
      payload_.row(s).head(s) = -b.transpose() / schur;
      payload_(s, s) = 1.0 / schur;
    }

    cache_.conservativeResize(rows_, s + 1);
    cache_.col(s) = a;
    columns_.push_back(col);
    max_diag_ = std::max(max_diag_, aa);
    bump();
  }

  /// Drop the column at `position` in the support order.
  void remove(Index position) {
    const Index s = order();
    require(s > 0, "GramFactor::remove: factor is empty");
    require(position >= 0 && position < s, "GramFactor::remove: position out of range");

    if (mode_ == FactorMode::cholesky) {
      remove_cholesky(position);
    } else {
      remove_inverse(position);
    }

    for (Index j = position; j + 1 < s; ++j) cache_.col(j) = cache_.col(j + 1);
    cache_.conservativeResize(rows_, s - 1);
    columns_.erase(columns_.begin() + position);
    max_diag_ = columns_.empty() ? 0.0 : cache_.colwise().squaredNorm().maxCoeff();
    bump();
  }

  /// Returns u with G u = rhs.
  Vector solve(const Eigen::Ref<const Vector>& rhs) const {
    require(rhs.size() == order(), "GramFactor::solve: rhs length " + std::to_string(rhs.size()) +
                                       " does not match factor order " + std::to_string(order()));
    if (empty()) return Vector(0);
    if (mode_ == FactorMode::inverse) return payload_ * rhs;
    Vector u = rhs;
    payload_.triangularView<Eigen::Upper>().transpose().solveInPlace(u);
    payload_.triangularView<Eigen::Upper>().solveInPlace(u);
    return u;
  }

  /// A_G c for coefficients c in support order.
  Vector apply_columns(const Eigen::Ref<const Vector>& coeffs) const {
    require(coeffs.size() == order(), "GramFactor::apply_columns: length mismatch");
    if (empty()) return Vector::Zero(rows_);
    return cache_ * coeffs;
  }

  /// Replace the column set with `support` (in that order) and factor it fresh.
  void reset(const DenseMatrix& A, std::span<const Index> support) {
    require(A.rows() == rows_, "GramFactor::reset: row count mismatch");
    cache_.resize(rows_, static_cast<Index>(support.size()));
    columns_.assign(support.begin(), support.end());
    for (std::size_t j = 0; j < support.size(); ++j) cache_.col(static_cast<Index>(j)) = A.col(support[j]);
    max_diag_ = columns_.empty() ? 0.0 : cache_.colwise().squaredNorm().maxCoeff();
    refactorize();
  }

  /// Rebuild the payload from the cached columns, discarding update history.
  void refactorize() {
    const Index s = order();
    updates_ = 0;
    ++refactors_;
    if (s == 0) {
      payload_.resize(0, 0);
      return;
    }
    const Eigen::MatrixXd gram = cache_.transpose() * cache_;
    const double tol = kPivotRelTol * gram.diagonal().maxCoeff();
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(s, s);
    for (Index j = 0; j < s; ++j) {
      const double pivot2 = gram(j, j) - r.col(j).head(j).squaredNorm();
      if (!(pivot2 > tol)) throw DegenerateGram(static_cast<std::size_t>(columns_[j]), pivot2);
      r(j, j) = std::sqrt(pivot2);
      for (Index i = j + 1; i < s; ++i) {
        r(j, i) = (gram(j, i) - r.col(j).head(j).dot(r.col(i).head(j))) / r(j, j);
      }
    }
    if (mode_ == FactorMode::cholesky) {
      payload_ = std::move(r);
    } else {
      Eigen::MatrixXd rinv = Eigen::MatrixXd::Identity(s, s);
      r.triangularView<Eigen::Upper>().solveInPlace(rinv);
      payload_ = rinv * rinv.transpose();
    }
  }

 private:
  void bump() {
    ++updates_;
    if (refactor_period_ > 0 && updates_ >= refactor_period_) refactorize();
  }

  // Deleting a column of R leaves an upper Hessenberg tail; Givens rotations
  // on adjacent rows restore triangularity.
  void remove_cholesky(Index k) {
    const Index s = order();
    Eigen::MatrixXd h(s, s - 1);
    h.leftCols(k) = payload_.leftCols(k);
    h.rightCols(s - 1 - k) = payload_.rightCols(s - 1 - k);
    for (Index j = k; j < s - 1; ++j) {
      const double a = h(j, j);
      const double b = h(j + 1, j);
      const double rad = std::hypot(a, b);
      const double c = a / rad;
      const double sn = b / rad;
      for (Index col = j; col < s - 1; ++col) {
        const double top = h(j, col);
        const double bot = h(j + 1, col);
        h(j, col) = c * top + sn * bot;
        h(j + 1, col) = -sn * top + c * bot;
      }
      h(j + 1, j) = 0.0;
    }
    payload_ = h.topRows(s - 1);
  }

  void remove_inverse(Index k) {
    const Index s = order();
    std::vector<Index> keep;
    keep.reserve(static_cast<std::size_t>(s - 1));
    for (Index j = 0; j < s; ++j)
      if (j != k) keep.push_back(j);
    Eigen::MatrixXd e(s - 1, s - 1);
    Vector f(s - 1);
    for (Index i = 0; i < s - 1; ++i) {
      f(i) = payload_(keep[i], k);
      for (Index j = 0; j < s - 1; ++j) e(i, j) = payload_(keep[i], keep[j]);
    }
    const double g = payload_(k, k);
    e.noalias() -= (f * f.transpose()) / g;
    payload_ = std::move(e);
  }

  FactorMode mode_ = FactorMode::cholesky;
  Index rows_ = 0;
  int refactor_period_ = kDefaultRefactorPeriod;
  int updates_ = 0;
  int refactors_ = 0;
  double max_diag_ = 0.0;
  std::vector<Index> columns_;
  Eigen::MatrixXd payload_;
  Eigen::MatrixXd cache_;
};

/// Fresh factorization of A_G^T A_G for the given support, no update history.
inline GramFactor refactorize(const DenseMatrix& A, std::span<const Index> support,
                              FactorMode mode = FactorMode::cholesky,
                              int refactor_period = GramFactor::kDefaultRefactorPeriod) {
  std::vector<Index> seen(support.begin(), support.end());
  std::sort(seen.begin(), seen.end());
  require(std::adjacent_find(seen.begin(), seen.end()) == seen.end(),
          "refactorize: support indices must be distinct");
  for (Index j : support) require(j >= 0 && j < A.cols(), "refactorize: support index out of range");

  GramFactor f(mode, A.rows(), refactor_period);
  f.reset(A, support);
  return f;
}

}  // namespace rwl1
