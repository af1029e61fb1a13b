#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "rwl1/errors.hpp"

namespace rwl1 {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
/// M x N sensing matrix, row-major like the rest of the dense kernels.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Operator { A, At };

/// Tally of operator applications in units of one A^T A application.
///
/// A single application of A or of A^T is worth one half; a homotopy step is
/// worth one whole application. The tally is kept in halves so that it is
/// exact and order-independent.
class OpCounter {
 public:
  void count_application(Operator /*which*/) noexcept { ++halves_; }
  void count_step() noexcept { halves_ += 2; }
  void reset() noexcept { halves_ = 0; }

  double applications() const noexcept { return static_cast<double>(halves_) / 2.0; }
  std::uint64_t halves() const noexcept { return halves_; }

 private:
  std::uint64_t halves_ = 0;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation(what);
}

inline bool all_finite(const Eigen::Ref<const Vector>& v) { return v.allFinite(); }

/// A v, counted as half an A^T A application.
inline Vector matvec(const DenseMatrix& A, const Eigen::Ref<const Vector>& v, OpCounter& counter) {
  require(v.size() == A.cols(), "matvec: vector length " + std::to_string(v.size()) +
                                    " does not match matrix columns " + std::to_string(A.cols()));
  counter.count_application(Operator::A);
  return A * v;
}

/// A^T v, counted as half an A^T A application.
inline Vector matvec_transpose(const DenseMatrix& A, const Eigen::Ref<const Vector>& v,
                               OpCounter& counter) {
  require(v.size() == A.rows(), "matvec_transpose: vector length " + std::to_string(v.size()) +
                                    " does not match matrix rows " + std::to_string(A.rows()));
  counter.count_application(Operator::At);
  return A.transpose() * v;
}

inline double inf_norm(const Eigen::Ref<const Vector>& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace rwl1
