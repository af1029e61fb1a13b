#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace rwl1 {

/// Precondition or dimension check failed at an API boundary.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The extended Gram matrix A_G^T A_G became numerically singular.
class DegenerateGram : public std::runtime_error {
 public:
  DegenerateGram(std::size_t column, double pivot)
      : std::runtime_error("degenerate Gram matrix when inserting column " +
                           std::to_string(column) + " (pivot " +
                           std::to_string(pivot) + ")"),
        column_(column),
        pivot_(pivot) {}

  std::size_t column() const noexcept { return column_; }
  double pivot() const noexcept { return pivot_; }

 private:
  std::size_t column_;
  double pivot_;
};

/// No admissible step size exists; the active-set state is numerically broken.
class PathStall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iteration cap hit. Carries the last committed iterate.
class MaxSteps : public std::runtime_error {
 public:
  MaxSteps(const std::string& what, Eigen::VectorXd partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}

  const Eigen::VectorXd& partial() const noexcept { return partial_; }

 private:
  Eigen::VectorXd partial_;
};

/// Reweighting rule has nothing to work with (all-zero solution).
class DegenerateWeights : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rwl1
