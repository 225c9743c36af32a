#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "bagsparse/rng.hpp"

namespace bagsparse {

/// Dense row-major sensing matrix (m rows, n columns).
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealVector = Eigen::VectorXd;

/// Input violates an operation's mathematical precondition.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Request is well-posed but too large for an exhaustive method.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& v) {
  return v.derived().array().isFinite().all();
}

void require_finite(const DenseMatrix& a, const char* what);
void require_finite(const RealVector& v, const char* what);

/// Scales every column to unit Euclidean norm. Throws DomainError naming
/// the first zero column.
DenseMatrix normalize_columns(const DenseMatrix& a);

/// m x n matrix of i.i.d. N(0,1) draws, filled in row-major order.
DenseMatrix gaussian_matrix(std::size_t m, std::size_t n, RngStream& rng);

RealVector gaussian_vector(std::size_t n, RngStream& rng);

/// Sum of values in ascending order. Invariant to the order of the input.
double sorted_sum(std::span<double> values);

}  // namespace bagsparse
