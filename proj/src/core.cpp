#include "bagsparse/core.hpp"

#include <algorithm>
#include <cmath>

namespace bagsparse {

void require_finite(const DenseMatrix& a, const char* what) {
  if (!all_finite(a)) throw DomainError(std::string(what) + " contains non-finite entries");
}

void require_finite(const RealVector& v, const char* what) {
  if (!all_finite(v)) throw DomainError(std::string(what) + " contains non-finite entries");
}

DenseMatrix normalize_columns(const DenseMatrix& a) {
  DenseMatrix out = a;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double norm = a.col(j).norm();
    if (norm == 0.0) {
      throw DomainError("normalize_columns: column " + std::to_string(j) + " is zero");
    }
    out.col(j) /= norm;
  }
  return out;
}

DenseMatrix gaussian_matrix(std::size_t m, std::size_t n, RngStream& rng) {
  DenseMatrix a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  double* data = a.data();
  for (std::size_t k = 0; k < m * n; ++k) data[k] = rng.normal();
  return a;
}

RealVector gaussian_vector(std::size_t n, RngStream& rng) {
  RealVector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  return v;
}

double sorted_sum(std::span<double> values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

}  // namespace bagsparse
