#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "bagsparse/core.hpp"
#include "bagsparse/lasso.hpp"

namespace bagsparse {

/// Multiset of row indices drawn with replacement. Duplicates are kept.
struct BootstrapIndexSet {
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
};

struct EnsembleConfig {
  std::size_t K = 1;  // number of bootstrap estimators
  std::size_t L = 1;  // rows per bootstrap sample
  double lambda = 0.0;
  LassoConfig solver;
  RngStream rng{0};

  void validate() const;
};

struct BaggingResult {
  RealVector x_bagged;
  std::vector<LassoSolution> estimator_solutions;
  std::vector<BootstrapIndexSet> samples;
  std::size_t nonconverged = 0;
};

struct BolassoResult {
  RealVector x;
  std::vector<std::size_t> support;  // intersection of the estimator supports
  bool ridge_used = false;           // refit matrix was column-rank deficient
};

/// L = round(ratio * m), at least 1.
std::size_t bootstrap_size(double ratio, std::size_t m);

BootstrapIndexSet draw_bootstrap(std::size_t m, std::size_t L, RngStream& rng);

/// The K samples of an ensemble. Sample j comes from rng.child(j), so the
/// first K' samples of a K-sample draw equal a K'-sample draw.
std::vector<BootstrapIndexSet> draw_bootstrap_samples(std::size_t m, std::size_t L,
                                                      std::size_t K, const RngStream& rng);

/// Rows of (A, y) listed by I, duplicates physically repeated.
std::pair<DenseMatrix, RealVector> subsample_rows(const DenseMatrix& a, const RealVector& y,
                                                  const BootstrapIndexSet& index_set);

/// Coordinate-wise mean. Each coordinate is summed in sorted order, so the
/// result does not depend on the order of `estimates`.
RealVector ensemble_mean(std::span<const RealVector> estimates);

/// Draws cfg.K samples of size cfg.L and averages the per-sample Lasso fits.
BaggingResult bagging_recover(const DenseMatrix& a, const RealVector& y,
                              const EnsembleConfig& cfg);

/// Bagging on caller-supplied samples (the sampling step is skipped).
BaggingResult bagging_recover(const DenseMatrix& a, const RealVector& y,
                              std::vector<BootstrapIndexSet> samples, double lambda,
                              const LassoConfig& solver);

LassoSolution l1_baseline(const DenseMatrix& a, const RealVector& y, double lambda,
                          const LassoConfig& solver);

/// Least-squares refit of (A, y) on the intersection of the estimators'
/// supports {i : |x_j[i]| > support_eps}; zero elsewhere.
BolassoResult bolasso_from_estimates(const DenseMatrix& a, const RealVector& y,
                                     std::span<const RealVector> estimates,
                                     double support_eps = 1e-6);

BolassoResult bolasso_recover(const DenseMatrix& a, const RealVector& y,
                              const EnsembleConfig& cfg, double support_eps = 1e-6);

/// Both sides of ||x_B - x*||^2 <= (1/K) sum_j ||x_j - x*||^2.
struct JensenSides {
  double bagged_error = 0.0;
  double mean_estimator_error = 0.0;

  /// Holds up to a relative rounding slack of 1e-12.
  bool holds() const noexcept {
    return bagged_error <= mean_estimator_error * (1.0 + 1e-12) + 1e-300;
  }
};

JensenSides jensen_sides(const RealVector& x_bagged, std::span<const RealVector> estimates,
                         const RealVector& x_star);

}  // namespace bagsparse
