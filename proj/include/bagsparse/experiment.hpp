#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bagsparse/core.hpp"
#include "bagsparse/lasso.hpp"

namespace bagsparse {

enum class Scheme { kL1, kBagging, kBolasso };

std::string_view scheme_name(Scheme scheme);
std::optional<Scheme> parse_scheme(std::string_view name);

/// Recovered SNR assigned to an exact recovery (and the clamp on both sides).
inline constexpr double kSnrSentinelDb = 300.0;

struct ProblemInstance {
  DenseMatrix a;
  RealVector y;
  RealVector x_star;
  RealVector z;
  std::size_t s = 0;
  double snr_db = 0.0;
};

/**
 * Gaussian sensing matrix, s-sparse Gaussian ground truth on a uniformly
 * random support, and white Gaussian noise with per-entry variance
 * 10^(-snr_db/10) * ||A x*||^2 / m, so that E||z||^2 = 10^(-snr_db/10) ||A x*||^2.
 * snr_db = +inf gives z = 0.
 */
ProblemInstance generate_instance(std::size_t n, std::size_t m, std::size_t s, double snr_db,
                                  RngStream& rng);

/// 10 log10(||x*||^2 / ||x - x*||^2), clamped to +-300 dB.
double recovered_snr(const RealVector& x, const RealVector& x_star);

/// `count` points spaced evenly in log10 between lo and hi inclusive.
std::vector<double> log_lambda_grid(double lo, double hi, std::size_t count);

struct ExperimentSpec {
  std::size_t n = 200;
  std::size_t s = 50;
  double snr_db = 0.0;
  std::vector<std::size_t> m_values{50};
  std::vector<double> ratio_values{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<std::size_t> k_values{30, 50, 100};
  std::vector<double> lambda_grid = log_lambda_grid(0.01, 200.0, 25);
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  std::vector<Scheme> schemes{Scheme::kL1, Scheme::kBagging, Scheme::kBolasso};
  /// ADMM settings for every solve in the sweep.
  LassoConfig solver{.lambda = 0.0, .rho = 5.0, .abs_tol = 1e-6, .rel_tol = 1e-4,
                     .max_iter = 2000, .relaxation = 1.6};
  double support_eps = 1e-6;
  /// Worker threads; 0 uses every available core. Results do not depend on it.
  std::size_t jobs = 0;
  /// Test hook: every bootstrap sample is (0, 1, ..., m-1). Requires ratio 1.
  bool identity_sampling = false;

  void validate() const;
  bool has(Scheme scheme) const;
};

struct SweepRecord {
  Scheme scheme = Scheme::kL1;
  std::size_t m = 0;
  double ratio = 1.0;  // L/m; 1 for the l1 baseline
  std::size_t L = 0;
  std::size_t K = 1;  // 1 for the l1 baseline
  double lambda = 0.0;
  double mean_snr_db = 0.0;
  double std_snr_db = 0.0;
  std::size_t trials = 0;
  double nonconverged_rate = 0.0;
  std::size_t sentinel_hits = 0;
  bool flagged = false;  // nonconverged_rate > 10% or a sentinel was hit
};

struct JensenTally {
  std::size_t checks = 0;
  std::size_t violations = 0;
};

struct SweepResult {
  std::vector<SweepRecord> records;      // one per (scheme, m, ratio, K, lambda)
  std::vector<SweepRecord> best_lambda;  // lambda* per (scheme, m, ratio, K)
  JensenTally jensen;
};

/**
 * Runs the full grid. Trial t at measurement count m uses one instance for
 * every scheme and cell, so scheme comparisons are paired. Bootstrap sample j
 * of a (trial, m, L) cell is shared by every K > j, and Bolasso reuses the
 * Bagging estimators. Deterministic in spec.seed.
 */
SweepResult run_sweep(const ExperimentSpec& spec);

/// Per (scheme, m, ratio, K): the record with the largest mean SNR; ties go
/// to the smallest lambda.
std::vector<SweepRecord> best_lambda_records(const std::vector<SweepRecord>& records);

struct BestSummary {
  std::string group;  // l1, conventional_bagging, bagging, bolasso
  std::size_t m = 0;
  SweepRecord best;
};

/// Best mean SNR per (group, m). conventional_bagging is bagging restricted
/// to ratio 1. Groups without records are omitted.
std::vector<BestSummary> best_over(const std::vector<SweepRecord>& records);

}  // namespace bagsparse
