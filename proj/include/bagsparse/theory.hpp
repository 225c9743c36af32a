#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>

#include "bagsparse/core.hpp"
#include "bagsparse/lasso.hpp"

namespace bagsparse {

/// Upper end (exclusive) of the admissible RIP constant range.
inline const double kRipLimit = std::sqrt(2.0) - 1.0;

/// Approximation-error constant 2(1 - (1 - sqrt2) d) / (1 - (1 + sqrt2) d).
double c0(double delta);
/// Noise-amplification constant 4 sqrt(1 + d) / (1 - (1 + sqrt2) d).
double c1(double delta);

/// Tightest delta with (1-d)|v|^2 <= |Av|^2 <= (1+d)|v|^2 over all s-sparse v,
/// by enumerating every s-column Gram submatrix. A must have unit columns.
/// Throws CapacityError past 2e6 subsets.
double rip_constant_bruteforce(const DenseMatrix& a, std::size_t s);

/// Same enumeration without the unit-column precondition. Used on bootstrap
/// row subsets, whose columns are not normalized.
double restricted_isometry_constant(const DenseMatrix& a, std::size_t s);

/// Sum of the s largest |v_i| is below ||v||_1 / 2.
bool nsp_holds_for(const RealVector& v, std::size_t s);

/// Orthonormal basis of Null(A), one column per null direction.
Eigen::MatrixXd null_space_basis(const DenseMatrix& a);

/// Exact null space property check when Null(A) is one-dimensional.
bool nsp_check_nullity1(const DenseMatrix& a, std::size_t s);

/// Sampled evidence for the null space property: draws random unit vectors in
/// Null(A) and reports false on the first violation. Not a certificate.
bool nsp_check_sampled(const DenseMatrix& a, std::size_t s, std::size_t num_samples,
                       RngStream& rng);

/// exp(-2 n (xi - mean)^2 / (b - a)^2), or 1 when xi <= mean.
double hoeffding_tail_bound(std::size_t n, double xi, double mean, double a, double b);

/// Bounded scalar distribution with known support and mean.
class BoundedSampler {
 public:
  static BoundedSampler uniform(double lo, double hi);
  static BoundedSampler bernoulli(double p);
  /// N(mu, sigma^2) conditioned on [lo, hi].
  static BoundedSampler truncated_normal(double mu, double sigma, double lo, double hi);
  static BoundedSampler constant(double c);

  double lower() const noexcept { return lo_; }
  double upper() const noexcept { return hi_; }
  double mean() const noexcept { return mean_; }
  double draw(RngStream& rng) const;

 private:
  enum class Kind { kUniform, kBernoulli, kTruncatedNormal, kConstant };
  BoundedSampler(Kind kind, double p1, double p2, double lo, double hi, double mean)
      : kind_(kind), p1_(p1), p2_(p2), lo_(lo), hi_(hi), mean_(mean) {}
  Kind kind_;
  double p1_, p2_, lo_, hi_, mean_;
};

using TailBoundFormula =
    std::function<double(std::size_t n, double xi, double mean, double a, double b)>;

struct TailCheck {
  double empirical = 0.0;  // fraction of trials with sum >= n * xi
  double bound = 0.0;
  double std_error = 0.0;  // binomial standard error at p = bound
  bool passed = false;     // empirical <= bound + 3 std_error
};

/// Monte-Carlo check of the tail bound. `formula` defaults to
/// hoeffding_tail_bound and is replaceable for negative controls.
TailCheck verify_tail_bound_mc(const BoundedSampler& sampler, std::size_t n, double xi,
                               std::size_t mc_trials, RngStream& rng,
                               const TailBoundFormula& formula = {});

struct BoundInputs {
  double delta = 0.0;  // uniform bound on delta_2s of every bootstrap matrix
  std::size_t s = 1;
  std::size_t L = 1;
  std::size_t m = 1;
  std::size_t K = 1;
  double tau = 1.0;
  double z_l2 = 0.0;
  double z_inf = 0.0;
  double e_l1 = 0.0;  // l1 norm of the best s-term approximation error

  void validate() const;
};

struct BoundReport {
  BoundInputs inputs;
  double radius = 0.0;
  /// Lower bound on P(||x_B - x*||_2 <= radius). Not clamped below: values
  /// <= 0 mean the bound is vacuous.
  double prob_lower = 0.0;
};

/// Bagging error bound for exactly s-sparse ground truth:
/// radius = c1 (sqrt(L/m) |z|_2 + tau), prob >= 1 - exp(-2 K tau^4 / (L^2 |z|_inf^4)).
BoundReport bagging_bound_exact_sparse(const BoundInputs& in);

/// Bagging error bound for general ground truth, adding c0 s^{-1/2} |e|_1 to
/// the radius; prob >= 1 - exp(-2 K c1^4 tau^4 / b'^2) with
/// b' = (c0 s^{-1/2} |e|_1 + c1 sqrt(L) |z|_inf)^2.
BoundReport bagging_bound_general(const BoundInputs& in);

struct Theorem3Params {
  std::size_t n = 12;
  std::size_t m = 10;
  std::size_t s = 1;
  std::size_t L = 8;
  std::size_t K = 10;
  double tau = 1.0;
  /// Trials whose bootstrap matrices satisfy delta_(L,K) < sqrt2 - 1.
  std::size_t target_kept = 500;
  /// Hard cap on instances drawn while collecting kept trials.
  std::size_t max_attempts = 100000;
  /// Measurement SNR; +inf gives noiseless measurements.
  double snr_db = std::numeric_limits<double>::infinity();
  /// Small penalty so the Lasso behaves like basis pursuit.
  double lambda = 1e-4;
  LassoConfig solver{.lambda = 0.0, .rho = 1.0, .abs_tol = 1e-9, .rel_tol = 1e-9,
                     .max_iter = 20000};
};

struct Theorem3Validation {
  std::size_t attempts = 0;
  std::size_t kept = 0;
  std::size_t discarded = 0;  // trials with delta_(L,K) >= sqrt2 - 1
  std::size_t successes = 0;  // kept trials with error inside the radius
  double empirical_prob = 0.0;
  /// Mean over kept trials of each trial's probability lower bound.
  double prob_lower = 0.0;
  double std_error = 0.0;
  bool inconclusive = false;  // no trial met the hypothesis
  bool passed = false;        // empirical >= prob_lower - 3 std_error
};

/**
 * Monte-Carlo validation of the exact-sparse Bagging bound.
 *
 * Each attempt draws A with N(0, 1/L) entries, an s-sparse Gaussian x*,
 * noise at params.snr_db, and K bootstrap samples. delta_(L,K) is the
 * largest brute-force delta_2s over the K sampled matrices; attempts with
 * delta_(L,K) >= sqrt2 - 1 are discarded. Kept trials run Bagging with a
 * small lambda and score ||x_B - x*||_2 against that trial's radius.
 */
Theorem3Validation validate_theorem3_mc(const Theorem3Params& params, const RngStream& rng);

}  // namespace bagsparse
