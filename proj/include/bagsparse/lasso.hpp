#pragma once

#include <span>
#include <vector>

#include "bagsparse/core.hpp"

namespace bagsparse {

/// Parameters for  min  lambda*||x||_1 + 0.5*||y - A x||^2  solved by ADMM.
struct LassoConfig {
  double lambda = 0.0;
  double rho = 1.0;
  double abs_tol = 1e-6;
  double rel_tol = 1e-4;
  int max_iter = 2000;
  /// Over-relaxation factor in (0, 2); 1 is plain ADMM.
  double relaxation = 1.0;

  /// Throws DomainError if any field is out of range.
  void validate() const;
};

struct LassoSolution {
  RealVector x;  // the sparse (w) iterate; exact zeros off the support
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
};

inline double soft_threshold(double v, double kappa) noexcept {
  if (v > kappa) return v - kappa;
  if (v < -kappa) return v + kappa;
  return 0.0;
}

/// lambda*||x||_1 + 0.5*||y - A x||^2
double lasso_objective(const DenseMatrix& a, const RealVector& y, double lambda,
                       const RealVector& x);

/**
 * Factorization of (A^T A + rho I) for the ADMM x-update.
 *
 * Wide matrices (rows < cols) factor the rows x rows system A A^T + rho I and
 * apply the Woodbury identity; tall ones factor the cols x cols system
 * directly. One factorization serves every lambda on the same (A, rho).
 * Both systems are positive definite for rho > 0, so rank-deficient A
 * (e.g. bootstrap samples with repeated rows) needs no special handling.
 */
class LassoFactorization {
 public:
  LassoFactorization(DenseMatrix a, double rho);

  const DenseMatrix& matrix() const noexcept { return a_; }
  double rho() const noexcept { return rho_; }

  /// out = (A^T A + rho I)^{-1} q. `scratch` is caller-owned workspace.
  void apply(const RealVector& q, RealVector& out, RealVector& scratch) const;

 private:
  DenseMatrix a_;
  double rho_;
  bool wide_;
  // wide: (A A^T + rho I)^{-1} A; tall: (A^T A + rho I)^{-1}
  Eigen::MatrixXd operator_;
};

/// Scaled ADMM state carried between consecutive solves on one factorization.
struct AdmmWarmStart {
  RealVector w;
  RealVector u;
  double lambda = 0.0;
};

/// Validates shapes and config, then runs ADMM with a fresh factorization.
LassoSolution solve_lasso(const DenseMatrix& a, const RealVector& y, const LassoConfig& cfg);

/// ADMM on a cached factorization. cfg.rho must equal factor.rho(). When
/// warm is non-null and non-empty the iterates start from it, and on return
/// it holds the final state.
LassoSolution solve_lasso(const LassoFactorization& factor, const RealVector& y,
                          const LassoConfig& cfg, AdmmWarmStart* warm = nullptr);

/// Solves every lambda in `lambdas` on one factorization, sweeping from the
/// largest lambda down with warm starts. Results follow the input order.
std::vector<LassoSolution> solve_lasso_path(const LassoFactorization& factor,
                                            const RealVector& y,
                                            std::span<const double> lambdas,
                                            const LassoConfig& base);

/// Cyclic coordinate descent on the same objective. Runs until the largest
/// coordinate change in a sweep is below 1e-10 or 1000000 sweeps elapse.
/// Independent of the ADMM path; used to cross-check it.
RealVector coordinate_descent_oracle(const DenseMatrix& a, const RealVector& y, double lambda);

/**
 * Largest violation of the Lasso optimality conditions at x.
 *
 * With g = A^T (y - A x): |g_i - lambda*sign(x_i)| on the support and
 * max(|g_i| - lambda, 0) off it. Zero iff x is optimal.
 */
double kkt_residual(const DenseMatrix& a, const RealVector& y, double lambda,
                    const RealVector& x);

}  // namespace bagsparse
