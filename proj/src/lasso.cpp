#include "bagsparse/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bagsparse {
namespace {

void check_shapes(const DenseMatrix& a, const RealVector& y, const char* op) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw DomainError(std::string(op) + ": matrix must have at least one row and column");
  }
  if (y.size() != a.rows()) {
    throw DomainError(std::string(op) + ": y has length " + std::to_string(y.size()) +
                      " but A has " + std::to_string(a.rows()) + " rows");
  }
}

}  // namespace

void LassoConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lasso: lambda must be >= 0");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("lasso: rho must be > 0");
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw DomainError("lasso: tolerances must be > 0");
  if (max_iter < 1) throw DomainError("lasso: max_iter must be >= 1");
  if (!(relaxation > 0.0 && relaxation < 2.0)) throw DomainError("lasso: relaxation must lie in (0, 2)");
}

double lasso_objective(const DenseMatrix& a, const RealVector& y, double lambda,
                       const RealVector& x) {
  return lambda * x.lpNorm<1>() + 0.5 * (y - a * x).squaredNorm();
}

LassoFactorization::LassoFactorization(DenseMatrix a, double rho)
    : a_(std::move(a)), rho_(rho), wide_(a_.rows() < a_.cols()) {
  if (!(rho_ > 0.0)) throw DomainError("LassoFactorization: rho must be > 0");
  Eigen::MatrixXd system;
  if (wide_) {
    system = a_ * a_.transpose();
  } else {
    system = a_.transpose() * a_;
  }
  system.diagonal().array() += rho_;
  const Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) {
    throw DomainError("LassoFactorization: Cholesky factorization failed");
  }
  // Applied operator is kept explicit: dense mat-vecs beat two triangular
  // solves per ADMM iteration at these sizes.
  if (wide_) {
    operator_ = llt.solve(Eigen::MatrixXd(a_));
  } else {
    operator_ = llt.solve(Eigen::MatrixXd::Identity(a_.cols(), a_.cols()));
  }
}

void LassoFactorization::apply(const RealVector& q, RealVector& out, RealVector& scratch) const {
  if (wide_) {
    // (A^T A + rho I)^{-1} q = (q - A^T (A A^T + rho I)^{-1} A q) / rho
    scratch.noalias() = operator_ * q;
    out.noalias() = a_.transpose() * scratch;
    out = (q - out) / rho_;
  } else {
    out.noalias() = operator_ * q;
  }
}

LassoSolution solve_lasso(const DenseMatrix& a, const RealVector& y, const LassoConfig& cfg) {
  check_shapes(a, y, "solve_lasso");
  cfg.validate();
  require_finite(a, "solve_lasso: A");
  require_finite(y, "solve_lasso: y");
  const LassoFactorization factor(a, cfg.rho);
  return solve_lasso(factor, y, cfg);
}

LassoSolution solve_lasso(const LassoFactorization& factor, const RealVector& y,
                          const LassoConfig& cfg, AdmmWarmStart* warm) {
  const DenseMatrix& a = factor.matrix();
  check_shapes(a, y, "solve_lasso");
  if (cfg.rho != factor.rho()) throw DomainError("solve_lasso: cfg.rho differs from factorization");
  const Eigen::Index n = a.cols();
  const double rho = cfg.rho;
  const double kappa = cfg.lambda / rho;
  const double alpha = cfg.relaxation;
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  const RealVector aty = a.transpose() * y;
  RealVector scratch, x(n), xr(n), w = RealVector::Zero(n), u = RealVector::Zero(n), w_old(n), q(n);
  if (warm != nullptr && warm->w.size() == n && warm->u.size() == n) {
    w = warm->w;
    u = warm->u;
    // rho*u is a subgradient of lambda*||w||_1 at the fixed point; rescale it
    if (warm->lambda > 0.0) u *= cfg.lambda / warm->lambda;
  } else {
    // At lambda >= ||A^T y||_inf the fixed point is w = 0, rho*u = A^T y.
    const double lambda_max = aty.lpNorm<Eigen::Infinity>();
    if (lambda_max > 0.0) u = aty * (std::min(1.0, cfg.lambda / lambda_max) / rho);
  }

  LassoSolution sol;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    q = aty + rho * (w - u);
    factor.apply(q, x, scratch);
    xr = alpha * x + (1.0 - alpha) * w;

    w_old.swap(w);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = soft_threshold(xr[i] + u[i], kappa);
    u += xr - w;

    const double r_norm = (x - w).norm();
    const double s_norm = rho * (w - w_old).norm();
    const double eps_pri = sqrt_n * cfg.abs_tol + cfg.rel_tol * std::max(x.norm(), w.norm());
    const double eps_dual = sqrt_n * cfg.abs_tol + cfg.rel_tol * rho * u.norm();

    sol.iterations = it;
    sol.primal_residual = r_norm;
    sol.dual_residual = s_norm;
    if (r_norm <= eps_pri && s_norm <= eps_dual) {
      sol.converged = true;
      break;
    }
  }
  sol.x = w;
  if (warm != nullptr) {
    warm->w = std::move(w);
    warm->u = std::move(u);
    warm->lambda = cfg.lambda;
  }
  return sol;
}

std::vector<LassoSolution> solve_lasso_path(const LassoFactorization& factor,
                                            const RealVector& y,
                                            std::span<const double> lambdas,
                                            const LassoConfig& base) {
  std::vector<std::size_t> order(lambdas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return lambdas[i] > lambdas[j]; });

  std::vector<LassoSolution> out(lambdas.size());
  AdmmWarmStart warm;
  LassoConfig cfg = base;
  for (std::size_t idx : order) {
    cfg.lambda = lambdas[idx];
    cfg.validate();
    out[idx] = solve_lasso(factor, y, cfg, &warm);
  }
  return out;
}

RealVector coordinate_descent_oracle(const DenseMatrix& a, const RealVector& y, double lambda) {
  check_shapes(a, y, "coordinate_descent_oracle");
  if (!(lambda >= 0.0)) throw DomainError("coordinate_descent_oracle: lambda must be >= 0");
  constexpr int kMaxSweeps = 1000000;
  constexpr double kTol = 1e-10;

  const Eigen::MatrixXd cols = a;  // column-major copy for contiguous column access
  const Eigen::Index n = cols.cols();
  const Eigen::VectorXd col_sq = cols.colwise().squaredNorm().transpose();
  RealVector x = RealVector::Zero(n);
  RealVector residual = y;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (col_sq[j] == 0.0) continue;
      const double old = x[j];
      const double rho_j = cols.col(j).dot(residual) + col_sq[j] * old;
      const double updated = soft_threshold(rho_j, lambda) / col_sq[j];
      const double delta = updated - old;
      if (delta != 0.0) {
        residual.noalias() -= delta * cols.col(j);
        x[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < kTol) break;
  }
  return x;
}

double kkt_residual(const DenseMatrix& a, const RealVector& y, double lambda,
                    const RealVector& x) {
  check_shapes(a, y, "kkt_residual");
  if (x.size() != a.cols()) throw DomainError("kkt_residual: x length differs from A columns");
  if (!(lambda >= 0.0)) throw DomainError("kkt_residual: lambda must be >= 0");
  const RealVector g = a.transpose() * (y - a * x);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    double v;
    if (x[i] > 0.0) {
      v = std::abs(g[i] - lambda);
    } else if (x[i] < 0.0) {
      v = std::abs(g[i] + lambda);
    } else {
      v = std::max(std::abs(g[i]) - lambda, 0.0);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace bagsparse
