#include "bagsparse/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bagsparse {

void EnsembleConfig::validate() const {
  if (K < 1) throw DomainError("ensemble: K must be >= 1");
  if (L < 1) throw DomainError("ensemble: L must be >= 1");
  if (!(lambda >= 0.0)) throw DomainError("ensemble: lambda must be >= 0");
  solver.validate();
}

std::size_t bootstrap_size(double ratio, std::size_t m) {
  if (!(ratio > 0.0)) throw DomainError("bootstrap_size: ratio must be > 0");
  const auto rounded = std::llround(ratio * static_cast<double>(m));
  return static_cast<std::size_t>(std::max<long long>(1, rounded));
}

BootstrapIndexSet draw_bootstrap(std::size_t m, std::size_t L, RngStream& rng) {
  if (m < 1 || L < 1) throw DomainError("draw_bootstrap: m and L must be >= 1");
  BootstrapIndexSet out;
  out.indices.resize(L);
  for (auto& idx : out.indices) idx = rng.index(m);
  return out;
}

std::vector<BootstrapIndexSet> draw_bootstrap_samples(std::size_t m, std::size_t L,
                                                      std::size_t K, const RngStream& rng) {
  std::vector<BootstrapIndexSet> samples;
  samples.reserve(K);
  for (std::size_t j = 0; j < K; ++j) {
    RngStream stream = rng.child(j);
    samples.push_back(draw_bootstrap(m, L, stream));
  }
  return samples;
}

std::pair<DenseMatrix, RealVector> subsample_rows(const DenseMatrix& a, const RealVector& y,
                                                  const BootstrapIndexSet& index_set) {
  if (y.size() != a.rows()) throw DomainError("subsample_rows: y length differs from A rows");
  const auto rows = static_cast<Eigen::Index>(index_set.size());
  DenseMatrix sub(rows, a.cols());
  RealVector sub_y(rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const std::size_t src = index_set.indices[static_cast<std::size_t>(k)];
    if (src >= static_cast<std::size_t>(a.rows())) {
      throw DomainError("subsample_rows: index " + std::to_string(src) + " out of range for " +
                        std::to_string(a.rows()) + " rows");
    }
    sub.row(k) = a.row(static_cast<Eigen::Index>(src));
    sub_y[k] = y[static_cast<Eigen::Index>(src)];
  }
  return {std::move(sub), std::move(sub_y)};
}

RealVector ensemble_mean(std::span<const RealVector> estimates) {
  if (estimates.empty()) throw DomainError("ensemble_mean: no estimates");
  const Eigen::Index n = estimates.front().size();
  const auto count = static_cast<double>(estimates.size());
  RealVector mean(n);
  std::vector<double> column(estimates.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < estimates.size(); ++j) column[j] = estimates[j][i];
    mean[i] = sorted_sum(column) / count;
  }
  return mean;
}

BaggingResult bagging_recover(const DenseMatrix& a, const RealVector& y,
                              const EnsembleConfig& cfg) {
  cfg.validate();
  if (y.size() != a.rows()) throw DomainError("bagging_recover: y length differs from A rows");
  auto samples =
      draw_bootstrap_samples(static_cast<std::size_t>(a.rows()), cfg.L, cfg.K, cfg.rng);
  return bagging_recover(a, y, std::move(samples), cfg.lambda, cfg.solver);
}

BaggingResult bagging_recover(const DenseMatrix& a, const RealVector& y,
                              std::vector<BootstrapIndexSet> samples, double lambda,
                              const LassoConfig& solver) {
  if (samples.empty()) throw DomainError("bagging_recover: at least one sample is required");
  LassoConfig cfg = solver;
  cfg.lambda = lambda;
  cfg.validate();

  BaggingResult result;
  result.estimator_solutions.reserve(samples.size());
  std::vector<RealVector> estimates;
  estimates.reserve(samples.size());
  for (const auto& sample : samples) {
    auto [sub_a, sub_y] = subsample_rows(a, y, sample);
    LassoSolution sol = solve_lasso(sub_a, sub_y, cfg);
    if (!sol.converged) ++result.nonconverged;
    estimates.push_back(sol.x);
    result.estimator_solutions.push_back(std::move(sol));
  }
  result.x_bagged = ensemble_mean(estimates);
  result.samples = std::move(samples);
  return result;
}

LassoSolution l1_baseline(const DenseMatrix& a, const RealVector& y, double lambda,
                          const LassoConfig& solver) {
  LassoConfig cfg = solver;
  cfg.lambda = lambda;
  return solve_lasso(a, y, cfg);
}

BolassoResult bolasso_from_estimates(const DenseMatrix& a, const RealVector& y,
                                     std::span<const RealVector> estimates, double support_eps) {
  if (estimates.empty()) throw DomainError("bolasso: no estimates");
  if (!(support_eps > 0.0)) throw DomainError("bolasso: support_eps must be > 0");
  if (y.size() != a.rows()) throw DomainError("bolasso: y length differs from A rows");
  const Eigen::Index n = a.cols();

  BolassoResult out;
  out.x = RealVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool in_all = std::all_of(estimates.begin(), estimates.end(), [&](const RealVector& e) {
      return std::abs(e[i]) > support_eps;
    });
    if (in_all) out.support.push_back(static_cast<std::size_t>(i));
  }
  if (out.support.empty()) return out;

  const auto k = static_cast<Eigen::Index>(out.support.size());
  Eigen::MatrixXd sub(a.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    sub.col(c) = a.col(static_cast<Eigen::Index>(out.support[static_cast<std::size_t>(c)]));
  }
  Eigen::VectorXd coef;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
  if (qr.rank() == k) {
    coef = qr.solve(y);
  } else {
    out.ridge_used = true;
    Eigen::MatrixXd gram = sub.transpose() * sub;
    gram.diagonal().array() += 1e-10;
    coef = gram.ldlt().solve(sub.transpose() * y);
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    out.x[static_cast<Eigen::Index>(out.support[static_cast<std::size_t>(c)])] = coef[c];
  }
  return out;
}

BolassoResult bolasso_recover(const DenseMatrix& a, const RealVector& y,
                              const EnsembleConfig& cfg, double support_eps) {
  const BaggingResult bag = bagging_recover(a, y, cfg);
  std::vector<RealVector> estimates;
  estimates.reserve(bag.estimator_solutions.size());
  for (const auto& sol : bag.estimator_solutions) estimates.push_back(sol.x);
  return bolasso_from_estimates(a, y, estimates, support_eps);
}

JensenSides jensen_sides(const RealVector& x_bagged, std::span<const RealVector> estimates,
                         const RealVector& x_star) {
  if (estimates.empty()) throw DomainError("jensen_sides: no estimates");
  std::vector<double> errors;
  errors.reserve(estimates.size());
  for (const auto& e : estimates) errors.push_back((e - x_star).squaredNorm());
  JensenSides sides;
  sides.bagged_error = (x_bagged - x_star).squaredNorm();
  sides.mean_estimator_error = sorted_sum(errors) / static_cast<double>(estimates.size());
  return sides;
}

}  // namespace bagsparse
