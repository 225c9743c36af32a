#include "bagsparse/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "bagsparse/ensemble.hpp"

namespace bagsparse {
namespace {

constexpr double kMaxSubsets = 2e6;

void check_delta(double delta) {
  if (!(delta >= 0.0) || !(delta < kRipLimit)) {
    throw DomainError("delta must lie in [0, sqrt(2) - 1); got " + std::to_string(delta));
  }
}

double binomial(std::size_t n, std::size_t k) {
  double out = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    out *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return out;
}

// Largest deviation of the Gram spectrum from 1 over s-column subsets.
// Returns early once the running maximum reaches `stop_at`.
double gram_deviation(const Eigen::MatrixXd& gram, std::size_t s, double stop_at) {
  const auto n = static_cast<std::size_t>(gram.rows());
  if (s == 0) return 0.0;
  if (binomial(n, s) > kMaxSubsets) {
    throw CapacityError("RIP enumeration over C(" + std::to_string(n) + ", " +
                        std::to_string(s) + ") subsets exceeds 2e6; use a smaller instance");
  }
  double worst = 0.0;
  std::vector<Eigen::Index> subset(s);
  std::iota(subset.begin(), subset.end(), Eigen::Index{0});
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dyn;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> pair;
  while (true) {
    double lo, hi;
    if (s == 1) {
      lo = hi = gram(subset[0], subset[0]);
    } else if (s == 2) {
      Eigen::Matrix2d g;
      g << gram(subset[0], subset[0]), gram(subset[0], subset[1]),
          gram(subset[1], subset[0]), gram(subset[1], subset[1]);
      pair.computeDirect(g, Eigen::EigenvaluesOnly);
      lo = pair.eigenvalues()[0];
      hi = pair.eigenvalues()[1];
    } else {
      for (std::size_t r = 0; r < s; ++r)
        for (std::size_t c = 0; c < s; ++c)
          sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
              gram(subset[r], subset[c]);
      dyn.compute(sub, Eigen::EigenvaluesOnly);
      lo = dyn.eigenvalues().minCoeff();
      hi = dyn.eigenvalues().maxCoeff();
    }
    worst = std::max({worst, 1.0 - lo, hi - 1.0});
    if (worst >= stop_at) return worst;

    // next combination in lexicographic order
    std::size_t pos = s;
    while (pos > 0 && static_cast<std::size_t>(subset[pos - 1]) == n - s + pos - 1) --pos;
    if (pos == 0) break;
    ++subset[pos - 1];
    for (std::size_t r = pos; r < s; ++r) subset[r] = subset[r - 1] + 1;
  }
  return worst;
}

void check_columns(std::size_t s, const DenseMatrix& a) {
  if (s > static_cast<std::size_t>(a.cols())) {
    throw DomainError("RIP order s=" + std::to_string(s) + " exceeds column count " +
                      std::to_string(a.cols()));
  }
}

}  // namespace

double c0(double delta) {
  check_delta(delta);
  const double r2 = std::sqrt(2.0);
  return 2.0 * (1.0 - (1.0 - r2) * delta) / (1.0 - (1.0 + r2) * delta);
}

double c1(double delta) {
  check_delta(delta);
  const double r2 = std::sqrt(2.0);
  return 4.0 * std::sqrt(1.0 + delta) / (1.0 - (1.0 + r2) * delta);
}

double restricted_isometry_constant(const DenseMatrix& a, std::size_t s) {
  check_columns(s, a);
  const Eigen::MatrixXd gram = a.transpose() * a;
  return gram_deviation(gram, s, std::numeric_limits<double>::infinity());
}

double rip_constant_bruteforce(const DenseMatrix& a, std::size_t s) {
  check_columns(s, a);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (std::abs(a.col(j).norm() - 1.0) > 1e-8) {
      throw DomainError("rip_constant_bruteforce: column " + std::to_string(j) +
                        " is not unit norm; normalize columns first");
    }
  }
  return restricted_isometry_constant(a, s);
}

bool nsp_holds_for(const RealVector& v, std::size_t s) {
  std::vector<double> mags(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(v[i]);
  const std::size_t k = std::min(s, mags.size());
  std::partial_sort(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end(),
                    std::greater<>());
  const double top = std::accumulate(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  return top < v.lpNorm<1>() / 2.0;
}

Eigen::MatrixXd null_space_basis(const DenseMatrix& a) {
  const Eigen::MatrixXd dense = a;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = sv.size() > 0 ? static_cast<double>(std::max(a.rows(), a.cols())) *
                                         sv[0] * std::numeric_limits<double>::epsilon()
                                   : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++rank;
  return svd.matrixV().rightCols(a.cols() - rank);
}

bool nsp_check_nullity1(const DenseMatrix& a, std::size_t s) {
  const Eigen::MatrixXd basis = null_space_basis(a);
  if (basis.cols() != 1) {
    throw DomainError("nsp_check_nullity1: null space has dimension " +
                      std::to_string(basis.cols()) + ", not 1; use nsp_check_sampled");
  }
  return nsp_holds_for(basis.col(0), s);
}

bool nsp_check_sampled(const DenseMatrix& a, std::size_t s, std::size_t num_samples,
                       RngStream& rng) {
  const Eigen::MatrixXd basis = null_space_basis(a);
  if (basis.cols() == 0) throw DomainError("nsp_check_sampled: null space is trivial");
  for (std::size_t t = 0; t < num_samples; ++t) {
    RealVector v = basis * gaussian_vector(static_cast<std::size_t>(basis.cols()), rng);
    const double norm = v.norm();
    if (norm == 0.0) continue;
    v /= norm;
    if (!nsp_holds_for(v, s)) return false;
  }
  return true;
}

double hoeffding_tail_bound(std::size_t n, double xi, double mean, double a, double b) {
  if (!(a < b)) throw DomainError("hoeffding_tail_bound: requires a < b");
  if (!(xi > mean)) return 1.0;
  const double gap = xi - mean;
  const double v = std::exp(-2.0 * static_cast<double>(n) * gap * gap / ((b - a) * (b - a)));
  return std::clamp(v, 0.0, 1.0);
}

BoundedSampler BoundedSampler::uniform(double lo, double hi) {
  if (!(lo < hi)) throw DomainError("uniform sampler: requires lo < hi");
  return {Kind::kUniform, 0.0, 0.0, lo, hi, 0.5 * (lo + hi)};
}

BoundedSampler BoundedSampler::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("bernoulli sampler: p must be in [0, 1]");
  return {Kind::kBernoulli, p, 0.0, 0.0, 1.0, p};
}

BoundedSampler BoundedSampler::truncated_normal(double mu, double sigma, double lo, double hi) {
  if (!(lo < hi) || !(sigma > 0.0)) {
    throw DomainError("truncated normal sampler: requires lo < hi and sigma > 0");
  }
  const auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
  const auto cdf = [](double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); };
  const double alpha = (lo - mu) / sigma;
  const double beta = (hi - mu) / sigma;
  const double mass = cdf(beta) - cdf(alpha);
  if (!(mass > 1e-6)) throw DomainError("truncated normal sampler: interval has negligible mass");
  const double mean = mu + sigma * (pdf(alpha) - pdf(beta)) / mass;
  return {Kind::kTruncatedNormal, mu, sigma, lo, hi, mean};
}

BoundedSampler BoundedSampler::constant(double c) {
  // zero-width support is widened so that (b - a) stays positive
  return {Kind::kConstant, c, 0.0, c - 0.5, c + 0.5, c};
}

double BoundedSampler::draw(RngStream& rng) const {
  switch (kind_) {
    case Kind::kUniform:
      return rng.uniform(lo_, hi_);
    case Kind::kBernoulli:
      return rng.bernoulli(p1_) ? 1.0 : 0.0;
    case Kind::kTruncatedNormal:
      while (true) {
        const double v = p1_ + p2_ * rng.normal();
        if (v >= lo_ && v <= hi_) return v;
      }
    case Kind::kConstant:
      return p1_;
  }
  return p1_;
}

TailCheck verify_tail_bound_mc(const BoundedSampler& sampler, std::size_t n, double xi,
                               std::size_t mc_trials, RngStream& rng,
                               const TailBoundFormula& formula) {
  if (n < 1 || mc_trials < 1) throw DomainError("verify_tail_bound_mc: n and trials must be >= 1");
  const double threshold = static_cast<double>(n) * xi;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < mc_trials; ++t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += sampler.draw(rng);
    if (sum >= threshold) ++hits;
  }
  TailCheck out;
  out.empirical = static_cast<double>(hits) / static_cast<double>(mc_trials);
  out.bound = formula ? formula(n, xi, sampler.mean(), sampler.lower(), sampler.upper())
                      : hoeffding_tail_bound(n, xi, sampler.mean(), sampler.lower(),
                                             sampler.upper());
  const double p = std::clamp(out.bound, 0.0, 1.0);
  out.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(mc_trials));
  out.passed = out.empirical <= out.bound + 3.0 * out.std_error;
  return out;
}

void BoundInputs::validate() const {
  check_delta(delta);
  if (!(tau > 0.0)) throw DomainError("bound inputs: tau must be > 0");
  if (s < 1 || L < 1 || m < 1 || K < 1) throw DomainError("bound inputs: s, L, m, K must be >= 1");
  if (!(z_l2 >= 0.0) || !(z_inf >= 0.0)) throw DomainError("bound inputs: noise norms must be >= 0");
  if (z_inf > z_l2 * (1.0 + 1e-12)) throw DomainError("bound inputs: z_inf must not exceed z_l2");
  if (!(e_l1 >= 0.0)) throw DomainError("bound inputs: e_l1 must be >= 0");
}

BoundReport bagging_bound_exact_sparse(const BoundInputs& in) {
  in.validate();
  if (in.e_l1 != 0.0) throw DomainError("exact-sparse bound requires e_l1 == 0");
  BoundReport rep{in, 0.0, 0.0};
  const double ratio = static_cast<double>(in.L) / static_cast<double>(in.m);
  rep.radius = c1(in.delta) * (std::sqrt(ratio) * in.z_l2 + in.tau);
  if (in.z_inf == 0.0) {
    rep.prob_lower = 1.0;
  } else {
    const double L = static_cast<double>(in.L);
    const double exponent = -2.0 * static_cast<double>(in.K) * std::pow(in.tau, 4) /
                            (L * L * std::pow(in.z_inf, 4));
    rep.prob_lower = 1.0 - std::exp(exponent);
  }
  return rep;
}

BoundReport bagging_bound_general(const BoundInputs& in) {
  in.validate();
  BoundReport rep{in, 0.0, 0.0};
  const double ratio = static_cast<double>(in.L) / static_cast<double>(in.m);
  const double k0 = c0(in.delta);
  const double k1 = c1(in.delta);
  const double approx_term = k0 * in.e_l1 / std::sqrt(static_cast<double>(in.s));
  rep.radius = approx_term + k1 * (std::sqrt(ratio) * in.z_l2 + in.tau);
  const double b_root = approx_term + k1 * std::sqrt(static_cast<double>(in.L)) * in.z_inf;
  const double b_prime = b_root * b_root;
  if (b_prime == 0.0) {
    rep.prob_lower = 1.0;
  } else {
    const double exponent = -2.0 * static_cast<double>(in.K) * std::pow(k1, 4) *
                            std::pow(in.tau, 4) / (b_prime * b_prime);
    rep.prob_lower = 1.0 - std::exp(exponent);
  }
  return rep;
}

Theorem3Validation validate_theorem3_mc(const Theorem3Params& p, const RngStream& rng) {
  if (p.s < 1 || 2 * p.s > p.n) throw DomainError("validate_theorem3_mc: need 1 <= 2s <= n");
  if (p.m < 1 || p.L < 1 || p.K < 1) throw DomainError("validate_theorem3_mc: m, L, K must be >= 1");
  if (!(p.tau > 0.0)) throw DomainError("validate_theorem3_mc: tau must be > 0");

  LassoConfig solver = p.solver;
  solver.lambda = p.lambda;
  solver.validate();
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.L));

  Theorem3Validation out;
  double prob_sum = 0.0;
  while (out.kept < p.target_kept && out.attempts < p.max_attempts) {
    const RngStream trial = rng.child(out.attempts);
    ++out.attempts;

    RngStream a_rng = trial.child(role_tag("matrix"));
    const DenseMatrix a = gaussian_matrix(p.m, p.n, a_rng) * scale;
    const auto samples = draw_bootstrap_samples(p.m, p.L, p.K, trial.child(role_tag("bootstrap")));

    // hypothesis filter: delta_2s of every bootstrap matrix below sqrt2 - 1
    double delta = 0.0;
    for (const auto& sample : samples) {
      DenseMatrix sub(static_cast<Eigen::Index>(p.L), a.cols());
      for (std::size_t k = 0; k < p.L; ++k) {
        sub.row(static_cast<Eigen::Index>(k)) = a.row(static_cast<Eigen::Index>(sample.indices[k]));
      }
      const Eigen::MatrixXd gram = sub.transpose() * sub;
      delta = std::max(delta, gram_deviation(gram, 2 * p.s, kRipLimit));
      if (delta >= kRipLimit) break;
    }
    if (delta >= kRipLimit) {
      ++out.discarded;
      continue;
    }

    RngStream x_rng = trial.child(role_tag("signal"));
    RealVector x_star = RealVector::Zero(static_cast<Eigen::Index>(p.n));
    std::vector<std::size_t> positions(p.n);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    for (std::size_t i = 0; i < p.s; ++i) {
      std::swap(positions[i], positions[i + x_rng.index(p.n - i)]);
      x_star[static_cast<Eigen::Index>(positions[i])] = x_rng.normal();
    }
    const RealVector clean = a * x_star;
    RealVector z = RealVector::Zero(static_cast<Eigen::Index>(p.m));
    if (std::isfinite(p.snr_db)) {
      const double sigma = std::sqrt(std::pow(10.0, -p.snr_db / 10.0) * clean.squaredNorm() /
                                     static_cast<double>(p.m));
      RngStream z_rng = trial.child(role_tag("noise"));
      z = sigma * gaussian_vector(p.m, z_rng);
    }
    const RealVector y = clean + z;

    const BaggingResult bag = bagging_recover(a, y, samples, p.lambda, solver);
    BoundInputs in;
    in.delta = delta;
    in.s = p.s;
    in.L = p.L;
    in.m = p.m;
    in.K = p.K;
    in.tau = p.tau;
    in.z_l2 = z.norm();
    in.z_inf = z.lpNorm<Eigen::Infinity>();
    const BoundReport rep = bagging_bound_exact_sparse(in);

    ++out.kept;
    prob_sum += rep.prob_lower;
    if ((bag.x_bagged - x_star).norm() <= rep.radius) ++out.successes;
  }

  if (out.kept == 0) {
    out.inconclusive = true;
    return out;
  }
  const double kept = static_cast<double>(out.kept);
  out.empirical_prob = static_cast<double>(out.successes) / kept;
  out.prob_lower = prob_sum / kept;
  const double q = std::clamp(out.prob_lower, 0.0, 1.0);
  out.std_error = std::sqrt(q * (1.0 - q) / kept);
  out.passed = out.empirical_prob >= out.prob_lower - 3.0 * out.std_error;
  return out;
}

}  // namespace bagsparse
