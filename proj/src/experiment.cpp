#include "bagsparse/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>
#include <tuple>

#include "bagsparse/ensemble.hpp"

namespace bagsparse {
namespace {

// Per-cell accumulation across trials.
struct CellStats {
  std::vector<double> snr;  // one entry per trial, in trial order
  std::size_t solves = 0;
  std::size_t nonconverged = 0;
  std::size_t sentinel_hits = 0;
};

// Everything one (m, trial) work item contributes. Cells are laid out as
// l1[lambda], then bagging[ratio][K][lambda], then bolasso[ratio][K][lambda].
struct TrialOutcome {
  std::vector<double> snr;
  std::vector<std::size_t> solves;
  std::vector<std::size_t> nonconverged;
  JensenTally jensen;
};

struct CellLayout {
  std::size_t n_lambda, n_ratio, n_k;
  std::size_t l1(std::size_t li) const { return li; }
  std::size_t bag(std::size_t ri, std::size_t ki, std::size_t li) const {
    return n_lambda + (ri * n_k + ki) * n_lambda + li;
  }
  std::size_t bol(std::size_t ri, std::size_t ki, std::size_t li) const {
    return n_lambda + n_ratio * n_k * n_lambda + (ri * n_k + ki) * n_lambda + li;
  }
  std::size_t total() const { return n_lambda + 2 * n_ratio * n_k * n_lambda; }
};

bool is_sentinel(double snr) { return std::abs(snr) >= kSnrSentinelDb; }

TrialOutcome run_trial(const ExperimentSpec& spec, const CellLayout& layout, std::size_t m,
                       std::size_t trial) {
  const RngStream master(spec.seed);
  TrialOutcome out;
  out.snr.assign(layout.total(), 0.0);
  out.solves.assign(layout.total(), 0);
  out.nonconverged.assign(layout.total(), 0);

  RngStream instance_rng = master.derive(role_tag("instance"), trial, m);
  const ProblemInstance inst = generate_instance(spec.n, m, spec.s, spec.snr_db, instance_rng);
  const std::span<const double> lambdas(spec.lambda_grid);
  const std::size_t n_lambda = lambdas.size();

  if (spec.has(Scheme::kL1)) {
    const LassoFactorization factor(inst.a, spec.solver.rho);
    const auto path = solve_lasso_path(factor, inst.y, lambdas, spec.solver);
    for (std::size_t li = 0; li < n_lambda; ++li) {
      out.snr[layout.l1(li)] = recovered_snr(path[li].x, inst.x_star);
      out.solves[layout.l1(li)] = 1;
      out.nonconverged[layout.l1(li)] = path[li].converged ? 0 : 1;
    }
  }

  const bool need_ensemble = spec.has(Scheme::kBagging) || spec.has(Scheme::kBolasso);
  if (!need_ensemble) return out;

  const std::size_t k_max = *std::max_element(spec.k_values.begin(), spec.k_values.end());
  for (std::size_t ri = 0; ri < spec.ratio_values.size(); ++ri) {
    const std::size_t L = bootstrap_size(spec.ratio_values[ri], m);
    std::vector<BootstrapIndexSet> samples;
    if (spec.identity_sampling) {
      BootstrapIndexSet all;
      all.indices.resize(m);
      std::iota(all.indices.begin(), all.indices.end(), std::size_t{0});
      samples.assign(k_max, all);
    } else {
      samples = draw_bootstrap_samples(m, L, k_max, master.derive(role_tag("bootstrap"), trial, m, L));
    }

    // estimates[li][j]: estimator j at lambda index li
    std::vector<std::vector<RealVector>> estimates(n_lambda);
    std::vector<std::vector<char>> converged(n_lambda);
    for (std::size_t li = 0; li < n_lambda; ++li) {
      estimates[li].reserve(k_max);
      converged[li].reserve(k_max);
    }
    for (std::size_t j = 0; j < k_max; ++j) {
      auto [sub_a, sub_y] = subsample_rows(inst.a, inst.y, samples[j]);
      const LassoFactorization factor(std::move(sub_a), spec.solver.rho);
      auto path = solve_lasso_path(factor, sub_y, lambdas, spec.solver);
      for (std::size_t li = 0; li < n_lambda; ++li) {
        converged[li].push_back(path[li].converged ? 1 : 0);
        estimates[li].push_back(std::move(path[li].x));
      }
    }

    for (std::size_t ki = 0; ki < spec.k_values.size(); ++ki) {
      const std::size_t K = spec.k_values[ki];
      for (std::size_t li = 0; li < n_lambda; ++li) {
        const std::span<const RealVector> members(estimates[li].data(), K);
        const auto misses = static_cast<std::size_t>(
            std::count(converged[li].begin(), converged[li].begin() + static_cast<std::ptrdiff_t>(K), 0));
        if (spec.has(Scheme::kBagging)) {
          const RealVector bagged = ensemble_mean(members);
          const std::size_t cell = layout.bag(ri, ki, li);
          out.snr[cell] = recovered_snr(bagged, inst.x_star);
          out.solves[cell] = K;
          out.nonconverged[cell] = misses;
          const JensenSides sides = jensen_sides(bagged, members, inst.x_star);
          ++out.jensen.checks;
          if (!sides.holds()) ++out.jensen.violations;
        }
        if (spec.has(Scheme::kBolasso)) {
          const BolassoResult bol = bolasso_from_estimates(inst.a, inst.y, members, spec.support_eps);
          const std::size_t cell = layout.bol(ri, ki, li);
          out.snr[cell] = recovered_snr(bol.x, inst.x_star);
          out.solves[cell] = K;
          out.nonconverged[cell] = misses;
        }
      }
    }
  }
  return out;
}

SweepRecord summarize(Scheme scheme, std::size_t m, double ratio, std::size_t L, std::size_t K,
                      double lambda, const CellStats& stats) {
  SweepRecord rec;
  rec.scheme = scheme;
  rec.m = m;
  rec.ratio = ratio;
  rec.L = L;
  rec.K = K;
  rec.lambda = lambda;
  rec.trials = stats.snr.size();
  const double count = static_cast<double>(rec.trials);
  const double mean = std::accumulate(stats.snr.begin(), stats.snr.end(), 0.0) / count;
  double sq = 0.0;
  for (double v : stats.snr) sq += (v - mean) * (v - mean);
  rec.mean_snr_db = mean;
  rec.std_snr_db = rec.trials > 1 ? std::sqrt(sq / (count - 1.0)) : 0.0;
  rec.nonconverged_rate = stats.solves > 0 ? static_cast<double>(stats.nonconverged) /
                                                 static_cast<double>(stats.solves)
                                           : 0.0;
  rec.sentinel_hits = stats.sentinel_hits;
  rec.flagged = rec.nonconverged_rate > 0.10 || rec.sentinel_hits > 0;
  return rec;
}

}  // namespace

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::kL1:
      return "l1";
    case Scheme::kBagging:
      return "bagging";
    case Scheme::kBolasso:
      return "bolasso";
  }
  return "unknown";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  if (name == "l1") return Scheme::kL1;
  if (name == "bagging") return Scheme::kBagging;
  if (name == "bolasso") return Scheme::kBolasso;
  return std::nullopt;
}

ProblemInstance generate_instance(std::size_t n, std::size_t m, std::size_t s, double snr_db,
                                  RngStream& rng) {
  if (s > n) throw DomainError("generate_instance: sparsity exceeds dimension");
  if (m < 1 || n < 1) throw DomainError("generate_instance: m and n must be >= 1");
  ProblemInstance inst;
  inst.s = s;
  inst.snr_db = snr_db;
  inst.a = gaussian_matrix(m, n, rng);

  inst.x_star = RealVector::Zero(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> positions(n);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  for (std::size_t i = 0; i < s; ++i) {
    std::swap(positions[i], positions[i + rng.index(n - i)]);
  }
  for (std::size_t i = 0; i < s; ++i) {
    double v = rng.normal();
    while (v == 0.0) v = rng.normal();
    inst.x_star[static_cast<Eigen::Index>(positions[i])] = v;
  }

  const RealVector clean = inst.a * inst.x_star;
  inst.z = RealVector::Zero(static_cast<Eigen::Index>(m));
  if (std::isfinite(snr_db)) {
    const double variance =
        std::pow(10.0, -snr_db / 10.0) * clean.squaredNorm() / static_cast<double>(m);
    inst.z = std::sqrt(variance) * gaussian_vector(m, rng);
  } else if (snr_db < 0) {
    throw DomainError("generate_instance: snr_db must not be -inf");
  }
  inst.y = clean + inst.z;
  return inst;
}

double recovered_snr(const RealVector& x, const RealVector& x_star) {
  if (x.size() != x_star.size()) throw DomainError("recovered_snr: length mismatch");
  const double signal = x_star.squaredNorm();
  if (signal == 0.0) throw DomainError("recovered_snr: ground truth is the zero vector");
  const double error = (x - x_star).squaredNorm();
  if (error == 0.0) return kSnrSentinelDb;
  return std::clamp(10.0 * std::log10(signal / error), -kSnrSentinelDb, kSnrSentinelDb);
}

std::vector<double> log_lambda_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
    throw DomainError("log_lambda_grid: need 0 < lo <= hi and count >= 1");
  }
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

void ExperimentSpec::validate() const {
  if (n < 1) throw DomainError("experiment: n must be >= 1");
  if (s < 1 || s > n) throw DomainError("experiment: s must lie in [1, n]");
  if (m_values.empty() || ratio_values.empty() || k_values.empty() || lambda_grid.empty()) {
    throw DomainError("experiment: grids must be non-empty");
  }
  if (trials < 1) throw DomainError("experiment: trials must be >= 1");
  if (schemes.empty()) throw DomainError("experiment: no schemes selected");
  for (auto m : m_values)
    if (m < 1) throw DomainError("experiment: m values must be >= 1");
  for (double r : ratio_values)
    if (!(r > 0.0 && r <= 1.0)) throw DomainError("experiment: ratios must lie in (0, 1]");
  for (auto k : k_values)
    if (k < 1) throw DomainError("experiment: K values must be >= 1");
  for (double l : lambda_grid)
    if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("experiment: lambda values must be > 0");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw DomainError("experiment: snr_db must be a number or +inf");
  }
  if (identity_sampling) {
    for (double r : ratio_values)
      if (r != 1.0) throw DomainError("experiment: identity sampling requires ratio 1");
  }
  LassoConfig probe = solver;
  probe.lambda = 0.0;
  probe.validate();
}

bool ExperimentSpec::has(Scheme scheme) const {
  return std::find(schemes.begin(), schemes.end(), scheme) != schemes.end();
}

SweepResult run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  const CellLayout layout{spec.lambda_grid.size(), spec.ratio_values.size(), spec.k_values.size()};

  const std::size_t items = spec.m_values.size() * spec.trials;
  std::vector<TrialOutcome> outcomes(items);
  std::size_t workers = spec.jobs != 0 ? spec.jobs : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, items);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    while (!failed.load()) {
      const std::size_t item = next.fetch_add(1);
      if (item >= items) return;
      try {
        const std::size_t mi = item / spec.trials;
        const std::size_t trial = item % spec.trials;
        outcomes[item] = run_trial(spec, layout, spec.m_values[mi], trial);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult result;
  for (std::size_t mi = 0; mi < spec.m_values.size(); ++mi) {
    const std::size_t m = spec.m_values[mi];
    std::vector<CellStats> cells(layout.total());
    for (std::size_t t = 0; t < spec.trials; ++t) {
      const TrialOutcome& o = outcomes[mi * spec.trials + t];
      result.jensen.checks += o.jensen.checks;
      result.jensen.violations += o.jensen.violations;
      for (std::size_t c = 0; c < layout.total(); ++c) {
        cells[c].snr.push_back(o.snr[c]);
        cells[c].solves += o.solves[c];
        cells[c].nonconverged += o.nonconverged[c];
        if (is_sentinel(o.snr[c])) ++cells[c].sentinel_hits;
      }
    }
    const auto& lambdas = spec.lambda_grid;
    if (spec.has(Scheme::kL1)) {
      for (std::size_t li = 0; li < lambdas.size(); ++li) {
        result.records.push_back(
            summarize(Scheme::kL1, m, 1.0, m, 1, lambdas[li], cells[layout.l1(li)]));
      }
    }
    for (Scheme scheme : {Scheme::kBagging, Scheme::kBolasso}) {
      if (!spec.has(scheme)) continue;
      for (std::size_t ri = 0; ri < spec.ratio_values.size(); ++ri) {
        const double ratio = spec.ratio_values[ri];
        const std::size_t L = bootstrap_size(ratio, m);
        for (std::size_t ki = 0; ki < spec.k_values.size(); ++ki) {
          for (std::size_t li = 0; li < lambdas.size(); ++li) {
            const std::size_t cell =
                scheme == Scheme::kBagging ? layout.bag(ri, ki, li) : layout.bol(ri, ki, li);
            result.records.push_back(
                summarize(scheme, m, ratio, L, spec.k_values[ki], lambdas[li], cells[cell]));
          }
        }
      }
    }
  }
  result.best_lambda = best_lambda_records(result.records);
  return result;
}

std::vector<SweepRecord> best_lambda_records(const std::vector<SweepRecord>& records) {
  using Key = std::tuple<int, std::size_t, double, std::size_t>;
  std::map<Key, std::size_t> best;
  std::vector<Key> order;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const Key key{static_cast<int>(r.scheme), r.m, r.ratio, r.K};
    auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(key, i);
      order.push_back(key);
      continue;
    }
    const auto& cur = records[it->second];
    if (r.mean_snr_db > cur.mean_snr_db ||
        (r.mean_snr_db == cur.mean_snr_db && r.lambda < cur.lambda)) {
      it->second = i;
    }
  }
  std::vector<SweepRecord> out;
  out.reserve(order.size());
  for (const auto& key : order) out.push_back(records[best.at(key)]);
  return out;
}

std::vector<BestSummary> best_over(const std::vector<SweepRecord>& records) {
  static constexpr std::string_view kGroups[] = {"l1", "conventional_bagging", "bagging",
                                                 "bolasso"};
  const auto belongs = [](std::string_view group, const SweepRecord& r) {
    if (group == "l1") return r.scheme == Scheme::kL1;
    if (group == "conventional_bagging") return r.scheme == Scheme::kBagging && r.ratio == 1.0;
    if (group == "bagging") return r.scheme == Scheme::kBagging;
    return r.scheme == Scheme::kBolasso;
  };
  std::vector<std::size_t> ms;
  for (const auto& r : records)
    if (std::find(ms.begin(), ms.end(), r.m) == ms.end()) ms.push_back(r.m);

  std::vector<BestSummary> out;
  for (std::size_t m : ms) {
    for (std::string_view group : kGroups) {
      const SweepRecord* best = nullptr;
      for (const auto& r : records) {
        if (r.m != m || !belongs(group, r)) continue;
        if (best == nullptr || r.mean_snr_db > best->mean_snr_db ||
            (r.mean_snr_db == best->mean_snr_db && r.lambda < best->lambda)) {
          best = &r;
        }
      }
      if (best != nullptr) out.push_back({std::string(group), m, *best});
    }
  }
  return out;
}

}  // namespace bagsparse
