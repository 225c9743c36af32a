#include "bagsparse/cli.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "bagsparse/ensemble.hpp"

namespace bagsparse::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

// Typed field access with the dotted field path in every diagnostic.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return node_.contains(key); }

  void allow_only(std::initializer_list<const char*> keys) const {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& item : node_.items()) {
      if (!allowed.count(item.key())) {
        throw ConfigError(join_path(path_, item.key()) + ": unknown field");
      }
    }
  }

  const json& raw(const std::string& key) const {
    if (!has(key)) throw ConfigError(join_path(path_, key) + ": required field is missing");
    return node_.at(key);
  }

  Section section(const std::string& key) const { return Section(raw(key), join_path(path_, key)); }

  double number(const std::string& key) const { return as_number(raw(key), join_path(path_, key)); }
  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t count(const std::string& key) const {
    return as_count(raw(key), join_path(path_, key));
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? count(key) : fallback;
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) throw ConfigError(join_path(path_, key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(join_path(path_, key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = raw(key);
    const std::string p = join_path(path_, key);
    if (!v.is_array() || v.empty()) throw ConfigError(p + ": expected a non-empty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_number(v[i], p + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key) const {
    const json& v = raw(key);
    const std::string p = join_path(path_, key);
    if (!v.is_array() || v.empty()) throw ConfigError(p + ": expected a non-empty array");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_count(v[i], p + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  static double as_number(const json& v, const std::string& p) {
    // "inf" / "-inf" strings stand in for the infinities JSON cannot express.
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    if (!v.is_number()) throw ConfigError(p + ": expected a number");
    return v.get<double>();
  }

  static std::uint64_t as_count(const json& v, const std::string& p) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigError(p + ": expected a non-negative integer");
    }
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& node_;
  std::string path_;
};

LassoConfig parse_solver(const Section& sec, LassoConfig cfg) {
  sec.allow_only({"rho", "relaxation", "abs_tol", "rel_tol", "max_iter"});
  cfg.rho = sec.number("rho", cfg.rho);
  cfg.relaxation = sec.number("relaxation", cfg.relaxation);
  cfg.abs_tol = sec.number("abs_tol", cfg.abs_tol);
  cfg.rel_tol = sec.number("rel_tol", cfg.rel_tol);
  const auto iters = sec.count("max_iter", static_cast<std::uint64_t>(cfg.max_iter));
  if (iters > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
    throw ConfigError(join_path(sec.path(), "max_iter") + ": too large");
  }
  cfg.max_iter = static_cast<int>(iters);
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    throw ConfigError(sec.path() + ": " + e.what());
  }
  return cfg;
}

json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

BoundedSampler parse_sampler(const Section& sec) {
  const std::string kind = sec.text("kind");
  try {
    if (kind == "uniform") {
      sec.allow_only({"kind", "lo", "hi"});
      return BoundedSampler::uniform(sec.number("lo", 0.0), sec.number("hi", 1.0));
    }
    if (kind == "bernoulli") {
      sec.allow_only({"kind", "p"});
      return BoundedSampler::bernoulli(sec.number("p"));
    }
    if (kind == "truncated_normal") {
      sec.allow_only({"kind", "mu", "sigma", "lo", "hi"});
      return BoundedSampler::truncated_normal(sec.number("mu", 0.0), sec.number("sigma", 1.0),
                                              sec.number("lo", -1.0), sec.number("hi", 1.0));
    }
    if (kind == "constant") {
      sec.allow_only({"kind", "value"});
      return BoundedSampler::constant(sec.number("value"));
    }
  } catch (const DomainError& e) {
    throw ConfigError(sec.path() + ": " + e.what());
  }
  throw ConfigError(join_path(sec.path(), "kind") + ": unknown sampler '" + kind +
                    "' (uniform, bernoulli, truncated_normal, constant)");
}

std::string num(double v) { return fmt::format("{}", v); }

const json& require_section(const json& doc, const char* name) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  if (!doc.contains(name)) throw ConfigError(std::string(name) + ": required section is missing");
  return doc.at(name);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("output directory " + dir.string() + " cannot be created");
  }
}

ExperimentSpec load_spec(const SweepOptions& opts) {
  const json doc = load_config(opts.config_path);
  ExperimentSpec spec = parse_experiment(require_section(doc, "experiment"));
  if (opts.seed) spec.seed = *opts.seed;
  if (opts.jobs) spec.jobs = *opts.jobs;
  return spec;
}

}  // namespace

json load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    // The parser message carries the line and column.
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ExperimentSpec parse_experiment(const json& node) {
  const Section sec(node, "experiment");
  sec.allow_only({"n", "s", "snr_db", "m_values", "ratio_values", "k_values", "lambda_grid",
                  "trials", "seed", "schemes", "support_eps", "jobs", "solver"});
  ExperimentSpec spec;
  spec.n = sec.count("n", spec.n);
  spec.s = sec.count("s", spec.s);
  spec.snr_db = sec.number("snr_db", spec.snr_db);
  if (sec.has("m_values")) spec.m_values = sec.counts("m_values");
  if (sec.has("ratio_values")) spec.ratio_values = sec.numbers("ratio_values");
  if (sec.has("k_values")) spec.k_values = sec.counts("k_values");
  if (sec.has("lambda_grid")) {
    const json& g = sec.raw("lambda_grid");
    if (g.is_object()) {
      const Section grid(g, "experiment.lambda_grid");
      grid.allow_only({"min", "max", "count"});
      try {
        spec.lambda_grid =
            log_lambda_grid(grid.number("min"), grid.number("max"), grid.count("count"));
      } catch (const DomainError& e) {
        throw ConfigError(std::string("experiment.lambda_grid: ") + e.what());
      }
    } else {
      spec.lambda_grid = sec.numbers("lambda_grid");
    }
  }
  spec.trials = sec.count("trials", spec.trials);
  spec.seed = sec.count("seed", spec.seed);
  if (sec.has("schemes")) {
    const json& v = sec.raw("schemes");
    if (!v.is_array() || v.empty()) {
      throw ConfigError("experiment.schemes: expected a non-empty array");
    }
    spec.schemes.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = "experiment.schemes[" + std::to_string(i) + "]";
      if (!v[i].is_string()) throw ConfigError(p + ": expected a string");
      const auto scheme = parse_scheme(v[i].get<std::string>());
      if (!scheme) throw ConfigError(p + ": unknown scheme (l1, bagging, bolasso)");
      spec.schemes.push_back(*scheme);
    }
  }
  spec.support_eps = sec.number("support_eps", spec.support_eps);
  spec.jobs = sec.count("jobs", spec.jobs);
  if (sec.has("solver")) spec.solver = parse_solver(sec.section("solver"), spec.solver);
  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

json to_json(const ExperimentSpec& spec) {
  json schemes = json::array();
  for (Scheme s : spec.schemes) schemes.push_back(std::string(scheme_name(s)));
  return json{
      {"n", spec.n},
      {"s", spec.s},
      {"snr_db", number_json(spec.snr_db)},
      {"m_values", spec.m_values},
      {"ratio_values", spec.ratio_values},
      {"k_values", spec.k_values},
      {"lambda_grid", spec.lambda_grid},
      {"trials", spec.trials},
      {"seed", spec.seed},
      {"schemes", schemes},
      {"support_eps", spec.support_eps},
      {"jobs", spec.jobs},
      {"solver",
       {{"rho", spec.solver.rho},
        {"relaxation", spec.solver.relaxation},
        {"abs_tol", spec.solver.abs_tol},
        {"rel_tol", spec.solver.rel_tol},
        {"max_iter", spec.solver.max_iter}}},
  };
}

BoundInputs parse_bounds(const json& node) {
  const Section sec(node, "bounds");
  sec.allow_only({"delta", "s", "L", "m", "K", "tau", "z_l2", "z_inf", "e_l1"});
  BoundInputs in;
  in.delta = sec.number("delta");
  in.s = sec.count("s");
  in.L = sec.count("L");
  in.m = sec.count("m");
  in.K = sec.count("K");
  in.tau = sec.number("tau");
  in.z_l2 = sec.number("z_l2");
  in.z_inf = sec.number("z_inf");
  in.e_l1 = sec.number("e_l1", 0.0);
  try {
    in.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("bounds: ") + e.what());
  }
  return in;
}

VerifyPlan parse_verify(const json& node) {
  const Section sec(node, "verify");
  sec.allow_only({"seed", "tail_checks", "theorem3"});
  VerifyPlan plan;
  plan.seed = sec.count("seed", 0);
  if (sec.has("tail_checks")) {
    const json& arr = sec.raw("tail_checks");
    if (!arr.is_array()) throw ConfigError("verify.tail_checks: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Section c(arr[i], "verify.tail_checks[" + std::to_string(i) + "]");
      c.allow_only({"label", "sampler", "n", "xi", "trials", "negative_control"});
      TailCheckSpec t;
      t.label = c.has("label") ? c.text("label") : "tail_" + std::to_string(i);
      t.sampler = parse_sampler(c.section("sampler"));
      t.n = c.count("n");
      t.xi = c.number("xi");
      t.trials = c.count("trials", t.trials);
      t.negative_control = c.flag("negative_control", false);
      if (t.n < 1 || t.trials < 1) {
        throw ConfigError(c.path() + ": n and trials must be >= 1");
      }
      plan.tail_checks.push_back(std::move(t));
    }
  }
  if (sec.has("theorem3")) {
    const Section t(sec.raw("theorem3"), "verify.theorem3");
    t.allow_only({"n", "m", "s", "L", "K", "tau", "target_kept", "max_attempts", "snr_db",
                  "lambda", "solver"});
    Theorem3Params p;
    p.n = t.count("n", p.n);
    p.m = t.count("m", p.m);
    p.s = t.count("s", p.s);
    p.L = t.count("L", p.L);
    p.K = t.count("K", p.K);
    p.tau = t.number("tau", p.tau);
    p.target_kept = t.count("target_kept", p.target_kept);
    p.max_attempts = t.count("max_attempts", p.max_attempts);
    p.snr_db = t.number("snr_db", p.snr_db);
    p.lambda = t.number("lambda", p.lambda);
    if (t.has("solver")) p.solver = parse_solver(t.section("solver"), p.solver);
    plan.theorem3 = p;
  }
  return plan;
}

DenseMatrix read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || cell.find_first_not_of(" \t", used) != std::string::npos) {
        throw ConfigError(fmt::format("{}:{}: '{}' is not a number", path.string(), lineno, cell));
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError(fmt::format("{}:{}: expected {} values, found {}", path.string(), lineno,
                                    rows.front().size(), row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(path.string() + ": matrix is empty");
  DenseMatrix a(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) a(i, j) = rows[i][j];
  }
  return a;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string records_csv(const std::vector<SweepRecord>& records) {
  std::string out = "# bagsparse records v1\n";
  out += "scheme,m,ratio,L,K,lambda,mean_snr_db,std_snr_db,trials,nonconverged_rate,"
         "sentinel_hits,flagged\n";
  for (const auto& r : records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", scheme_name(r.scheme), r.m,
                       num(r.ratio), r.L, r.K, num(r.lambda), num(r.mean_snr_db),
                       num(r.std_snr_db), r.trials, num(r.nonconverged_rate), r.sentinel_hits,
                       r.flagged ? 1 : 0);
  }
  return out;
}

std::string best_csv(const std::vector<BestSummary>& summaries) {
  std::string out = "# bagsparse best v1\n";
  out += "group,m,ratio,L,K,lambda,mean_snr_db,std_snr_db,trials,flagged\n";
  for (const auto& b : summaries) {
    const auto& r = b.best;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", b.group, b.m, num(r.ratio), r.L, r.K,
                       num(r.lambda), num(r.mean_snr_db), num(r.std_snr_db), r.trials,
                       r.flagged ? 1 : 0);
  }
  return out;
}

std::string figure_csv(std::size_t m, const SweepResult& result) {
  std::string out = "# bagsparse figure v1\n";
  out += "series,ratio,K,lambda,mean_snr_db,std_snr_db\n";
  std::vector<double> ratios;
  const SweepRecord* l1 = nullptr;
  const SweepRecord* bolasso = nullptr;
  for (const auto& r : result.best_lambda) {
    if (r.m != m) continue;
    if (r.scheme == Scheme::kBagging) {
      out += fmt::format("bagging,{},{},{},{},{}\n", num(r.ratio), r.K, num(r.lambda),
                         num(r.mean_snr_db), num(r.std_snr_db));
      if (std::find(ratios.begin(), ratios.end(), r.ratio) == ratios.end()) {
        ratios.push_back(r.ratio);
      }
    } else if (r.scheme == Scheme::kL1) {
      if (l1 == nullptr || r.mean_snr_db > l1->mean_snr_db) l1 = &r;
    } else if (r.scheme == Scheme::kBolasso) {
      if (bolasso == nullptr || r.mean_snr_db > bolasso->mean_snr_db) bolasso = &r;
    }
  }
  if (ratios.empty()) ratios.push_back(1.0);
  // Horizontal references: one row per ratio so the series draws as a line.
  for (const auto* ref : {l1, bolasso}) {
    if (ref == nullptr) continue;
    const char* series = ref == l1 ? "l1_reference" : "bolasso_best_reference";
    for (double ratio : ratios) {
      out += fmt::format("{},{},{},{},{},{}\n", series, num(ratio), ref->K, num(ref->lambda),
                         num(ref->mean_snr_db), num(ref->std_snr_db));
    }
  }
  return out;
}

std::string table_csv(const std::vector<BestSummary>& summaries) {
  std::vector<std::size_t> ms;
  std::vector<std::string> groups;
  std::map<std::pair<std::string, std::size_t>, double> cell;
  for (const auto& b : summaries) {
    if (std::find(ms.begin(), ms.end(), b.m) == ms.end()) ms.push_back(b.m);
    if (std::find(groups.begin(), groups.end(), b.group) == groups.end()) {
      groups.push_back(b.group);
    }
    cell[{b.group, b.m}] = b.best.mean_snr_db;
  }
  std::sort(ms.begin(), ms.end());
  std::string out = "# bagsparse table v1\ngroup";
  for (std::size_t m : ms) out += fmt::format(",m={}", m);
  out += '\n';
  for (const auto& g : groups) {
    out += g;
    for (std::size_t m : ms) {
      const auto it = cell.find({g, m});
      out += it == cell.end() ? std::string(",") : "," + fmt::format("{:.2f}", it->second);
    }
    out += '\n';
  }
  return out;
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentSpec spec = load_spec(opts);
    ensure_dir(opts.out_dir);
    const SweepResult result = run_sweep(spec);
    const auto best = best_over(result.records);

    // Worker count does not affect results, so it stays out of the record.
    json effective = to_json(spec);
    effective.erase("jobs");
    write_file_atomic(opts.out_dir / "config.json", effective.dump(2) + "\n");
    write_file_atomic(opts.out_dir / "records.csv", records_csv(result.records));
    write_file_atomic(opts.out_dir / "best.csv", best_csv(best));
    for (std::size_t m : spec.m_values) {
      write_file_atomic(opts.out_dir / fmt::format("fig_m{}.csv", m), figure_csv(m, result));
    }
    const auto flagged = std::count_if(result.records.begin(), result.records.end(),
                                       [](const SweepRecord& r) { return r.flagged; });
    out << fmt::format("sweep: {} records, {} flagged, jensen {}/{} violations\n",
                       result.records.size(), flagged, result.jensen.violations,
                       result.jensen.checks);
    if (result.jensen.violations > 0) {
      err << "sweep: Jensen inequality violated\n";
      return kAssertionFailed;
    }
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

int cmd_table(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentSpec spec = load_spec(opts);
    ensure_dir(opts.out_dir);
    const SweepResult result = run_sweep(spec);
    const auto best = best_over(result.records);
    const std::string table = table_csv(best);
    write_file_atomic(opts.out_dir / "best.csv", best_csv(best));
    write_file_atomic(opts.out_dir / "table.csv", table);
    out << table;
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

int cmd_bounds(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    const json doc = load_config(config_path);
    const BoundInputs in = parse_bounds(require_section(doc, "bounds"));
    const auto report = [](const BoundReport& r) {
      return json{{"radius", r.radius}, {"prob_lower", r.prob_lower}};
    };
    json result{{"c0", c0(in.delta)}, {"c1", c1(in.delta)}};
    // The exact-sparse bound assumes no approximation error.
    if (in.e_l1 == 0.0) {
      result["exact_sparse"] = report(bagging_bound_exact_sparse(in));
    } else {
      result["exact_sparse"] = nullptr;
    }
    result["general"] = report(bagging_bound_general(in));
    out << result.dump(2) << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

int cmd_verify(const fs::path& config_path, const std::optional<fs::path>& out_dir,
               std::ostream& out, std::ostream& err) {
  VerifyPlan plan;
  try {
    const json doc = load_config(config_path);
    plan = parse_verify(require_section(doc, "verify"));
    if (out_dir) ensure_dir(*out_dir);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  }

  std::string report = "# bagsparse verify v1\ncheck,kind,empirical,bound,std_error,status\n";
  bool failed = false;
  bool inconclusive = false;
  const RngStream master(plan.seed);
  try {
    for (std::size_t i = 0; i < plan.tail_checks.size(); ++i) {
      const auto& t = plan.tail_checks[i];
      RngStream rng = master.derive(role_tag("tail"), i);
      TailBoundFormula formula;
      if (t.negative_control) {
        formula = [](std::size_t n, double xi, double mean, double a, double b) {
          return 1e-3 * hoeffding_tail_bound(n, xi, mean, a, b);
        };
      }
      const TailCheck c = verify_tail_bound_mc(t.sampler, t.n, t.xi, t.trials, rng, formula);
      failed = failed || !c.passed;
      const char* status = c.passed ? "PASS" : "FAIL";
      report += fmt::format("{},tail,{},{},{},{}\n", t.label, num(c.empirical), num(c.bound),
                            num(c.std_error), status);
      out << fmt::format("{} tail {}: empirical {} bound {} (se {})\n", status, t.label,
                         c.empirical, c.bound, c.std_error);
    }
    if (plan.theorem3) {
      const auto v = validate_theorem3_mc(*plan.theorem3, master.child(role_tag("theorem3")));
      const char* status = v.inconclusive ? "INCONCLUSIVE" : v.passed ? "PASS" : "FAIL";
      if (v.inconclusive) {
        inconclusive = true;
      } else if (!v.passed) {
        failed = true;
      }
      report += fmt::format("theorem3,theorem3,{},{},{},{}\n", num(v.empirical_prob),
                            num(v.prob_lower), num(v.std_error), status);
      out << fmt::format(
          "{} theorem3: kept {} of {} attempts, empirical {} prob_lower {} (se {})\n", status,
          v.kept, v.attempts, v.empirical_prob, v.prob_lower, v.std_error);
      if (v.inconclusive) {
        err << "verify: theorem check inconclusive, no trial met the RIP hypothesis\n";
      }
    }
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  if (out_dir) write_file_atomic(*out_dir / "verify_report.csv", report);
  if (failed) return kAssertionFailed;
  if (inconclusive) return kInconclusive;
  return kOk;
}

int cmd_rip(const fs::path& matrix_path, std::size_t s, bool normalize, std::ostream& out,
            std::ostream& err) {
  try {
    DenseMatrix a = read_matrix_csv(matrix_path);
    if (normalize) a = normalize_columns(a);
    const double delta = rip_constant_bruteforce(a, s);
    out << json{{"s", s}, {"delta", delta}, {"below_limit", delta < kRipLimit}}.dump() << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    err << "input error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kUsage;
}

int cmd_nsp(const fs::path& matrix_path, std::size_t s, std::size_t samples, std::uint64_t seed,
            std::ostream& out, std::ostream& err) {
  try {
    const DenseMatrix a = read_matrix_csv(matrix_path);
    const Eigen::Index nullity = null_space_basis(a).cols();
    json result{{"s", s}, {"nullity", nullity}};
    if (nullity == 0) {
      result["method"] = "exact";
      result["holds"] = true;  // only the zero vector to test
    } else if (nullity == 1) {
      result["method"] = "exact";
      result["holds"] = nsp_check_nullity1(a, s);
    } else {
      RngStream rng(seed);
      result["method"] = "sampled";
      result["samples"] = samples;
      result["holds"] = nsp_check_sampled(a, s, samples, rng);
    }
    out << result.dump() << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    err << "input error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bagging-based sparse recovery experiments"};
  app.require_subcommand(1);

  SweepOptions sweep_opts;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "Run the simulation grid and write CSV results");
  sweep->add_option("--config", sweep_opts.config_path, "JSON config")->required();
  sweep->add_option("--out", sweep_opts.out_dir, "Output directory")->required();
  auto* seed_opt = sweep->add_option("--seed", seed, "Override experiment.seed");
  auto* jobs_opt = sweep->add_option("--jobs", jobs, "Worker threads (0 = all cores)");

  SweepOptions table_opts;
  auto* table = app.add_subcommand("table", "Best-over summaries per scheme and m");
  table->add_option("--config", table_opts.config_path, "JSON config")->required();
  table->add_option("--out", table_opts.out_dir, "Output directory")->required();

  fs::path bounds_config;
  auto* bounds = app.add_subcommand("bounds", "Evaluate the Bagging error bounds");
  bounds->add_option("--config", bounds_config, "JSON config")->required();

  fs::path verify_config;
  fs::path verify_out;
  auto* verify = app.add_subcommand("verify", "Monte-Carlo checks of the tail and Bagging bounds");
  verify->add_option("--config", verify_config, "JSON config")->required();
  auto* verify_out_opt = verify->add_option("--out", verify_out, "Directory for the report");

  fs::path rip_matrix;
  std::size_t rip_s = 0;
  bool rip_normalize = false;
  auto* rip = app.add_subcommand("rip", "Brute-force restricted isometry constant");
  rip->add_option("--matrix", rip_matrix, "CSV matrix")->required();
  rip->add_option("--s", rip_s, "Sparsity level")->required();
  rip->add_flag("--normalize", rip_normalize, "Scale columns to unit norm first");

  fs::path nsp_matrix;
  std::size_t nsp_s = 0;
  std::size_t nsp_samples = 10000;
  std::uint64_t nsp_seed = 0;
  auto* nsp = app.add_subcommand("nsp", "Null space property check");
  nsp->add_option("--matrix", nsp_matrix, "CSV matrix")->required();
  nsp->add_option("--s", nsp_s, "Sparsity level")->required();
  nsp->add_option("--samples", nsp_samples, "Null-space samples when nullity > 1");
  nsp->add_option("--seed", nsp_seed, "Sampling seed");

  // CLI11 parses argv in reverse order from a vector.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kUsage;
  }

  if (sweep->parsed()) {
    if (*seed_opt) sweep_opts.seed = seed;
    if (*jobs_opt) sweep_opts.jobs = jobs;
    return cmd_sweep(sweep_opts, out, err);
  }
  if (table->parsed()) return cmd_table(table_opts, out, err);
  if (bounds->parsed()) return cmd_bounds(bounds_config, out, err);
  if (verify->parsed()) {
    std::optional<fs::path> dir;
    if (*verify_out_opt) dir = verify_out;
    return cmd_verify(verify_config, dir, out, err);
  }
  if (rip->parsed()) return cmd_rip(rip_matrix, rip_s, rip_normalize, out, err);
  if (nsp->parsed()) return cmd_nsp(nsp_matrix, nsp_s, nsp_samples, nsp_seed, out, err);
  return kUsage;
}

}  // namespace bagsparse::cli
