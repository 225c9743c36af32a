#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bagsparse/experiment.hpp"
#include "bagsparse/theory.hpp"

namespace bagsparse::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kAssertionFailed = 2, kInconclusive = 3 };

/// Bad or unreadable configuration. The message names the line or field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json load_config(const std::filesystem::path& path);

ExperimentSpec parse_experiment(const nlohmann::json& section);
nlohmann::json to_json(const ExperimentSpec& spec);

BoundInputs parse_bounds(const nlohmann::json& section);

struct TailCheckSpec {
  std::string label;
  BoundedSampler sampler = BoundedSampler::uniform(0.0, 1.0);
  std::size_t n = 10;
  double xi = 0.9;
  std::size_t trials = 100000;
  /// Replace the bound by a deliberately too-tight formula (self-test).
  bool negative_control = false;
};

struct VerifyPlan {
  std::uint64_t seed = 0;
  std::vector<TailCheckSpec> tail_checks;
  std::optional<Theorem3Params> theorem3;
};

VerifyPlan parse_verify(const nlohmann::json& section);

/// Plain CSV of reals, one matrix row per line.
DenseMatrix read_matrix_csv(const std::filesystem::path& path);

/// Writes via a temporary file and rename, so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string records_csv(const std::vector<SweepRecord>& records);
std::string best_csv(const std::vector<BestSummary>& summaries);
std::string figure_csv(std::size_t m, const SweepResult& result);
std::string table_csv(const std::vector<BestSummary>& summaries);

struct SweepOptions {
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
};

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);
int cmd_table(const SweepOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bounds(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);
int cmd_verify(const std::filesystem::path& config_path,
               const std::optional<std::filesystem::path>& out_dir, std::ostream& out,
               std::ostream& err);
int cmd_rip(const std::filesystem::path& matrix_path, std::size_t s, bool normalize,
            std::ostream& out, std::ostream& err);
int cmd_nsp(const std::filesystem::path& matrix_path, std::size_t s, std::size_t samples,
            std::uint64_t seed, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bagsparse::cli
