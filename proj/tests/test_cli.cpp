#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "bagsparse/cli.hpp"

using namespace bagsparse;
using namespace bagsparse::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("bagsparse_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& contents) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << contents;
    return p;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int run_args(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

const char* kMinimal = R"({
  "experiment": {
    "n": 20, "s": 3, "snr_db": 10,
    "m_values": [10], "ratio_values": [1.0], "k_values": [1],
    "lambda_grid": [0.5], "trials": 1, "seed": 3, "schemes": ["l1"]
  }
})";

const char* kSmall = R"({
  "experiment": {
    "n": 24, "s": 3, "snr_db": 5,
    "m_values": [12], "ratio_values": [0.5, 1.0], "k_values": [2, 3],
    "lambda_grid": {"min": 0.1, "max": 10, "count": 3}, "trials": 2, "seed": 8,
    "solver": {"rho": 5, "relaxation": 1.6}
  }
})";

}  // namespace

TEST_F(CliTest, ExperimentConfigRoundTrips) {
  const auto doc = nlohmann::json::parse(kSmall);
  const ExperimentSpec spec = parse_experiment(doc.at("experiment"));
  const ExperimentSpec again = parse_experiment(to_json(spec));
  EXPECT_EQ(to_json(again), to_json(spec));
  EXPECT_EQ(again.lambda_grid, spec.lambda_grid);
  EXPECT_EQ(again.solver.rho, 5.0);
  EXPECT_EQ(again.solver.relaxation, 1.6);
  EXPECT_EQ(spec.lambda_grid.size(), 3u);

  ExperimentSpec inf_spec;
  inf_spec.snr_db = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(std::isinf(parse_experiment(to_json(inf_spec)).snr_db));
}

TEST_F(CliTest, FieldDiagnostics) {
  auto message = [](const char* text) {
    try {
      parse_experiment(nlohmann::json::parse(text));
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"trails": 3})").find("experiment.trails: unknown field"), std::string::npos);
  EXPECT_NE(message(R"({"n": "x"})").find("experiment.n"), std::string::npos);
  EXPECT_NE(message(R"({"k_values": [1, -2]})").find("experiment.k_values[1]"), std::string::npos);
  EXPECT_NE(message(R"({"schemes": ["lars"]})").find("experiment.schemes[0]"), std::string::npos);
  EXPECT_NE(message(R"({"solver": {"rho": -1}})").find("experiment.solver"), std::string::npos);
}

TEST_F(CliTest, SyntaxErrorReportsLine) {
  const auto cfg = write("bad.json", "{\n  \"experiment\": {\n    \"n\": 3,\n  }\n}\n");
  EXPECT_EQ(run_args({"sweep", "--config", cfg.string(), "--out", (dir_ / "o").string()}), kUsage);
  EXPECT_NE(err_.str().find("line 4"), std::string::npos) << err_.str();
  EXPECT_FALSE(fs::exists(dir_ / "o" / "records.csv"));
}

TEST_F(CliTest, MinimalSweepWritesOneRecord) {
  const auto cfg = write("c.json", kMinimal);
  ASSERT_EQ(run_args({"sweep", "--config", cfg.string(), "--out", (dir_ / "o").string()}), kOk)
      << err_.str();
  const std::string csv = slurp(dir_ / "o" / "records.csv");
  std::istringstream lines(csv);
  std::string line;
  std::vector<std::string> all;
  while (std::getline(lines, line)) all.push_back(line);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0], "# bagsparse records v1");
  EXPECT_EQ(all[1].rfind("scheme,m,ratio,L,K,lambda,", 0), 0u);
  EXPECT_EQ(all[2].rfind("l1,10,1,10,1,0.5,", 0), 0u);
  for (const auto& entry : fs::directory_iterator(dir_ / "o")) {
    EXPECT_NE(entry.path().extension(), ".tmp");
  }
}

TEST_F(CliTest, SweepIsBytewiseReproducible) {
  const auto cfg = write("c.json", kSmall);
  ASSERT_EQ(run_args({"sweep", "--config", cfg.string(), "--out", (dir_ / "a").string()}), kOk);
  ASSERT_EQ(run_args({"sweep", "--config", cfg.string(), "--out", (dir_ / "b").string(),
                      "--jobs", "2"}),
            kOk);
  for (const char* f : {"records.csv", "best.csv", "fig_m12.csv", "config.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  ASSERT_EQ(run_args({"sweep", "--config", cfg.string(), "--out", (dir_ / "c").string(),
                      "--seed", "99"}),
            kOk);
  EXPECT_NE(slurp(dir_ / "a" / "records.csv"), slurp(dir_ / "c" / "records.csv"));
}

TEST_F(CliTest, FigureAndBestFiles) {
  const auto cfg = write("c.json", kSmall);
  ASSERT_EQ(run_args({"sweep", "--config", cfg.string(), "--out", dir_.string()}), kOk);
  const std::string fig = slurp(dir_ / "fig_m12.csv");
  EXPECT_EQ(fig.rfind("# bagsparse figure v1\nseries,ratio,K,lambda,mean_snr_db,std_snr_db\n", 0), 0u);
  EXPECT_NE(fig.find("\nbagging,0.5,2,"), std::string::npos);
  EXPECT_NE(fig.find("\nl1_reference,"), std::string::npos);
  EXPECT_NE(fig.find("\nbolasso_best_reference,"), std::string::npos);
  const std::string best = slurp(dir_ / "best.csv");
  for (const char* g : {"\nl1,", "\nconventional_bagging,", "\nbagging,", "\nbolasso,"}) {
    EXPECT_NE(best.find(g), std::string::npos) << g;
  }
}

TEST_F(CliTest, TableCommand) {
  const auto cfg = write("c.json", kSmall);
  ASSERT_EQ(run_args({"table", "--config", cfg.string(), "--out", dir_.string()}), kOk);
  EXPECT_NE(out_.str().find("group,m=12"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "table.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "best.csv"));
}

TEST_F(CliTest, BoundsAtDeltaZero) {
  const auto cfg = write("b.json", R"({"bounds": {"delta": 0, "s": 1, "L": 8, "m": 10, "K": 10,
      "tau": 1, "z_l2": 0.5, "z_inf": 0.2}})");
  ASSERT_EQ(run_args({"bounds", "--config", cfg.string()}), kOk) << err_.str();
  const auto j = nlohmann::json::parse(out_.str());
  EXPECT_EQ(j["c0"].get<double>(), 2.0);
  EXPECT_EQ(j["c1"].get<double>(), 4.0);
}

TEST_F(CliTest, BoundsWorkedExample) {
  const auto cfg = write("b.json", R"({"bounds": {"delta": 0.2, "s": 4, "L": 50, "m": 100,
      "K": 100, "tau": 1, "z_l2": 1, "z_inf": 0.3}})");
  ASSERT_EQ(run_args({"bounds", "--config", cfg.string()}), kOk);
  const auto j = nlohmann::json::parse(out_.str());
  BoundInputs in;
  in.delta = 0.2;
  in.s = 4;
  in.L = 50;
  in.m = 100;
  in.K = 100;
  in.tau = 1.0;
  in.z_l2 = 1.0;
  in.z_inf = 0.3;
  const auto rep = bagging_bound_exact_sparse(in);
  EXPECT_EQ(j["exact_sparse"]["radius"].get<double>(), rep.radius);
  EXPECT_EQ(j["exact_sparse"]["prob_lower"].get<double>(), rep.prob_lower);
  EXPECT_NEAR(j["exact_sparse"]["radius"].get<double>(), 14.46, 0.01);
  EXPECT_EQ(j["general"]["radius"].get<double>(), rep.radius);
}

TEST_F(CliTest, BoundsErrors) {
  const auto missing = write("m.json", R"({"bounds": {"delta": 0.1, "s": 1, "L": 8, "m": 10,
      "K": 10, "z_l2": 0.5, "z_inf": 0.2}})");
  EXPECT_EQ(run_args({"bounds", "--config", missing.string()}), kUsage);
  EXPECT_NE(err_.str().find("bounds.tau"), std::string::npos) << err_.str();

  const auto big = write("d.json", R"({"bounds": {"delta": 0.5, "s": 1, "L": 8, "m": 10,
      "K": 10, "tau": 1, "z_l2": 0.5, "z_inf": 0.2}})");
  EXPECT_EQ(run_args({"bounds", "--config", big.string()}), kUsage);
  EXPECT_NE(err_.str().find("sqrt(2) - 1"), std::string::npos) << err_.str();
}

TEST_F(CliTest, VerifyTailCheckPasses) {
  const auto cfg = write("v.json", R"({"verify": {"seed": 1, "tail_checks": [
      {"sampler": {"kind": "uniform", "lo": 0, "hi": 1}, "n": 10, "xi": 0.9, "trials": 50000}]}})");
  EXPECT_EQ(run_args({"verify", "--config", cfg.string(), "--out", dir_.string()}), kOk);
  const std::string report = slurp(dir_ / "verify_report.csv");
  EXPECT_EQ(report.rfind("# bagsparse verify v1\n", 0), 0u);
  EXPECT_NE(report.find(",PASS\n"), std::string::npos);
}

TEST_F(CliTest, VerifyNegativeControlFails) {
  const auto cfg = write("v.json", R"({"verify": {"tail_checks": [
      {"sampler": {"kind": "bernoulli", "p": 0.3}, "n": 5, "xi": 0.4, "trials": 20000,
       "negative_control": true}]}})");
  EXPECT_EQ(run_args({"verify", "--config", cfg.string()}), kAssertionFailed);
  EXPECT_NE(out_.str().find("FAIL"), std::string::npos);
}

TEST_F(CliTest, VerifyNoiselessTheorem) {
  const auto cfg = write("v.json", R"({"verify": {"theorem3": {"n": 6, "m": 400, "s": 1,
      "L": 300, "K": 3, "tau": 1, "target_kept": 10, "max_attempts": 500, "snr_db": "inf"}}})");
  EXPECT_EQ(run_args({"verify", "--config", cfg.string(), "--out", dir_.string()}), kOk)
      << out_.str() << err_.str();
  EXPECT_NE(slurp(dir_ / "verify_report.csv").find("theorem3,theorem3,1,1,0,PASS"),
            std::string::npos);
}

TEST_F(CliTest, VerifyInconclusiveExitCode) {
  const auto cfg = write("v.json", R"({"verify": {"theorem3": {"max_attempts": 5}}})");
  EXPECT_EQ(run_args({"verify", "--config", cfg.string()}), kInconclusive);
  EXPECT_NE(err_.str().find("inconclusive"), std::string::npos);
}

TEST_F(CliTest, VerifyUnknownSampler) {
  const auto cfg = write("v.json", R"({"verify": {"tail_checks": [
      {"sampler": {"kind": "cauchy"}, "n": 5, "xi": 0.4}]}})");
  EXPECT_EQ(run_args({"verify", "--config", cfg.string()}), kUsage);
  EXPECT_NE(err_.str().find("verify.tail_checks[0].sampler.kind"), std::string::npos);
}

TEST_F(CliTest, RipCommand) {
  const auto id = write("id.csv", "1,0,0\n0,1,0\n0,0,1\n");
  ASSERT_EQ(run_args({"rip", "--matrix", id.string(), "--s", "2"}), kOk);
  EXPECT_EQ(nlohmann::json::parse(out_.str())["delta"].get<double>(), 0.0);

  const auto dup = write("dup.csv", "2,2\n0,0\n");
  EXPECT_EQ(run_args({"rip", "--matrix", dup.string(), "--s", "2"}), kUsage);
  ASSERT_EQ(run_args({"rip", "--matrix", dup.string(), "--s", "2", "--normalize"}), kOk);
  EXPECT_NEAR(nlohmann::json::parse(out_.str())["delta"].get<double>(), 1.0, 1e-12);
}

TEST_F(CliTest, MatrixCsvErrorsNameTheLine) {
  const auto bad = write("bad.csv", "1,2\n3,x\n");
  EXPECT_EQ(run_args({"rip", "--matrix", bad.string(), "--s", "1"}), kUsage);
  EXPECT_NE(err_.str().find("bad.csv:2"), std::string::npos) << err_.str();
  const auto ragged = write("ragged.csv", "1,2\n3\n");
  EXPECT_THROW(read_matrix_csv(ragged), ConfigError);
}

TEST_F(CliTest, NspCommand) {
  const auto one = write("one.csv", "1,0,0,0\n0,1,0,0\n0,0,1,0\n");
  ASSERT_EQ(run_args({"nsp", "--matrix", one.string(), "--s", "1"}), kOk);
  const auto j = nlohmann::json::parse(out_.str());
  EXPECT_EQ(j["method"], "exact");
  EXPECT_FALSE(j["holds"].get<bool>());

  const auto wide = write("wide.csv", "1,1,1,1,1,1\n");
  ASSERT_EQ(run_args({"nsp", "--matrix", wide.string(), "--s", "1", "--samples", "500"}), kOk);
  EXPECT_EQ(nlohmann::json::parse(out_.str())["method"], "sampled");
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_args({}), kUsage);
  EXPECT_EQ(run_args({"frobnicate"}), kUsage);
  EXPECT_EQ(run_args({"sweep", "--config", "x.json"}), kUsage);
  EXPECT_EQ(run_args({"sweep", "--config", (dir_ / "missing.json").string(), "--out",
                      dir_.string()}),
            kUsage);
  EXPECT_NE(err_.str().find("cannot open"), std::string::npos);
  EXPECT_EQ(run_args({"--help"}), kOk);
}

TEST(WriteFileAtomic, ReplacesContents) {
  const fs::path p = fs::temp_directory_path() / ("bagsparse_atomic_" + std::to_string(::getpid()));
  write_file_atomic(p, "first");
  write_file_atomic(p, "second");
  std::ifstream in(p);
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "second");
  EXPECT_FALSE(fs::exists(fs::path(p.string() + ".tmp")));
  fs::remove(p);
}
