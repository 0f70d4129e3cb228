#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "ddc/error.hpp"
#include "ddc/experiment.hpp"

namespace ddc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ddc_experiment_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json BaseConfig() {
  return json::parse(R"({
    "mode": "noiseless",
    "seed": 7,
    "plant": {"fixture": "sec6"},
    "graph": {"fixture": "sec6"}
  })");
}

// Returns the message of the kConfig error raised by parse_config.
std::string ConfigError(const json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "no error for " << j.dump();
  return {};
}

TEST(ParseConfigTest, FixtureDefaults) {
  const ExperimentConfig cfg = parse_config(BaseConfig());
  EXPECT_EQ(cfg.mode, Mode::kNoiseless);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.adjacency.rows(), 6);
  EXPECT_EQ(default_data_horizon(cfg), 15);
  ExperimentConfig noisy = cfg;
  noisy.mode = Mode::kNoisy;
  EXPECT_EQ(default_data_horizon(noisy), 50);
}

TEST(ParseConfigTest, ExplicitMatricesAndEdges) {
  json j = BaseConfig();
  j["plant"] = {{"A", {{0.5, 1.0}, {0.0, 1.2}}}, {"B", {{0.0}, {1.0}}}};
  j["graph"] = {{"nodes", 3}, {"edges", {{0, 1, 1.0}, {1, 2, 2.0}}}};
  j["weights"] = {{"Q", 2.0}, {"R_tilde", {{3.0}}}, {"delta", 0.9}};
  j["region"] = {{"invertible_b", false}};
  const ExperimentConfig cfg = parse_config(j);
  EXPECT_EQ(cfg.plant.p(), 1);
  EXPECT_DOUBLE_EQ(cfg.adjacency(1, 0), 1.0);  // row receives from column
  EXPECT_DOUBLE_EQ(cfg.adjacency(2, 1), 2.0);
  EXPECT_DOUBLE_EQ(cfg.q(1, 1), 2.0);
  EXPECT_DOUBLE_EQ(cfg.r_tilde(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(*cfg.delta, 0.9);
  EXPECT_FALSE(cfg.invertible_b);
}

TEST(ParseConfigTest, ErrorsNameTheField) {
  json j = BaseConfig();
  j.erase("seed");
  EXPECT_NE(ConfigError(j).find("seed"), std::string::npos);

  j = BaseConfig();
  j["mode"] = "robust";
  EXPECT_NE(ConfigError(j).find("mode"), std::string::npos);

  j = BaseConfig();
  j["weights"] = {{"Q", {{1.0, 0.0}, {0.0, "x"}}}};
  EXPECT_NE(ConfigError(j).find("weights.Q[1][1]"), std::string::npos);

  j = BaseConfig();
  j["weights"] = {{"Q", {{1.0, 0.0, 0.0}}}};
  EXPECT_NE(ConfigError(j).find("weights.Q: expected 2x2"), std::string::npos);

  j = BaseConfig();
  j["simulation"] = {{"horizon", 10}, {"colour", 1}};
  EXPECT_NE(ConfigError(j).find("simulation.colour: unknown field"), std::string::npos);

  j = BaseConfig();
  j["data"] = {{"T", 3}};
  EXPECT_NE(ConfigError(j).find("data.T"), std::string::npos);

  j = BaseConfig();
  j["graph"] = {{"nodes", 3}, {"edges", {{0, 5, 1.0}}}};
  EXPECT_NE(ConfigError(j).find("graph.edges[0][1]"), std::string::npos);

  j = BaseConfig();
  j["noise_bound"] = {{"n11", -1.0}};
  j["mode"] = "noisy";
  EXPECT_NE(ConfigError(j).find("noise_bound"), std::string::npos);
}

TEST(ParseConfigTest, MalformedFileReportsPosition) {
  const fs::path dir = TempDir("malformed");
  std::ofstream(dir / "bad.json") << "{\n  \"mode\": \"noiseless\",\n  \"seed\": \n}\n";
  try {
    load_config(dir / "bad.json");
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(RunExperimentTest, Sec6NoiselessReport) {
  ExperimentConfig cfg = fixture_config("sec6", Mode::kNoiseless, 7);
  cfg.out_dir = TempDir("noiseless");
  const ExperimentResult res = run_experiment(cfg);
  EXPECT_EQ(res.exit_status, exit_code::kOk) << res.message;
  EXPECT_GE(res.report["region"]["bound"].get<double>(), 0.09);
  EXPECT_TRUE(res.report["region"]["verified"].get<bool>());
  EXPECT_EQ(res.report["agents"].size(), 5u);
  for (const auto& f : res.manifest) EXPECT_TRUE(fs::exists(cfg.out_dir / f)) << f;
}

TEST(RunExperimentTest, Sec6NoisyReport) {
  const ExperimentConfig cfg = fixture_config("sec6", Mode::kNoisy, 7);
  const ExperimentResult res = run_experiment(cfg, false);
  EXPECT_EQ(res.exit_status, exit_code::kOk) << res.message;
  EXPECT_EQ(res.report["agents"].size(), 6u);
  for (const auto& a : res.report["agents"]) {
    EXPECT_GE(a["lmi_min_eig"].get<double>(), -1e-7);
  }
}

TEST(RunExperimentTest, LeaderOnlySingleFollower) {
  ExperimentConfig cfg = fixture_config("sec6", Mode::kLeaderOnly, 3);
  cfg.graph_name = "single";
  cfg.adjacency = MatrixXd::Zero(2, 2);
  cfg.adjacency(1, 0) = 1.0;
  const ExperimentResult res = run_experiment(cfg, false);
  EXPECT_EQ(res.exit_status, exit_code::kOk) << res.message;
  EXPECT_TRUE(res.report["leader"].contains("theta"));
  EXPECT_TRUE(res.report["leader"].contains("ratio"));
  EXPECT_LT(res.report["simulation"]["final_consensus_error"].get<double>(), 1e-3);
}

TEST(RunExperimentTest, ShortHorizonIsToleranceFailure) {
  ExperimentConfig cfg = fixture_config("sec6", Mode::kNoiseless, 7);
  cfg.sim_horizon = 1;
  const ExperimentResult res = run_experiment(cfg, false);
  EXPECT_EQ(res.exit_status, exit_code::kTolerance);
}

TEST(RunExperimentTest, ZeroInputIsSynthesisFailure) {
  ExperimentConfig cfg = fixture_config("sec6", Mode::kNoiseless, 7);
  cfg.input.kind = InputPolicy::Kind::kZero;
  const ExperimentResult res = run_experiment(cfg, false);
  EXPECT_EQ(res.exit_status, exit_code::kSynthesis);
  EXPECT_NE(res.message.find("agent 1"), std::string::npos) << res.message;
}

TEST(RunExperimentTest, LooseNoiseBoundIsSynthesisFailure) {
  ExperimentConfig cfg = fixture_config("sec6", Mode::kNoisy, 7);
  NoiseBound b = NoiseBound::energy(2, 50, 1e4);
  cfg.noise_bound = b;
  const ExperimentResult res = run_experiment(cfg, false);
  EXPECT_EQ(res.exit_status, exit_code::kSynthesis) << res.message;
}

TEST(RunExperimentTest, ReportIsDeterministic) {
  const ExperimentConfig cfg = fixture_config("sec6", Mode::kLeaderOnly, 11);
  const ExperimentResult a = run_experiment(cfg, false);
  const ExperimentResult b = run_experiment(cfg, false);
  EXPECT_EQ(a.report.dump(), b.report.dump());
}

#ifdef DDC_CLI_PATH
int RunCli(const std::string& args) {
  const int raw = std::system((std::string(DDC_CLI_PATH) + " " + args + " 2>/dev/null >/dev/null").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

TEST(CliTest, ExitCodes) {
  const fs::path dir = TempDir("cli");
  EXPECT_EQ(RunCli("run --fixture sec6 --seed 7 --out " + (dir / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ok" / "report.json"));
  EXPECT_EQ(RunCli("run --fixture sec6 --mode sideways --out " + dir.string()), 4);
  EXPECT_EQ(RunCli("run " + (dir / "missing.json").string()), 4);
  EXPECT_EQ(RunCli("run"), 4);

  json short_run = BaseConfig();
  short_run["simulation"] = {{"horizon", 1}};
  std::ofstream(dir / "short.json") << short_run.dump();
  EXPECT_EQ(RunCli("run " + (dir / "short.json").string() + " --out " +
                   (dir / "short").string()),
            3);

  json zero = BaseConfig();
  zero["data"] = {{"input", {{"kind", "zero"}}}};
  std::ofstream(dir / "zero.json") << zero.dump();
  EXPECT_EQ(RunCli("run " + (dir / "zero.json").string() + " --out " +
                   (dir / "zero").string()),
            2);
}
#endif

}  // namespace
}  // namespace ddc
