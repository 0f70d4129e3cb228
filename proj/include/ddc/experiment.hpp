#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ddc/plant.hpp"
#include "ddc/sim.hpp"

namespace ddc {

enum class Mode { kNoiseless, kNoisy, kLeaderOnly };

std::string to_string(Mode m);
/// Throws kConfig for unknown names.
Mode parse_mode(const std::string& name);

struct ExperimentConfig {
  Mode mode = Mode::kNoiseless;
  std::uint64_t seed = 0;
  std::string plant_name = "sec6";
  Plant plant;
  std::string graph_name = "sec6";
  MatrixXd adjacency;

  int data_horizon = 0;  // 0 picks the mode default
  InputPolicy input;
  std::optional<NoiseBound> noise_bound;  // noisy mode; defaults when empty

  MatrixXd q;        // n x n, defaults to I
  MatrixXd r_tilde;  // p x p, defaults to I
  MatrixXd q_tilde;  // p x p, defaults to I
  std::optional<double> delta;
  bool invertible_b = true;

  int sim_horizon = 500;
  double consensus_tol = 1e-3;
  std::optional<MatrixXd> x0;  // n x (N+1); drawn from the seed when empty

  std::filesystem::path out_dir = "out";
};

/// Fixture configuration: the reference plant and network in `mode`.
ExperimentConfig fixture_config(const std::string& fixture, Mode mode,
                                std::uint64_t seed);

/// Parses a JSON config. Errors are kConfig with the offending field path,
/// e.g. "weights.Q[1][0]: expected a number".
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Default data length: max(15, 3(n+p)) without noise, max(50, 3(n+p))
/// with noise.
int default_data_horizon(const ExperimentConfig& cfg);

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kIo = 1;
inline constexpr int kSynthesis = 2;  // infeasible synthesis or failed certificate
inline constexpr int kTolerance = 3;  // certified but consensus tolerance unmet
inline constexpr int kConfig = 4;
}  // namespace exit_code

struct ExperimentResult {
  int exit_status = exit_code::kOk;
  std::string message;
  nlohmann::json report;   // deterministic content
  nlohmann::json timings;  // wall-clock seconds per stage
  std::optional<Trace> trace;
  std::vector<std::string> manifest;
};

/// Runs collect -> synthesize -> certify -> simulate and, when `write` is
/// set, writes every artifact under cfg.out_dir. Synthesis failures are
/// reported through exit_status, not exceptions.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write = true);

}  // namespace ddc
