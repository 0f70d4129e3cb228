#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ddc/error.hpp"
#include "ddc/experiment.hpp"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("ddconsensus"));
  spdlog::cfg::load_env_levels();  // SPDLOG_LEVEL=debug|info|warn|error|off

  CLI::App app{"Leader-follower consensus from sampled data"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Collect data, synthesize, certify and simulate");

  std::string config_path;
  std::string fixture;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> out;
  run->add_option("config", config_path, "JSON experiment config");
  run->add_option("--fixture", fixture, "Built-in fixture instead of a config")
      ->check(CLI::IsMember({"sec6"}));
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--mode", mode, "noiseless, noisy or leader-only");
  run->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ddc::exit_code::kConfig;
  }

  try {
    if (config_path.empty() == fixture.empty()) {
      throw ddc::Error(ddc::ErrorCode::kConfig, "give either a config file or --fixture");
    }
    ddc::ExperimentConfig cfg;
    if (!fixture.empty()) {
      cfg = ddc::fixture_config(fixture, mode ? ddc::parse_mode(*mode) : ddc::Mode::kNoiseless,
                                seed.value_or(0));
    } else {
      cfg = ddc::load_config(config_path);
      if (mode) cfg.mode = ddc::parse_mode(*mode);
      if (seed) cfg.seed = *seed;
    }
    if (out) cfg.out_dir = *out;

    spdlog::info("mode {} seed {} -> {}", ddc::to_string(cfg.mode), cfg.seed,
                 cfg.out_dir.string());
    const ddc::ExperimentResult res = ddc::run_experiment(cfg);
    std::cout << res.message << " (exit " << res.exit_status << ")\n";
    std::cout << "report: " << (cfg.out_dir / "report.json").string() << '\n';
    return res.exit_status;
  } catch (const ddc::Error& e) {
    spdlog::error("{}", e.what());
    return e.code() == ddc::ErrorCode::kIo ? ddc::exit_code::kIo
                                          : ddc::exit_code::kConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return ddc::exit_code::kIo;
  }
}
