#pragma once

#include "cfd/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace cfd {

struct RunOptions {
  std::optional<std::uint64_t> seed;  // replaces simulation.seed and inference.seed
  int threads = 1;
  std::optional<std::string> out;     // replaces output_dir
};

// Applies the overrides in place.
void apply_overrides(ExperimentConfig& cfg, const RunOptions& opts);

// Each command writes its artifacts plus resolved_config.json into
// cfg.output_dir (created if missing). Errors propagate as exceptions.
void cmd_density(const ExperimentConfig& cfg, int threads);
void cmd_compare(const ExperimentConfig& cfg, int threads);
void cmd_simulate(const ExperimentConfig& cfg, int threads);
void cmd_mle(const ExperimentConfig& cfg, int threads);
void cmd_mcmc(const ExperimentConfig& cfg, int threads);
void cmd_check(const ExperimentConfig& cfg, int threads);

// Loads the config, runs `command` and maps failures to exit codes:
// 0 ok, 2 invalid input or config, 3 numeric degeneracy.
int run_command(const std::string& command, const std::string& config_path, const RunOptions& opts,
                std::ostream& err);

// Observations the inference commands run on: read from inference.data or
// simulated from the configured model.
ObservationSet inference_data(const ExperimentConfig& cfg);

}  // namespace cfd
