#pragma once

#include "cfd/benchmark.hpp"
#include "cfd/expansion.hpp"
#include "cfd/mcmc.hpp"
#include "cfd/observations.hpp"
#include "cfd/posterior.hpp"
#include "cfd/sde_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cfd {

struct InferenceConfig {
  ObservationMode mode = ObservationMode::full_state;
  std::optional<std::string> data;  // CSV; simulated from the model when absent
  int n_obs = 500;                  // transitions when simulating
  double noise_sd = 0.01;
  std::optional<Vec> init_theta;    // natural scale; defaults to the model theta
  int max_evals = 2000;
  std::optional<Priors> priors;     // defaults from default_priors()
  McmcOptions mcmc;
  int augmentation = 1;
};

struct ExperimentConfig {
  ModelSpec model;
  CorrectionSpec expansion;
  std::vector<int> orders{2, 3, 4, 5};  // compare command
  std::optional<std::string> benchmark;  // compare: grid CSV instead of simulating
  double dt = 0.1;
  Vec x0;
  GridSpec grid;
  SimConfig simulation;
  int sim_steps = 500;  // simulate command: steps of size dt
  KdeOptions kde;
  InferenceConfig inference;
  std::string output_dir = ".";
};

// Names of theta for a model name (linear needs dim and n_noise).
std::vector<std::string> theta_names_for(const ModelSpec& spec);

// Parses and validates; unknown keys, wrong types and missing required
// entries raise InputError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Fully resolved config (defaults filled in) as JSON; parse_config of the
// result reproduces the same run.
std::string resolved_config_json(const ExperimentConfig& cfg);

}  // namespace cfd
