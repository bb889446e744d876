#pragma once

#include "cfd/diagnostics.hpp"
#include "cfd/posterior.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cfd {

enum class LatentMove {
  gaussian,  // linearised Gaussian block proposal (Metropolis-Hastings)
  rwm,       // isotropic random walk on the latents
};

LatentMove parse_latent_move(const std::string& s);
std::string to_string(LatentMove m);

struct McmcOptions {
  int n_iters = 4000;  // post-warmup iterations kept per chain
  int n_warmup = 2000;
  std::uint64_t seed = 1;
  int n_chains = 2;
  int window = 10;  // latent indices per block move
  int stride = 5;
  double target_accept = 0.234;
  bool centred_theta_moves = true;
  LatentMove latent_move = LatentMove::gaussian;
  // Joint theta + whole-path move drawing the path from a Gauss-Newton
  // Gaussian fit of p(path | theta, Y).
  bool joint_moves = true;
  int laplace_iterations = 2;
  std::optional<Vec> init_log_theta;
  std::optional<Mat> init_path;
  int threads = 1;
};

void validate(const McmcOptions& o);

struct StepScales {
  double theta_noncentred = 0.1;
  double theta_centred = 0.1;
  double latent = 0.1;
  double joint = 0.1;
  bool operator==(const StepScales&) const = default;
};

struct ChainRecord {
  Mat theta;  // n_iters x n_theta, natural scale
  Vec log_post;
  Mat final_latents;
  double accept_theta_noncentred = 0.0;
  double accept_theta_centred = 0.0;
  double accept_latent = 0.0;
  double accept_joint = 0.0;
  StepScales scales_after_warmup;
  StepScales scales_final;
  Mat theta_proposal_cov;  // frozen after warmup
  int startup_redraws = 0;
};

struct McmcResult {
  std::vector<std::string> names;
  std::vector<ChainRecord> chains;
  std::vector<ParamDiagnostics> diagnostics;
  bool converged = false;  // every rhat < 1.01 and ess_bulk, ess_tail > 400
  double seconds_per_iter = 0.0;
};

// Path guess from the observations: first coordinate interpolated, the rest
// from inverting the first drift component when the model allows it.
Mat initial_path_guess(const AugmentedPosterior& post, const Vec& log_theta);

ChainRecord run_chain(const AugmentedPosterior& post, const McmcOptions& opts, int chain_id);

McmcResult rwm_sample(const AugmentedPosterior& post, const McmcOptions& opts);

void write_chains_csv(std::ostream& os, const McmcResult& r);
std::string diagnostics_json(const McmcResult& r);

}  // namespace cfd
