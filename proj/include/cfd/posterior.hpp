#pragma once

#include "cfd/core.hpp"
#include "cfd/expansion.hpp"
#include "cfd/observations.hpp"
#include "cfd/sde_model.hpp"

#include <vector>

namespace cfd {

// log(theta_i) ~ N(log_mean_i, log_sd_i^2); X0 ~ N(x0_mean, diag(x0_sd^2)).
struct Priors {
  Vec log_mean;
  Vec log_sd;
  Vec x0_mean;
  Vec x0_sd;
};

// log theta ~ N(0, 1) for every parameter; V0 ~ N(0, 0.1^2), U0 ~ N(0, 0.2^2)
// for 2-D models, X0 ~ N(0, I) otherwise.
Priors default_priors(const SdeModel& model);
void validate(const Priors& p, const SdeModel& model);

// Hidden path on a grid refining the observation times `augmentation` times.
// Row k of `latents` is the standard-normal innovation of X_k: row 0 maps to
// X0 through the prior, row k >= 1 through the baseline transition from
// X_{k-1}.
struct ChainState {
  Vec log_theta;
  Mat latents;
  double log_post = 0.0;
};

// Per-transition pieces kept by the sampler so that window moves only touch
// the affected transitions.
struct PathCache {
  Mat path;                  // (n_steps + 1) x dim hidden states
  std::vector<double> term;  // log N(latent_k) + T(pi_k), k >= 1; term[0] = log N(latent_0)
  std::vector<double> half_log_det;  // log det L of the transition into X_k (0 for k = 0)
  std::vector<double> obs;           // log p(Y_j | X_{j m})
  double log_prior = 0.0;            // log theta prior
};

class AugmentedPosterior {
 public:
  AugmentedPosterior(const CorrectionSpec& spec, ModelPtr model, ObservationSet obs, Priors priors,
                     int augmentation = 1);

  int n_steps() const { return n_steps_; }
  int dim() const { return dim_; }
  int n_theta() const { return static_cast<int>(priors_.log_mean.size()); }
  int augmentation() const { return augmentation_; }
  double fine_step() const { return h_; }
  const ObservationSet& observations() const { return obs_; }
  const CorrectionSpec& spec() const { return spec_; }
  const Priors& priors() const { return priors_; }

  ModelPtr model_at(const Vec& log_theta) const;
  double log_prior_theta(const Vec& log_theta) const;
  double log_obs(int j, const Vec& x) const;

  // Non-centred map latents -> hidden path. Throws DegeneracyError.
  Mat reconstruct(const Vec& log_theta, const Mat& latents) const;
  // Inverse map: hidden path -> latents.
  Mat latents_of(const Vec& log_theta, const Mat& path) const;

  // log posterior in (log theta, latents) coordinates; -inf when any
  // transition is degenerate or non-finite.
  double log_posterior(const Vec& log_theta, const Mat& latents) const;

  // Fills every cache entry; returns the log posterior (-inf on failure).
  double build_cache(const Vec& log_theta, const Mat& latents, PathCache& cache) const;
  // Same, holding the path fixed and recomputing latents (centred view).
  // Returns the log target in (log theta, path) coordinates.
  double build_cache_centred(const Vec& log_theta, const Mat& path, Mat& latents, PathCache& cache) const;
  double total(const PathCache& cache) const;
  // Log target of the centred view: total minus sum of half_log_det.
  double total_centred(const PathCache& cache) const;

  // One transition k >= 1 pushed forward from x_prev with innovation z.
  // Returns the new state and the term; throws DegeneracyError.
  struct Step {
    Vec x;
    double term = 0.0;
    double half_log_det = 0.0;
  };
  Step forward(const SdeModel& model, const Vec& x_prev, const Vec& z) const;
  // Transition into a fixed end point: recovers the innovation.
  struct Pinned {
    Vec z;
    double term = 0.0;
    double half_log_det = 0.0;
  };
  Pinned pinned(const SdeModel& model, const Vec& x_prev, const Vec& x_next) const;
  Pinned pinned(const SdeModel& model, const Vec& x_prev, const Vec& x_next, LdlMoments moments) const;
  Vec initial_state(const Vec& z0) const;
  bool observed(int k) const { return k % augmentation_ == 0; }

 private:
  double transition_term(const TransitionExpansion& te, const Vec& z, const Vec& y) const;

  CorrectionSpec spec_;
  ModelPtr model_;
  ObservationSet obs_;
  Priors priors_;
  int augmentation_;
  int n_steps_;
  int dim_;
  double h_;
};

double standard_normal_logpdf(const Vec& z);

}  // namespace cfd
