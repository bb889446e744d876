#pragma once

#include "cfd/core.hpp"
#include "cfd/expansion.hpp"
#include "cfd/observations.hpp"
#include "cfd/sde_model.hpp"

#include <functional>
#include <vector>

namespace cfd {

// log p~ for every consecutive pair of a fully observed chain. Throws
// DegeneracyError naming the first failing transition.
std::vector<double> transition_log_densities(const CorrectionSpec& spec, const SdeModel& model,
                                             const ObservationSet& obs, int threads = 1);

// Sum of transition_log_densities in fixed (pairwise) order.
double log_likelihood(const CorrectionSpec& spec, const SdeModel& model, const ObservationSet& obs,
                      int threads = 1);

struct NelderMeadOptions {
  int max_evals = 2000;
  double diameter_tol = 1e-6;  // stop once every vertex is this close to the best one
  double initial_step = 0.1;
};

struct NelderMeadResult {
  Vec argmin;
  double value = 0.0;
  int evals = 0;
  bool converged = false;
};

// Derivative-free minimisation; non-finite objective values count as +inf.
NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& start,
                             const NelderMeadOptions& opts = {});

struct MleResult {
  Vec theta_hat;
  double loglik = 0.0;
  int evals = 0;
  bool converged = false;
};

// Maximises log_likelihood over log(theta); every component of theta0 must be
// positive.
MleResult mle_fit(const CorrectionSpec& spec, const SdeModel& model, const ObservationSet& obs, const Vec& theta0,
                  int max_evals = 2000, int threads = 1);

}  // namespace cfd
