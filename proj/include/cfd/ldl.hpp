#pragma once

#include "cfd/core.hpp"
#include "cfd/sde_model.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace cfd {

// exp(A) by scaling and squaring with the degree-13 Pade approximant
// (Higham 2005). Throws InputError on non-finite input.
Mat mat_exp(const Mat& a);

// Gaussian transition law of the local drift linearisation scheme started
// at x: dX = (A_x X + b_x) dt + sigma(x) dB over a step dt.
struct LdlMoments {
  Vec mean;        // e^{dt A} x + int_0^dt e^{s A} ds b_x
  Mat cov;         // int_0^dt e^{s A} a e^{s A^T} ds
  Mat transition;  // e^{dt A}, also d(mean)/dx with A, b frozen
  Mat chol;        // lower Cholesky factor of cov
  double log_det = 0.0;
  double jitter = 0.0;  // diagonal jitter added on the single retry, 0 if none
};

// Exact moments of a linear SDE with constant coefficients. Both integrals
// come out of one (2N+1)-square augmented exponential
//   exp(dt [[A, a, b], [0, -A^T, 0], [0, 0, 0]])
// whose first block row is [e^{dt A}, G, c] with cov = G e^{dt A^T}.
LdlMoments linear_moments(const Mat& a_drift, const Vec& b_drift, const Mat& diffusion_cov, const Vec& x,
                          double dt);

// Freezes A = linearisation(x), b = V0(x) - A x and a = sigma sigma^T at x.
LdlMoments ldl_moments(const SdeModel& model, const Vec& x, double dt);

double gaussian_logpdf(const LdlMoments& m, const Vec& y);

// Whitened residual L^{-1} (y - mean).
Vec whiten(const LdlMoments& m, const Vec& y);

// mean + L z.
Vec colour(const LdlMoments& m, const Vec& z);

template <class Urbg>
Vec gaussian_sample(const LdlMoments& m, Urbg& rng) {
  std::normal_distribution<double> normal;
  Vec z(m.mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return colour(m, z);
}

}  // namespace cfd
