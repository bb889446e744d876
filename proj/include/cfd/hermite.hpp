#pragma once

#include "cfd/core.hpp"
#include "cfd/ldl.hpp"

#include <initializer_list>
#include <span>

namespace cfd {

// Derivatives of the frozen LDL density with respect to its initial state.
//
// With the linearisation point held fixed the mean is affine in x with slope
// M = e^{dt A}, so log pbar(x, y) = const - r^T Sigma^{-1} r / 2 with
// r = y - mean(x), and every x-derivative of pbar divided by pbar is a
// Hermite polynomial in
//   h = M^T Sigma^{-1} r      (gradient of log pbar)
//   C = M^T Sigma^{-1} M      (minus its Hessian).
struct HermiteContext {
  Vec h;
  Mat c;
};

// C only depends on the moments; callers evaluating many y at one x can
// compute it once and pass it to the three-argument overload.
Mat hermite_precision(const LdlMoments& m);

HermiteContext hermite_context(const LdlMoments& m, const Vec& y);
HermiteContext hermite_context(const LdlMoments& m, const Mat& precision, const Vec& y);

// H_alpha = d^alpha pbar / pbar for a multi-index of zero-based component
// labels, 1 <= |alpha| <= 3. Order of labels does not matter.
double hermite_ratio(const HermiteContext& ctx, std::span<const int> alpha);
double hermite_ratio(const HermiteContext& ctx, std::initializer_list<int> alpha);

}  // namespace cfd
