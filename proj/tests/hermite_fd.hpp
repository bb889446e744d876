#pragma once

#include "cfd/hermite.hpp"
#include "cfd/ldl.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace testing {

// Finite-difference check of H_alpha against the frozen baseline density
// p(u) = N(y; mean + M (u - x), Sigma), with z held at x. Derivatives are
// taken in coordinates scaled by the conditional width of p along each axis, so both sides
// are compared as dimensionless numbers.
class FrozenDensityFd {
 public:
  FrozenDensityFd(const cfd::LdlMoments& m, const cfd::Vec& x, const cfd::Vec& y) : m_(m), x_(x), y_(y) {
    const cfd::Mat c = cfd::hermite_precision(m);
    scale_ = c.diagonal().cwiseSqrt().cwiseInverse();
    p0_ = density(x_);
  }

  // Scaled ratio prod(scale_alpha) * d^alpha p / p at u = x.
  double ratio(const std::vector<int>& alpha, double h = 0.05) const {
    const double coarse = derivative(alpha, x_, h);
    const double fine = derivative(alpha, x_, h / 2);
    return (4.0 * fine - coarse) / 3.0 / p0_;
  }

  double scale(const std::vector<int>& alpha) const {
    double s = 1.0;
    for (int i : alpha) s *= scale_[i];
    return s;
  }

 private:
  double density(const cfd::Vec& u) const {
    const cfd::Vec mean = m_.mean + m_.transition * (u - x_);
    return std::exp(cfd::gaussian_logpdf(m_, y_ - mean + m_.mean));
  }

  double derivative(std::vector<int> alpha, const cfd::Vec& u, double h) const {
    if (alpha.empty()) return density(u);
    const int i = alpha.back();
    alpha.pop_back();
    cfd::Vec up = u, um = u;
    up[i] += h * scale_[i];
    um[i] -= h * scale_[i];
    return (derivative(alpha, up, h) - derivative(alpha, um, h)) / (2 * h);
  }

  cfd::LdlMoments m_;
  cfd::Vec x_, y_, scale_;
  double p0_;
};

inline std::vector<std::vector<int>> multi_indices(int dim, int max_order) {
  std::vector<std::vector<int>> out;
  std::function<void(std::vector<int>, int)> rec = [&](std::vector<int> a, int start) {
    if (!a.empty()) out.push_back(a);
    if (static_cast<int>(a.size()) == max_order) return;
    for (int i = start; i < dim; ++i) {
      a.push_back(i);
      rec(a, i);
      a.pop_back();
    }
  };
  rec({}, 0);
  return out;
}

}  // namespace testing
