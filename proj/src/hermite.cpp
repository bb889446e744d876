#include "cfd/hermite.hpp"

#include <string>

namespace cfd {

Mat hermite_precision(const LdlMoments& m) {
  // W = L^{-1} M, C = W^T W.
  const Mat w = m.chol.triangularView<Eigen::Lower>().solve(m.transition);
  return w.transpose() * w;
}

HermiteContext hermite_context(const LdlMoments& m, const Mat& precision, const Vec& y) {
  const Vec w = whiten(m, y);
  const Vec sinv_r = m.chol.transpose().triangularView<Eigen::Upper>().solve(w);
  return {m.transition.transpose() * sinv_r, precision};
}

HermiteContext hermite_context(const LdlMoments& m, const Vec& y) {
  return hermite_context(m, hermite_precision(m), y);
}

double hermite_ratio(const HermiteContext& ctx, std::span<const int> alpha) {
  const auto n = static_cast<int>(ctx.h.size());
  for (int i : alpha) require(i >= 0 && i < n, "hermite_ratio: component label out of range");
  const auto& h = ctx.h;
  const auto& c = ctx.c;
  switch (alpha.size()) {
    case 1:
      return h[alpha[0]];
    case 2: {
      const int i = alpha[0], j = alpha[1];
      return h[i] * h[j] - c(i, j);
    }
    case 3: {
      const int i = alpha[0], j = alpha[1], k = alpha[2];
      return h[i] * h[j] * h[k] - h[i] * c(j, k) - h[j] * c(i, k) - h[k] * c(i, j);
    }
    default:
      throw UnsupportedError("hermite_ratio: order " + std::to_string(alpha.size()) +
                             " not supported (1 to 3)");
  }
}

double hermite_ratio(const HermiteContext& ctx, std::initializer_list<int> alpha) {
  return hermite_ratio(ctx, std::span<const int>(alpha.begin(), alpha.size()));
}

}  // namespace cfd
