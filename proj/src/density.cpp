#include "cfd/density.hpp"

#include "cfd/parallel.hpp"

#include <chrono>
#include <cmath>

namespace cfd {

ProxyGrid proxy_density_grid(const CorrectionSpec& spec, const SdeModel& model, const Vec& x, double dt,
                             const DensityGrid& nodes, int threads) {
  require(model.dim() == 2, "density grids need a 2-D model");
  const auto t0 = std::chrono::steady_clock::now();
  const TransitionExpansion te(spec, model, x, dt);
  ProxyGrid out;
  out.grid = nodes;
  const Eigen::Index nx = nodes.x_nodes.size(), ny = nodes.y_nodes.size();
  out.grid.values.resize(nx, ny);
  std::vector<std::int64_t> negatives(static_cast<std::size_t>(nx), 0);
  parallel_for(static_cast<std::size_t>(nx), threads, [&](std::size_t i) {
    Vec y(2);
    for (Eigen::Index j = 0; j < ny; ++j) {
      y << nodes.x_nodes[static_cast<Eigen::Index>(i)], nodes.y_nodes[j];
      const ExpansionResult r = te.evaluate(y);
      out.grid.values(static_cast<Eigen::Index>(i), j) = std::exp(r.log_proxy);
      if (r.raw < 0) ++negatives[i];
    }
  });
  for (auto n : negatives) out.negative_raw += n;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.seconds_per_node = secs / static_cast<double>(nx * ny);
  return out;
}

DensityGrid baseline_grid(const GridSpec& spec, const SdeModel& model, const Vec& x, double dt) {
  const LdlMoments m = ldl_moments(model, x, dt);
  return grid_around(spec, m.mean, m.cov.diagonal().cwiseSqrt());
}

}  // namespace cfd
