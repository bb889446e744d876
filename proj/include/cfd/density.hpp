#pragma once

#include "cfd/benchmark.hpp"
#include "cfd/expansion.hpp"

#include <cstdint>

namespace cfd {

struct ProxyGrid {
  DensityGrid grid;                // p~ at every node
  std::int64_t negative_raw = 0;   // nodes where pbar (1 + pi) < 0
  double seconds_per_node = 0.0;
};

// Evaluates the proxy from x over the nodes of `nodes` (values ignored).
// Grid columns are split over threads; values do not depend on the count.
ProxyGrid proxy_density_grid(const CorrectionSpec& spec, const SdeModel& model, const Vec& x, double dt,
                             const DensityGrid& nodes, int threads = 1);

// Grid centred on the LDL mean spanning half_width_sd baseline standard
// deviations, unless the spec fixes the ranges.
DensityGrid baseline_grid(const GridSpec& spec, const SdeModel& model, const Vec& x, double dt);

}  // namespace cfd
