#include "cfd/metrics.hpp"

#include <json.hpp>

#include <cmath>

namespace cfd {

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

DensityGrid abs_error_grid(const DensityGrid& a, const DensityGrid& b) {
  require(same_nodes(a, b), "abs_error_grid: grids have different nodes");
  DensityGrid out = a;
  out.values = (a.values - b.values).cwiseAbs();
  return out;
}

double l1_error(const DensityGrid& err) { return normalization_check(err); }

double normalization_check(const DensityGrid& grid) {
  const std::span<const double> v(grid.values.data(), static_cast<size_t>(grid.values.size()));
  return grid.cell_area * pairwise_sum(v);
}

std::string error_report_json(const ErrorReport& r) {
  nlohmann::ordered_json j;
  j["l1"] = r.l1;
  j["negative_raw_count"] = r.negative_raw_count;
  j["wall_time_per_node"] = r.wall_time_per_node;
  j["cell_area"] = r.abs_error_grid.cell_area;
  j["nx"] = r.abs_error_grid.x_nodes.size();
  j["ny"] = r.abs_error_grid.y_nodes.size();
  return j.dump(2);
}

}  // namespace cfd
