#pragma once

#include "cfd/benchmark.hpp"
#include "cfd/core.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace cfd {

struct ErrorReport {
  DensityGrid abs_error_grid;
  double l1 = 0.0;
  std::int64_t negative_raw_count = 0;
  double wall_time_per_node = 0.0;  // seconds
};

// Pairwise (cascade) summation; fixed association order for a given length.
double pairwise_sum(std::span<const double> v);

// |a - b| node by node; node vectors must match exactly.
DensityGrid abs_error_grid(const DensityGrid& a, const DensityGrid& b);

// cell_area * sum of node values.
double l1_error(const DensityGrid& err);

// Riemann mass cell_area * sum of values.
double normalization_check(const DensityGrid& grid);

std::string error_report_json(const ErrorReport& r);

}  // namespace cfd
