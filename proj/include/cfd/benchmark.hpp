#pragma once

#include "cfd/core.hpp"
#include "cfd/random.hpp"
#include "cfd/sde_model.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace cfd {

// Densities on a rectangular grid; values(i, j) sits at (x_nodes[i], y_nodes[j]).
struct DensityGrid {
  Vec x_nodes;
  Vec y_nodes;
  Mat values;
  double cell_area = 0.0;
};

// Uniform nodes on [lo, hi] per axis; cell area (dx * dy) with dx = (hi - lo) / (n - 1).
DensityGrid make_grid(double x_lo, double x_hi, int nx, double y_lo, double y_hi, int ny);

// Equal node vectors and cell area.
bool same_nodes(const DensityGrid& a, const DensityGrid& b);

struct GridSpec {
  int nx = 51;
  int ny = 51;
  // Explicit bounds; when absent the axis spans centre +- half_width_sd
  // standard deviations of whatever reference distribution the caller has.
  std::optional<std::array<double, 2>> x_range;
  std::optional<std::array<double, 2>> y_range;
  double half_width_sd = 4.0;
};

DensityGrid grid_around(const GridSpec& spec, const Vec& centre, const Vec& sd);

// "x,y,value" header then one row per node, x outer, %.17g.
void write_grid_csv(std::ostream& os, const DensityGrid& grid);
void write_grid_csv(const std::string& path, const DensityGrid& grid);
DensityGrid read_grid_csv(std::istream& is);

struct SimConfig {
  std::int64_t n_paths = 1'000'000;
  int substeps = 100;
  std::uint64_t seed = 1;
};

void validate(const SimConfig& cfg);

// x + V0(x) h + sigma(x) sqrt(h) z.
Vec em_step(const SdeModel& model, const Vec& x, double h, const Vec& z);

struct SimulationResult {
  Mat endpoints;  // kept paths x N
  std::int64_t excluded = 0;
};

// Independent EM paths from x0 over dt with cfg.substeps steps each. Path p
// draws from Rng::stream(cfg.seed, p), so the output does not depend on
// `threads`. Paths that leave the finite range are dropped and counted;
// more than 0.1% dropped is a DegeneracyError.
SimulationResult simulate_endpoints(const SdeModel& model, const Vec& x0, double dt, const SimConfig& cfg,
                                    int threads = 1);

// One EM trajectory sampled every dt (n_steps + 1 rows), substeps EM steps per dt.
Mat simulate_path(const SdeModel& model, const Vec& x0, double dt, int n_steps, int substeps, std::uint64_t seed);

struct KdeOptions {
  // Per-axis bandwidths; Silverman's rule when absent.
  std::optional<std::array<double, 2>> bandwidth;
};

// Silverman's rule h_i = sd_i (4 / ((N + 2) n))^{1/(N + 4)}.
Vec silverman_bandwidth(const Mat& samples);

// Product-Gaussian KDE of 2-D samples evaluated at the nodes of `grid`
// (values are overwritten). Automatic bandwidth needs >= 100 samples and
// non-zero spread in both axes.
DensityGrid kde_density(const Mat& samples, DensityGrid grid, const KdeOptions& opts = {}, int threads = 1);

struct BenchmarkResult {
  DensityGrid grid;          // KDE of cfg.n_paths paths
  double noise_floor = 0.0;  // L1 change when the path count is doubled
  std::int64_t excluded = 0;
  std::array<double, 2> bandwidth{};
};

// Simulation benchmark on `nodes`. A second batch of n_paths paths drawn
// from seed + 1 gives the doubled sample behind noise_floor.
BenchmarkResult benchmark_density(const SdeModel& model, const Vec& x0, double dt, const SimConfig& cfg,
                                  const DensityGrid& nodes, const KdeOptions& opts = {}, int threads = 1);

}  // namespace cfd
