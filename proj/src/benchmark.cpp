#include "cfd/benchmark.hpp"

#include "cfd/metrics.hpp"
#include "cfd/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

namespace cfd {

DensityGrid make_grid(double x_lo, double x_hi, int nx, double y_lo, double y_hi, int ny) {
  require(nx >= 2 && ny >= 2, "grid needs at least 2 nodes per axis");
  require(std::isfinite(x_lo) && std::isfinite(x_hi) && x_hi > x_lo, "grid x range must be increasing");
  require(std::isfinite(y_lo) && std::isfinite(y_hi) && y_hi > y_lo, "grid y range must be increasing");
  DensityGrid g;
  g.x_nodes = Vec::LinSpaced(nx, x_lo, x_hi);
  g.y_nodes = Vec::LinSpaced(ny, y_lo, y_hi);
  g.values = Mat::Zero(nx, ny);
  g.cell_area = (x_hi - x_lo) / (nx - 1) * ((y_hi - y_lo) / (ny - 1));
  return g;
}

bool same_nodes(const DensityGrid& a, const DensityGrid& b) {
  return a.x_nodes.size() == b.x_nodes.size() && a.y_nodes.size() == b.y_nodes.size() &&
         a.x_nodes == b.x_nodes && a.y_nodes == b.y_nodes && a.cell_area == b.cell_area;
}

DensityGrid grid_around(const GridSpec& spec, const Vec& centre, const Vec& sd) {
  require(centre.size() == 2 && sd.size() == 2, "density grids are two-dimensional");
  auto axis = [&](const std::optional<std::array<double, 2>>& r, int i) {
    if (r) return *r;
    return std::array<double, 2>{centre[i] - spec.half_width_sd * sd[i], centre[i] + spec.half_width_sd * sd[i]};
  };
  const auto xr = axis(spec.x_range, 0);
  const auto yr = axis(spec.y_range, 1);
  return make_grid(xr[0], xr[1], spec.nx, yr[0], yr[1], spec.ny);
}

void write_grid_csv(std::ostream& os, const DensityGrid& grid) {
  os << "x,y,value\n";
  char buf[96];
  for (Eigen::Index i = 0; i < grid.x_nodes.size(); ++i) {
    for (Eigen::Index j = 0; j < grid.y_nodes.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.x_nodes[i], grid.y_nodes[j], grid.values(i, j));
      os << buf;
    }
  }
}

void write_grid_csv(const std::string& path, const DensityGrid& grid) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path + " for writing");
  write_grid_csv(os, grid);
}

DensityGrid read_grid_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)) && line.rfind("x,y,value", 0) == 0,
          "grid csv: missing 'x,y,value' header");
  std::vector<std::array<double, 3>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::array<double, 3> r{};
    std::istringstream ls(line);
    char c1 = 0, c2 = 0;
    ls >> r[0] >> c1 >> r[1] >> c2 >> r[2];
    require(!ls.fail() && c1 == ',' && c2 == ',', "grid csv: malformed row '" + line + "'");
    rows.push_back(r);
  }
  require(!rows.empty(), "grid csv: no rows");
  Eigen::Index ny = 0;
  while (ny < static_cast<Eigen::Index>(rows.size()) && rows[ny][0] == rows[0][0]) ++ny;
  require(ny >= 2 && rows.size() % ny == 0, "grid csv: not a rectangular row-major grid");
  const Eigen::Index nx = static_cast<Eigen::Index>(rows.size()) / ny;
  require(nx >= 2, "grid csv: need at least 2 x nodes");
  DensityGrid g;
  g.x_nodes.resize(nx);
  g.y_nodes.resize(ny);
  g.values.resize(nx, ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j) {
      const auto& r = rows[i * ny + j];
      if (j == 0) g.x_nodes[i] = r[0];
      if (i == 0) g.y_nodes[j] = r[1];
      require(r[0] == g.x_nodes[i] && r[1] == g.y_nodes[j], "grid csv: nodes are not a tensor grid");
      g.values(i, j) = r[2];
    }
  }
  for (Eigen::Index i = 1; i < nx; ++i) require(g.x_nodes[i] > g.x_nodes[i - 1], "grid csv: x not increasing");
  for (Eigen::Index j = 1; j < ny; ++j) require(g.y_nodes[j] > g.y_nodes[j - 1], "grid csv: y not increasing");
  g.cell_area = (g.x_nodes[nx - 1] - g.x_nodes[0]) / (nx - 1) * ((g.y_nodes[ny - 1] - g.y_nodes[0]) / (ny - 1));
  return g;
}

void validate(const SimConfig& cfg) {
  require(cfg.n_paths >= 1, "n_paths must be >= 1");
  require(cfg.substeps >= 1, "substeps must be >= 1");
}

Vec em_step(const SdeModel& model, const Vec& x, double h, const Vec& z) {
  require(h > 0, "em_step: step must be positive");
  require_dim(z, model.n_noise(), "em_step noise");
  return x + model.drift(x) * h + model.diffusion(x) * (std::sqrt(h) * z);
}

namespace {

// Advances x in place through `steps` EM steps. Returns false on blow-up.
class EmIntegrator {
 public:
  EmIntegrator(const SdeModel& model, double h)
      : model_(model), n_(model.dim()), d_(model.n_noise()), h_(h), sqrt_h_(std::sqrt(h)),
        drift_(n_), sigma_(static_cast<size_t>(n_) * d_), z_(d_) {
    if (model.additive_noise()) model.eval_diffusion(std::span<const double>(drift_.data(), n_), sigma_);
  }

  bool run(std::span<double> x, int steps, Rng& rng) {
    std::normal_distribution<double> normal;
    for (int s = 0; s < steps; ++s) {
      model_.eval_drift(x, drift_);
      if (!model_.additive_noise()) model_.eval_diffusion(x, sigma_);
      for (int j = 0; j < d_; ++j) z_[j] = normal(rng) * sqrt_h_;
      for (int i = 0; i < n_; ++i) {
        double v = x[i] + drift_[i] * h_;
        for (int j = 0; j < d_; ++j) v += sigma_[static_cast<size_t>(j) * n_ + i] * z_[j];
        x[i] = v;
      }
    }
    for (int i = 0; i < n_; ++i)
      if (!std::isfinite(x[i])) return false;
    return true;
  }

 private:
  const SdeModel& model_;
  int n_, d_;
  double h_, sqrt_h_;
  std::vector<double> drift_, sigma_, z_;
};

constexpr std::int64_t kPathsPerTask = 4096;

}  // namespace

SimulationResult simulate_endpoints(const SdeModel& model, const Vec& x0, double dt, const SimConfig& cfg,
                                    int threads) {
  validate(cfg);
  require(dt > 0, "simulate: dt must be positive");
  require_dim(x0, model.dim(), "simulate: initial state");
  const int n = model.dim();
  const double h = dt / cfg.substeps;

  Mat all(cfg.n_paths, n);
  std::vector<char> ok(static_cast<size_t>(cfg.n_paths), 1);
  const auto n_tasks = static_cast<size_t>((cfg.n_paths + kPathsPerTask - 1) / kPathsPerTask);
  parallel_for(n_tasks, threads, [&](size_t task) {
    EmIntegrator em(model, h);
    std::vector<double> x(n);
    const std::int64_t begin = static_cast<std::int64_t>(task) * kPathsPerTask;
    const std::int64_t end = std::min(cfg.n_paths, begin + kPathsPerTask);
    for (std::int64_t p = begin; p < end; ++p) {
      Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(p));
      for (int i = 0; i < n; ++i) x[i] = x0[i];
      ok[p] = em.run(x, cfg.substeps, rng) ? 1 : 0;
      for (int i = 0; i < n; ++i) all(p, i) = x[i];
    }
  });

  SimulationResult res;
  for (char k : ok) res.excluded += k ? 0 : 1;
  if (static_cast<double>(res.excluded) > 1e-3 * static_cast<double>(cfg.n_paths)) {
    throw DegeneracyError("simulation blew up on " + std::to_string(res.excluded) + " of " +
                          std::to_string(cfg.n_paths) + " paths");
  }
  if (res.excluded == 0) {
    res.endpoints = std::move(all);
  } else {
    res.endpoints.resize(cfg.n_paths - res.excluded, n);
    Eigen::Index r = 0;
    for (std::int64_t p = 0; p < cfg.n_paths; ++p)
      if (ok[p]) res.endpoints.row(r++) = all.row(p);
  }
  return res;
}

Mat simulate_path(const SdeModel& model, const Vec& x0, double dt, int n_steps, int substeps, std::uint64_t seed) {
  require(dt > 0 && n_steps >= 1 && substeps >= 1, "simulate_path: bad step configuration");
  require_dim(x0, model.dim(), "simulate_path: initial state");
  const int n = model.dim();
  EmIntegrator em(model, dt / substeps);
  Rng rng(seed);
  Mat path(n_steps + 1, n);
  std::vector<double> x(x0.data(), x0.data() + n);
  path.row(0) = x0.transpose();
  for (int k = 1; k <= n_steps; ++k) {
    if (!em.run(x, substeps, rng)) throw DegeneracyError("simulate_path: trajectory blew up at step " + std::to_string(k));
    for (int i = 0; i < n; ++i) path(k, i) = x[i];
  }
  return path;
}

Vec silverman_bandwidth(const Mat& samples) {
  const auto n = static_cast<double>(samples.rows());
  const auto dim = static_cast<double>(samples.cols());
  require(samples.rows() >= 2, "bandwidth needs at least 2 samples");
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Vec sd = ((samples.rowwise() - mean).array().square().colwise().sum() / (n - 1.0)).sqrt().transpose();
  for (Eigen::Index i = 0; i < sd.size(); ++i)
    require(sd[i] > 0 && std::isfinite(sd[i]), "KDE: zero variance in dimension " + std::to_string(i));
  return sd * std::pow(4.0 / ((dim + 2.0) * n), 1.0 / (dim + 4.0));
}

namespace {

constexpr Eigen::Index kKdeChunk = 8192;

}  // namespace

DensityGrid kde_density(const Mat& samples, DensityGrid grid, const KdeOptions& opts, int threads) {
  require(samples.cols() == 2, "KDE: samples must be two-dimensional");
  Vec bw(2);
  if (opts.bandwidth) {
    require(samples.rows() >= 1, "KDE: no samples");
    bw << (*opts.bandwidth)[0], (*opts.bandwidth)[1];
    require(bw[0] > 0 && bw[1] > 0, "KDE: bandwidth must be positive");
  } else {
    require(samples.rows() >= 100, "KDE: need at least 100 samples");
    bw = silverman_bandwidth(samples);
  }
  const Eigen::Index n = samples.rows();
  const Eigen::Index nx = grid.x_nodes.size(), ny = grid.y_nodes.size();
  const auto n_chunks = static_cast<size_t>((n + kKdeChunk - 1) / kKdeChunk);
  std::vector<Mat> partial(n_chunks);

  parallel_for(n_chunks, threads, [&](size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kKdeChunk;
    const Eigen::Index len = std::min(kKdeChunk, n - begin);
    Mat kx(len, nx), ky(len, ny);
    for (Eigen::Index s = 0; s < len; ++s) {
      const double sx = samples(begin + s, 0), sy = samples(begin + s, 1);
      for (Eigen::Index i = 0; i < nx; ++i) {
        const double t = (grid.x_nodes[i] - sx) / bw[0];
        kx(s, i) = std::exp(-0.5 * t * t);
      }
      for (Eigen::Index j = 0; j < ny; ++j) {
        const double t = (grid.y_nodes[j] - sy) / bw[1];
        ky(s, j) = std::exp(-0.5 * t * t);
      }
    }
    partial[c].noalias() = kx.transpose() * ky;
  });

  Mat acc = Mat::Zero(nx, ny);
  for (const auto& p : partial) acc += p;
  grid.values = acc / (2.0 * std::numbers::pi * bw[0] * bw[1] * static_cast<double>(n));
  return grid;
}

BenchmarkResult benchmark_density(const SdeModel& model, const Vec& x0, double dt, const SimConfig& cfg,
                                  const DensityGrid& nodes, const KdeOptions& opts, int threads) {
  require(model.dim() == 2, "benchmark: two-dimensional models only");
  const SimulationResult first = simulate_endpoints(model, x0, dt, cfg, threads);
  SimConfig second_cfg = cfg;
  second_cfg.seed = cfg.seed + 1;
  const SimulationResult second = simulate_endpoints(model, x0, dt, second_cfg, threads);

  BenchmarkResult r;
  r.excluded = first.excluded;
  KdeOptions o = opts;
  if (!o.bandwidth) {
    const Vec bw = silverman_bandwidth(first.endpoints);
    o.bandwidth = std::array<double, 2>{bw[0], bw[1]};
  }
  r.bandwidth = *o.bandwidth;
  r.grid = kde_density(first.endpoints, nodes, o, threads);

  Mat both(first.endpoints.rows() + second.endpoints.rows(), 2);
  both << first.endpoints, second.endpoints;
  const DensityGrid doubled = kde_density(both, nodes, opts, threads);
  r.noise_floor = l1_error(abs_error_grid(r.grid, doubled));
  return r;
}

}  // namespace cfd
