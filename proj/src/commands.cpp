#include "cfd/commands.hpp"

#include "cfd/density.hpp"
#include "cfd/likelihood.hpp"
#include "cfd/metrics.hpp"
#include "cfd/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>

namespace cfd {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kNoiseStream = 0x6f62736e6f697365ULL;

fs::path prepare_output(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + cfg.output_dir);
  std::ofstream os(dir / "resolved_config.json");
  os << resolved_config_json(cfg) << "\n";
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw InputError("cannot write " + p.string());
  return os;
}

void write_json(const fs::path& p, const ordered_json& j) { open_out(p) << j.dump(2) << "\n"; }

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

ordered_json matrix_json(const Mat& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_std(m.row(i).transpose()));
  return rows;
}

ordered_json named(const std::vector<std::string>& names, const Vec& v) {
  ordered_json o;
  for (std::size_t i = 0; i < names.size(); ++i) o[names[i]] = v[static_cast<Eigen::Index>(i)];
  return o;
}

void write_path_csv(const fs::path& p, const Mat& path, double dt) {
  auto os = open_out(p);
  os << "t";
  for (Eigen::Index j = 0; j < path.cols(); ++j) os << ",x" << j + 1;
  os << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < path.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(i) * dt);
    os << buf;
    for (Eigen::Index j = 0; j < path.cols(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", path(i, j));
      os << buf;
    }
    os << "\n";
  }
}

Mat simulated_path(const ExperimentConfig& cfg, const SdeModel& model, int n_steps) {
  return simulate_path(model, cfg.x0, cfg.dt, n_steps, cfg.simulation.substeps, cfg.simulation.seed);
}

ObservationSet observe(const ExperimentConfig& cfg, const Mat& path) {
  const auto& inf = cfg.inference;
  if (inf.mode == ObservationMode::full_state) return make_observations(path, cfg.dt);
  Rng rng = Rng::stream(cfg.simulation.seed, kNoiseStream);
  std::normal_distribution<double> normal;
  Mat y(path.rows(), 1);
  for (Eigen::Index i = 0; i < path.rows(); ++i) y(i, 0) = path(i, 0) + inf.noise_sd * normal(rng);
  return make_observations(y, cfg.dt, inf.mode, inf.noise_sd);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void require_planar(const SdeModel& model, const char* cmd) {
  require(model.dim() == 2, std::string(cmd) + ": grid commands need a two-dimensional model");
}

}  // namespace

void apply_overrides(ExperimentConfig& cfg, const RunOptions& opts) {
  if (opts.seed) {
    cfg.simulation.seed = *opts.seed;
    cfg.inference.mcmc.seed = *opts.seed;
  }
  if (opts.out) cfg.output_dir = *opts.out;
}

ObservationSet inference_data(const ExperimentConfig& cfg) {
  const auto& inf = cfg.inference;
  if (inf.data) return read_observations_csv(*inf.data, inf.mode, inf.noise_sd);
  const ModelPtr model = make_model(cfg.model);
  return observe(cfg, simulated_path(cfg, *model, inf.n_obs));
}

void cmd_density(const ExperimentConfig& cfg, int threads) {
  const ModelPtr model = make_model(cfg.model);
  require_planar(*model, "density");
  const fs::path dir = prepare_output(cfg);
  const DensityGrid nodes = baseline_grid(cfg.grid, *model, cfg.x0, cfg.dt);
  const ProxyGrid p = proxy_density_grid(cfg.expansion, *model, cfg.x0, cfg.dt, nodes, threads);
  write_grid_csv((dir / "density.csv").string(), p.grid);
  ordered_json j;
  j["variant"] = to_string(cfg.expansion.variant);
  j["order_j"] = cfg.expansion.order_j;
  j["dt"] = cfg.dt;
  j["mass"] = normalization_check(p.grid);
  j["negative_raw_count"] = p.negative_raw;
  j["seconds_per_node"] = p.seconds_per_node;
  write_json(dir / "density.json", j);
}

void cmd_compare(const ExperimentConfig& cfg, int threads) {
  const ModelPtr model = make_model(cfg.model);
  require_planar(*model, "compare");
  const fs::path dir = prepare_output(cfg);

  ordered_json j;
  DensityGrid bench;
  if (cfg.benchmark) {
    std::ifstream is(*cfg.benchmark);
    if (!is) throw InputError("cannot open benchmark " + *cfg.benchmark);
    bench = read_grid_csv(is);
    j["benchmark"] = {{"source", *cfg.benchmark}};
  } else {
    const DensityGrid nodes = baseline_grid(cfg.grid, *model, cfg.x0, cfg.dt);
    const BenchmarkResult b = benchmark_density(*model, cfg.x0, cfg.dt, cfg.simulation, nodes, cfg.kde, threads);
    bench = b.grid;
    j["benchmark"] = {{"source", "simulation"},
                      {"n_paths", cfg.simulation.n_paths},
                      {"substeps", cfg.simulation.substeps},
                      {"excluded", b.excluded},
                      {"bandwidth", b.bandwidth},
                      {"noise_floor", b.noise_floor},
                      {"mass", normalization_check(b.grid)}};
  }
  write_grid_csv((dir / "benchmark.csv").string(), bench);

  ordered_json rows = ordered_json::array();
  for (int order : cfg.orders) {
    CorrectionSpec spec = cfg.expansion;
    spec.order_j = order;
    std::vector<double> times;
    ProxyGrid p;
    for (int rep = 0; rep < 5; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      p = proxy_density_grid(spec, *model, cfg.x0, cfg.dt, bench, threads);
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    ErrorReport r;
    r.abs_error_grid = abs_error_grid(p.grid, bench);
    r.l1 = l1_error(r.abs_error_grid);
    r.negative_raw_count = p.negative_raw;
    r.wall_time_per_node = median(times) / static_cast<double>(bench.values.size());
    write_grid_csv((dir / ("error_J" + std::to_string(order) + ".csv")).string(), r.abs_error_grid);
    ordered_json row = ordered_json::parse(error_report_json(r));
    row["order_j"] = order;
    row["mass"] = normalization_check(p.grid);
    rows.push_back(row);
  }
  j["variant"] = to_string(cfg.expansion.variant);
  j["dt"] = cfg.dt;
  j["orders"] = rows;
  write_json(dir / "compare.json", j);
}

void cmd_simulate(const ExperimentConfig& cfg, int) {
  const ModelPtr model = make_model(cfg.model);
  const fs::path dir = prepare_output(cfg);
  const Mat path = simulated_path(cfg, *model, cfg.sim_steps);
  write_path_csv(dir / "path.csv", path, cfg.dt);
  auto os = open_out(dir / "observations.csv");
  write_observations_csv(os, observe(cfg, path));
}

void cmd_mle(const ExperimentConfig& cfg, int threads) {
  const ModelPtr model = make_model(cfg.model);
  const fs::path dir = prepare_output(cfg);
  const ObservationSet obs = inference_data(cfg);
  require(obs.mode == ObservationMode::full_state, "mle: needs full-state observations");
  const Vec theta0 = cfg.inference.init_theta.value_or(cfg.model.theta);
  const MleResult r = mle_fit(cfg.expansion, *model, obs, theta0, cfg.inference.max_evals, threads);
  const auto names = model->theta_names();
  ordered_json j;
  j["variant"] = to_string(cfg.expansion.variant);
  j["order_j"] = cfg.expansion.order_j;
  j["theta_hat"] = named(names, r.theta_hat);
  j["theta_init"] = named(names, theta0);
  if (!cfg.inference.data) j["theta_true"] = named(names, cfg.model.theta);
  j["loglik"] = r.loglik;
  j["evals"] = r.evals;
  j["converged"] = r.converged;
  write_json(dir / "mle.json", j);
}

void cmd_mcmc(const ExperimentConfig& cfg, int threads) {
  const ModelPtr model = make_model(cfg.model);
  const fs::path dir = prepare_output(cfg);
  const ObservationSet obs = inference_data(cfg);
  require(obs.mode == ObservationMode::noisy_first_coordinate, "mcmc: needs noisy-first-coordinate observations");
  const Priors priors = cfg.inference.priors.value_or(default_priors(*model));
  const AugmentedPosterior post(cfg.expansion, model, obs, priors, cfg.inference.augmentation);
  McmcOptions opts = cfg.inference.mcmc;
  opts.threads = threads;
  if (cfg.inference.init_theta) {
    require((cfg.inference.init_theta->array() > 0).all(), "mcmc: init must be positive");
    opts.init_log_theta = cfg.inference.init_theta->array().log().matrix();
  }
  const McmcResult r = rwm_sample(post, opts);
  auto os = open_out(dir / "chains.csv");
  write_chains_csv(os, r);
  open_out(dir / "diagnostics.json") << diagnostics_json(r) << "\n";
}

void cmd_check(const ExperimentConfig& cfg, int threads) {
  const ModelPtr model = make_model(cfg.model);
  const fs::path dir = prepare_output(cfg);
  ordered_json j;
  const HormanderReport h = check_hormander(*model, cfg.x0);
  j["hormander"] = {{"rank_rough", h.rank_rough}, {"rank_full", h.rank_full}, {"satisfied", h.satisfied}};
  const LdlMoments m = ldl_moments(*model, cfg.x0, cfg.dt);
  j["ldl"] = {{"mean", to_std(m.mean)}, {"cov", matrix_json(m.cov)}, {"jitter", m.jitter}};
  const SimulationResult s = simulate_endpoints(*model, cfg.x0, cfg.dt, cfg.simulation, threads);
  const Vec mean = s.endpoints.colwise().mean().transpose();
  const Mat centred = s.endpoints.rowwise() - mean.transpose();
  const Mat cov = centred.transpose() * centred / static_cast<double>(s.endpoints.rows() - 1);
  j["monte_carlo"] = {{"n_paths", cfg.simulation.n_paths},
                      {"excluded", s.excluded},
                      {"mean", to_std(mean)},
                      {"cov", matrix_json(cov)},
                      {"max_abs_mean_diff", (mean - m.mean).cwiseAbs().maxCoeff()},
                      {"max_abs_cov_diff", (cov - m.cov).cwiseAbs().maxCoeff()}};
  write_json(dir / "check.json", j);
}

int run_command(const std::string& command, const std::string& config_path, const RunOptions& opts,
                std::ostream& err) {
  try {
    ExperimentConfig cfg = load_config(config_path);
    apply_overrides(cfg, opts);
    const int threads = std::max(1, opts.threads);
    if (command == "density") cmd_density(cfg, threads);
    else if (command == "compare") cmd_compare(cfg, threads);
    else if (command == "simulate") cmd_simulate(cfg, threads);
    else if (command == "mle") cmd_mle(cfg, threads);
    else if (command == "mcmc") cmd_mcmc(cfg, threads);
    else if (command == "check") cmd_check(cfg, threads);
    else throw InputError("unknown command '" + command + "'");
    return 0;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DegeneracyError& e) {
    err << "degenerate: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace cfd
