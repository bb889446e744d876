#include "cfd/benchmark.hpp"
#include "cfd/commands.hpp"
#include "cfd/density.hpp"
#include "cfd/diagnostics.hpp"
#include "cfd/expansion.hpp"
#include "cfd/likelihood.hpp"
#include "cfd/mcmc.hpp"
#include "cfd/metrics.hpp"
#include "cfd/parallel.hpp"

#include "hermite_fd.hpp"
#include "support.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace cfd;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string summary;
};

int g_threads = 1;

const Vec kTheta{{0.1, 1.2, 0.3, 0.8}};
const Vec kX{{-0.1, 0.2}};

CorrectionSpec make_spec(int j, CorrectionVariant v) {
  CorrectionSpec s;
  s.order_j = j;
  s.variant = v;
  return s;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void note(const std::string& s) { std::printf("    %s\n", s.c_str()); }

// ------------------------------------------------------------------ 1

// Exact transition law of dX = (A X + b) dt + S dB by Gauss-Legendre
// quadrature of e^{sA} b and e^{sA} S S^T e^{sA^T} over [0, dt].
std::pair<Vec, Mat> exact_linear_law(const Mat& a, const Vec& b, const Mat& s, const Vec& x, double dt) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const Mat q = s * s.transpose();
  Vec drift = Vec::Zero(x.size());
  Mat cov = Mat::Zero(x.size(), x.size());
  for (std::size_t i = 0; i < Rule::abscissa().size(); ++i)
    for (double sign : {-1.0, 1.0}) {
      const double t = 0.5 * dt * (1.0 + sign * Rule::abscissa()[i]);
      const double w = 0.5 * dt * Rule::weights()[i];
      const Mat e = Mat(a * t).exp();
      drift += w * e * b;
      cov += w * e * q * e.transpose();
    }
  return {Mat(a * dt).exp() * x + drift, cov};
}

Verdict linear_exactness() {
  const Vec theta{{-1.0, 0.5, -0.3, -2.0, 0.3, -0.1, 0.6, 0.0, 0.2, 0.4}};
  const ModelPtr model = make_model({"linear", theta, 0.0, 1.0, 2, 2});
  const auto& lin = dynamic_cast<const LinearModel&>(*model);
  const Vec x{{0.4, -0.2}};
  double worst = 0.0;
  for (double dt : {0.1, 0.02}) {
    const auto [mean, cov] = exact_linear_law(lin.a(), lin.b(), lin.sigma(), x, dt);
    const Mat prec = cov.inverse();
    const double norm = 1.0 / (2 * std::numbers::pi * std::sqrt(cov.determinant()));
    const DensityGrid nodes = baseline_grid(GridSpec{}, *model, x, dt);
    for (int j = 2; j <= 5; ++j) {
      const ProxyGrid p = proxy_density_grid(make_spec(j, CorrectionVariant::exact_linear), *model, x, dt, nodes);
      double err = 0.0;
      for (Eigen::Index i = 0; i < nodes.x_nodes.size(); ++i)
        for (Eigen::Index k = 0; k < nodes.y_nodes.size(); ++k) {
          const Vec r = Vec{{nodes.x_nodes[i], nodes.y_nodes[k]}} - mean;
          err = std::max(err, std::abs(p.grid.values(i, k) - norm * std::exp(-0.5 * r.dot(prec * r))));
        }
      worst = std::max(worst, err);
    }
    note(fmt("dt=%g  peak density %.3g", dt, norm));
  }
  return {worst < 1e-10, fmt("max |p~ - p| = %.2e over 51x51 grids, J=2..5, dt in {0.1, 0.02} (tol 1e-10)", worst)};
}

// ------------------------------------------------------------------ 2, 3

struct FhnErrors {
  double dt;
  double noise_floor;
  std::array<double, 4> l1;  // J = 2..5
};

std::vector<FhnErrors> g_fhn_errors;

const std::vector<FhnErrors>& fhn_errors() {
  if (!g_fhn_errors.empty()) return g_fhn_errors;
  const ModelPtr model = make_model({"fhn", kTheta, 0.01});
  SimConfig sim;
  sim.n_paths = 1'000'000;
  sim.substeps = 100;
  sim.seed = 1;
  for (double dt : {0.1, 0.05, 0.02}) {
    const DensityGrid nodes = baseline_grid(GridSpec{}, *model, kX, dt);
    const BenchmarkResult b = benchmark_density(*model, kX, dt, sim, nodes, {}, g_threads);
    FhnErrors e{dt, b.noise_floor, {}};
    for (int j = 2; j <= 5; ++j) {
      const ProxyGrid p =
          proxy_density_grid(make_spec(j, CorrectionVariant::full_linearisation), *model, kX, dt, nodes, g_threads);
      e.l1[j - 2] = l1_error(abs_error_grid(p.grid, b.grid));
    }
    g_fhn_errors.push_back(e);
  }
  return g_fhn_errors;
}

Verdict fig4a_trend() {
  bool pass = true;
  for (const FhnErrors& e : fhn_errors()) {
    const bool halves = e.l1[3] < 0.6 * e.l1[0];
    bool monotone = true;
    for (int j = 1; j < 4; ++j) monotone = monotone && e.l1[j] <= e.l1[j - 1] + e.noise_floor;
    pass = pass && halves && monotone;
    note(fmt("dt=%-5g L1 J=2..5: %.4f %.4f %.4f %.4f  floor %.4f  J5/J2 %.3f%s%s", e.dt, e.l1[0], e.l1[1], e.l1[2],
             e.l1[3], e.noise_floor, e.l1[3] / e.l1[0], halves ? "" : "  [ratio >= 0.6]",
             monotone ? "" : "  [not monotone within floor]"));
  }
  return {pass, "L1(J=5) < 0.6 L1(J=2) and L1 non-increasing in J within the noise floor, dt in {0.1, 0.05, 0.02}"};
}

Verdict dt_trend() {
  const auto& e = fhn_errors();
  const FhnErrors& coarse = e.front();
  const FhnErrors& fine = e.back();
  const bool pass = fine.l1[0] < coarse.l1[0] && fine.l1[3] < coarse.l1[3];
  return {pass, fmt("L1 at dt=0.02 vs 0.1: J=2 %.4f vs %.4f, J=5 %.4f vs %.4f", fine.l1[0], coarse.l1[0], fine.l1[3],
                    coarse.l1[3])};
}

// ------------------------------------------------------------------ 4

Verdict hermite_fd() {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  const auto alphas = testing::multi_indices(2, 3);
  double worst = 0.0;
  int checked = 0;
  for (int k = 0; k < 50; ++k) {
    const Vec theta{{0.05 + 0.25 * u(rng), 0.5 + 1.5 * u(rng), 0.1 + 0.5 * u(rng), 0.3 + 0.9 * u(rng)}};
    const ModelPtr m = make_model({k % 2 ? "fhn" : "fhn-partial", theta, 0.1 * (u(rng) - 0.5)});
    const Vec x{{2.4 * u(rng) - 1.2, 2.4 * u(rng) - 1.2}};
    const double dt = 0.01 + 0.09 * u(rng);
    const LdlMoments mo = ldl_moments(*m, x, dt);
    const Vec y = mo.mean + mo.chol * Vec{{1.5 * g(rng), 1.5 * g(rng)}};
    const HermiteContext ctx = hermite_context(mo, y);
    const testing::FrozenDensityFd fd(mo, x, y);
    for (const auto& a : alphas) {
      const double exact = hermite_ratio(ctx, a) * fd.scale(a);
      worst = std::max(worst, std::abs(fd.ratio(a) - exact) / std::max(1.0, std::abs(exact)));
      ++checked;
    }
  }
  return {worst <= 1e-4, fmt("%d ratios with |alpha| <= 3 over 50 configurations, worst mixed error %.2e (tol 1e-4)",
                             checked, worst)};
}

// ------------------------------------------------------------------ 5

Verdict order_grading() {
  const ModelPtr model = make_model({"fhn", kTheta, 0.01});
  std::vector<double> ratio;
  for (double dt : {0.1, 0.05, 0.02, 0.01}) {
    const LdlMoments mo = ldl_moments(*model, kX, dt);
    const Vec y = mo.mean + mo.cov.diagonal().cwiseSqrt();
    ratio.push_back(std::abs(correction_pi(make_spec(3, CorrectionVariant::full_linearisation), *model, kX, y, dt)) /
                    std::pow(dt, 1.5));
  }
  const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
  note(fmt("|pi3|/dt^1.5 at dt=0.1,0.05,0.02,0.01: %.4g %.4g %.4g %.4g", ratio[0], ratio[1], ratio[2], ratio[3]));
  return {*lo > 0 && *hi / *lo < 3.0, fmt("spread max/min = %.3f (limit 3)", *hi / *lo)};
}

// ------------------------------------------------------------------ 6

Verdict normalization() {
  const ModelPtr model = make_model({"fhn", kTheta, 0.01});
  bool pass = true;
  std::string masses;
  for (double dt : {0.1, 0.05, 0.02}) {
    const DensityGrid nodes = baseline_grid(GridSpec{}, *model, kX, dt);
    const double mass = normalization_check(
        proxy_density_grid(make_spec(5, CorrectionVariant::full_linearisation), *model, kX, dt, nodes, g_threads).grid);
    pass = pass && mass >= 0.97 && mass <= 1.03;
    masses += fmt(" dt=%g: %.4f", dt, mass);
  }
  return {pass, "Riemann mass of p~ (J=5) in [0.97, 1.03]:" + masses};
}

// ------------------------------------------------------------------ 7

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict mle_study() {
  const ModelPtr model = make_model({"fhn", kTheta, 0.0});
  const double dt = 0.05;
  std::array<std::vector<std::vector<double>>, 2> err;  // [J=2, J=5][component][seed]
  for (auto& e : err) e.assign(4, {});
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ObservationSet obs = make_observations(simulate_path(*model, Vec::Zero(2), dt, 500, 100, seed), dt);
    for (int idx = 0; idx < 2; ++idx) {
      const MleResult r = mle_fit(make_spec(idx == 0 ? 2 : 5, CorrectionVariant::full_linearisation), *model, obs,
                                  kTheta, 2000, g_threads);
      for (int p = 0; p < 4; ++p) err[idx][p].push_back(std::abs(r.theta_hat[p] - kTheta[p]));
    }
  }
  int wins = 0;
  const char* names[] = {"epsilon", "gamma", "beta", "sigma"};
  for (int p = 0; p < 4; ++p) {
    const double m2 = median(err[0][p]), m5 = median(err[1][p]);
    wins += m5 < m2;
    note(fmt("%-8s median |err| J=2 %.4f  J=5 %.4f%s", names[p], m2, m5, m5 < m2 ? "  (J=5 better)" : ""));
  }
  return {wins >= 3, fmt("J=5 beats J=2 on median absolute error in %d of 4 components over 10 seeds (need 3)", wins)};
}

// ------------------------------------------------------------------ 8

constexpr int kPostIters = 8000;
constexpr int kPostWarmup = 2000;
constexpr int kBenchIters = 3000;
constexpr int kBenchWarmup = 1000;

McmcResult sample(const ObservationSet& obs, int j, int aug, int iters, int warmup) {
  const ModelPtr model = make_model({"fhn-partial", kTheta, 0.0});
  const AugmentedPosterior post(make_spec(j, CorrectionVariant::partial_linearisation), model, obs,
                                default_priors(*model), aug);
  McmcOptions o;
  o.n_iters = iters;
  o.n_warmup = warmup;
  o.n_chains = 2;
  o.seed = 3;
  o.init_log_theta = kTheta.array().log().matrix();
  o.threads = g_threads;
  return rwm_sample(post, o);
}

std::vector<double> pooled(const McmcResult& r, int p) {
  std::vector<double> v;
  for (const auto& c : r.chains) v.insert(v.end(), c.theta.col(p).data(), c.theta.col(p).data() + c.theta.rows());
  return v;
}

Verdict posterior_substitution() {
  const ExperimentConfig cfg = load_config(CFD_SOURCE_DIR "/configs/fhn_inference.json");
  const ObservationSet obs = inference_data(cfg);
  note(fmt("%s, %lld noisy observations, dt=%g, noise sd %g", cfg.model.name.c_str(),
           static_cast<long long>(obs.n_transitions()), obs.step(), obs.noise_sd));

  const McmcResult bench = sample(obs, 2, 10, kBenchIters, kBenchWarmup);
  const McmcResult j2 = sample(obs, 2, 1, kPostIters, kPostWarmup);
  const McmcResult j3 = sample(obs, 3, 1, kPostIters, kPostWarmup);

  auto converged = [](const McmcResult& r) {
    bool ok = true;
    for (const auto& d : r.diagnostics) ok = ok && d.rhat < 1.01 && d.ess_bulk > 400 && d.ess_tail > 400;
    return ok;
  };
  int wins = 0;
  for (int p = 0; p < 4; ++p) {
    const double w2 = wasserstein1(pooled(j2, p), pooled(bench, p));
    const double w3 = wasserstein1(pooled(j3, p), pooled(bench, p));
    wins += w3 < w2;
    note(fmt("%-8s W1 to benchmark J=2 %.4f  J=3 %.4f | mean bench %.4f J=2 %.4f J=3 %.4f", j2.names[p].c_str(), w2,
             w3, bench.diagnostics[p].mean, j2.diagnostics[p].mean, j3.diagnostics[p].mean));
  }
  for (const auto* r : {&j2, &j3, &bench}) {
    double rhat = 0, essb = 1e300, esst = 1e300;
    for (const auto& d : r->diagnostics) {
      rhat = std::max(rhat, d.rhat);
      essb = std::min(essb, d.ess_bulk);
      esst = std::min(esst, d.ess_tail);
    }
    note(fmt("%-9s max rhat %.4f  min ess bulk %.0f tail %.0f  %.4f s/iter", r == &bench ? "benchmark" : r == &j2 ? "J=2" : "J=3",
             rhat, essb, esst, r->seconds_per_iter));
  }
  const bool conv = converged(j2) && converged(j3);
  return {wins >= 3 && conv, fmt("J=3 closer to the augmented benchmark in %d of 4 parameters (need 3); J=2/J=3 chains %s",
                                 wins, conv ? "converged" : "did not reach rhat < 1.01, ess > 400")};
}

// ------------------------------------------------------------------ 9

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CFD_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / ("cfd_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto cfg = nlohmann::json::parse(testing::slurp(CFD_SOURCE_DIR "/configs/fhn_density.json"));
  cfg["simulation"]["n_paths"] = 100000;
  const fs::path config = dir / "config.json";
  std::ofstream(config) << cfg.dump(2);

  const std::pair<const char*, std::vector<std::string>> commands[] = {
      {"density", {"density.csv"}},
      {"compare", {"benchmark.csv", "error_J2.csv", "error_J3.csv", "error_J4.csv", "error_J5.csv"}},
      {"simulate", {"path.csv", "observations.csv"}},
  };
  bool pass = true;
  int files = 0;
  for (const auto& [cmd, outputs] : commands) {
    const std::string runs[] = {"a", "b", "c"};
    const int threads[] = {1, 1, 4};
    for (int r = 0; r < 3; ++r) {
      const fs::path out = dir / (std::string(cmd) + "_" + runs[r]);
      const int rc = run_cli(std::string(cmd) + " --config " + config.string() + " --out " + out.string() +
                             " --threads " + std::to_string(threads[r]));
      if (rc != 0) {
        note(fmt("%s run %s exited with %d", cmd, runs[r].c_str(), rc));
        pass = false;
      }
    }
    for (const auto& f : outputs) {
      const std::string ref = testing::slurp((dir / (std::string(cmd) + "_a") / f).string());
      const bool same = !ref.empty() && testing::slurp((dir / (std::string(cmd) + "_b") / f).string()) == ref &&
                        testing::slurp((dir / (std::string(cmd) + "_c") / f).string()) == ref;
      if (!same) note(fmt("%s: %s differs", cmd, f.c_str()));
      pass = pass && same;
      ++files;
    }
  }
  fs::remove_all(dir);
  return {pass, fmt("%d CSVs from density, compare, simulate byte-identical over two runs and threads {1, 4}", files)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  g_threads = default_threads();
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const Criterion criteria[] = {
      {1, "linear-SDE exactness", 1.0, linear_exactness},
      {2, "FHN error trend in J", 300.0, fig4a_trend},
      {3, "FHN error trend in dt", 300.0, dt_trend},
      {4, "Hermite ratios vs finite differences", 10.0, hermite_fd},
      {5, "order grading of pi3", 1.0, order_grading},
      {6, "proxy normalization", 10.0, normalization},
      {7, "FHN MLE study", 1200.0, mle_study},
      {8, "posterior substitution", 1800.0, posterior_substitution},
      {9, "CLI determinism", 120.0, determinism},
  };

  std::printf("acceptance suite (%d thread%s)\n", g_threads, g_threads == 1 ? "" : "s");
  int failed = 0;
  double shared_seconds = 0.0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // Criteria 2 and 3 share one run; its time counts against the joint budget.
    if (c.id == 2) shared_seconds = secs;
    if (c.id == 3) secs += shared_seconds;
    const bool in_time = secs < c.budget_seconds;
    const bool pass = v.pass && in_time;
    failed += !pass;
    std::printf("%s  %d. %s: %s [%.1f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, v.summary.c_str(),
                secs, c.budget_seconds, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
