#include "cfd/likelihood.hpp"

#include "cfd/metrics.hpp"
#include "cfd/parallel.hpp"

#include <cmath>
#include <limits>

namespace cfd {

namespace {

constexpr std::size_t kTransitionsPerTask = 64;

}  // namespace

std::vector<double> transition_log_densities(const CorrectionSpec& spec, const SdeModel& model,
                                             const ObservationSet& obs, int threads) {
  validate(spec);
  validate(obs);
  require(obs.mode == ObservationMode::full_state, "log_likelihood needs full-state observations");
  require(obs.values.cols() == model.dim(), "observations have " + std::to_string(obs.values.cols()) +
                                                " columns, model has dimension " + std::to_string(model.dim()));
  const double dt = obs.step();
  const auto n = static_cast<std::size_t>(obs.n_transitions());
  std::vector<double> out(n, 0.0);
  std::vector<std::size_t> failed(n, 0);
  const std::size_t tasks = (n + kTransitionsPerTask - 1) / kTransitionsPerTask;
  parallel_for(tasks, threads, [&](std::size_t t) {
    const std::size_t end = std::min(n, (t + 1) * kTransitionsPerTask);
    for (std::size_t k = t * kTransitionsPerTask; k < end; ++k) {
      const Vec x = obs.values.row(static_cast<Eigen::Index>(k)).transpose();
      const Vec y = obs.values.row(static_cast<Eigen::Index>(k) + 1).transpose();
      try {
        out[k] = TransitionExpansion(spec, model, x, dt).evaluate(y).log_proxy;
      } catch (const DegeneracyError&) {
        failed[k] = 1;
      }
    }
  });
  for (std::size_t k = 0; k < n; ++k)
    if (failed[k]) throw DegeneracyError("degenerate LDL moments at transition " + std::to_string(k + 1));
  return out;
}

double log_likelihood(const CorrectionSpec& spec, const SdeModel& model, const ObservationSet& obs, int threads) {
  const auto terms = transition_log_densities(spec, model, obs, threads);
  return pairwise_sum(terms);
}

NelderMeadResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& start,
                             const NelderMeadOptions& opts) {
  const Eigen::Index n = start.size();
  require(n >= 1, "nelder_mead: empty start point");
  constexpr double inf = std::numeric_limits<double>::infinity();
  NelderMeadResult res;
  auto eval = [&](const Vec& p) {
    ++res.evals;
    const double v = f(p);
    return std::isfinite(v) ? v : inf;
  };

  std::vector<Vec> pts(n + 1, start);
  std::vector<double> val(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) pts[i + 1][i] += opts.initial_step;
  bool any_finite = false;
  for (Eigen::Index i = 0; i <= n; ++i) {
    val[i] = eval(pts[i]);
    any_finite = any_finite || std::isfinite(val[i]);
  }
  if (!any_finite) throw DegeneracyError("nelder_mead: objective is non-finite at every initial vertex");

  std::vector<Eigen::Index> order(n + 1);
  while (true) {
    for (Eigen::Index i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return val[a] < val[b]; });
    const Eigen::Index best = order[0], worst = order[n], second = order[n - 1];

    double diameter = 0.0;
    for (Eigen::Index i = 0; i <= n; ++i)
      diameter = std::max(diameter, (pts[i] - pts[best]).lpNorm<Eigen::Infinity>());
    if (diameter < opts.diameter_tol) {
      res.converged = true;
      break;
    }
    if (res.evals >= opts.max_evals) break;

    Vec centroid = Vec::Zero(n);
    for (Eigen::Index i = 0; i <= n; ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(n);

    const Vec xr = centroid + (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < val[best]) {
      const Vec xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const Vec xc = outside ? Vec(centroid + 0.5 * (xr - centroid)) : Vec(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = xc;
      val[worst] = fc;
      continue;
    }
    for (Eigen::Index i = 0; i <= n; ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      val[i] = eval(pts[i]);
    }
  }
  const auto best = std::min_element(val.begin(), val.end()) - val.begin();
  res.argmin = pts[best];
  res.value = val[best];
  return res;
}

MleResult mle_fit(const CorrectionSpec& spec, const SdeModel& model, const ObservationSet& obs, const Vec& theta0,
                  int max_evals, int threads) {
  require_dim(theta0, model.theta().size(), "mle initial theta");
  for (Eigen::Index i = 0; i < theta0.size(); ++i)
    require(theta0[i] > 0 && std::isfinite(theta0[i]),
            "mle: initial " + model.theta_names()[i] + " must be positive (fit runs on log scale)");
  validate(spec);
  validate(obs);

  auto objective = [&](const Vec& log_theta) {
    try {
      const ModelPtr m = model.with_theta(log_theta.array().exp().matrix());
      return -log_likelihood(spec, *m, obs, threads);
    } catch (const DegeneracyError&) {
      return std::numeric_limits<double>::infinity();
    } catch (const InputError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  NelderMeadOptions opts;
  opts.max_evals = max_evals;
  const auto nm = nelder_mead(objective, theta0.array().log().matrix(), opts);
  if (!std::isfinite(nm.value)) throw DegeneracyError("mle: no finite likelihood found");
  return {nm.argmin.array().exp().matrix(), -nm.value, nm.evals, nm.converged};
}

}  // namespace cfd
