#include "cfd/benchmark.hpp"
#include "cfd/likelihood.hpp"
#include "cfd/random.hpp"

#include <doctest.h>

#include <numbers>

using namespace cfd;

namespace {

const Vec kTheta{{0.1, 1.2, 0.3, 0.8}};

CorrectionSpec spec(int j, CorrectionVariant v) {
  CorrectionSpec s;
  s.order_j = j;
  s.variant = v;
  return s;
}

ObservationSet exact_ou_chain(const SdeModel& ou, double x0, double dt, int n, std::uint64_t seed) {
  Rng rng(seed);
  Mat v(n + 1, 1);
  v(0, 0) = x0;
  for (int k = 1; k <= n; ++k) v(k, 0) = gaussian_sample(ldl_moments(ou, v.row(k - 1).transpose(), dt), rng)[0];
  return make_observations(v, dt);
}

double ou_exact_loglik(double kappa, double m, double sigma, const ObservationSet& obs) {
  const double dt = obs.step();
  const double a = std::exp(-kappa * dt);
  const double var = sigma * sigma / (2 * kappa) * (1 - a * a);
  double ll = 0.0;
  for (Eigen::Index k = 1; k < obs.values.rows(); ++k) {
    const double r = obs.values(k, 0) - (m + (obs.values(k - 1, 0) - m) * a);
    ll += -0.5 * r * r / var - 0.5 * std::log(2 * std::numbers::pi * var);
  }
  return ll;
}

}  // namespace

TEST_CASE("linear models give the exact chain likelihood") {
  const ModelPtr ou = make_model({"ou", Vec{{1.3, 0.5, 0.4}}});
  const ObservationSet obs = exact_ou_chain(*ou, 0.2, 0.1, 300, 5);
  for (int j = 2; j <= 5; ++j) {
    const double ll = log_likelihood(spec(j, CorrectionVariant::exact_linear), *ou, obs);
    const double exact = ou_exact_loglik(1.3, 0.5, 0.4, obs);
    CHECK(std::abs(ll - exact) < 1e-10 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("order two reduces to the baseline log density") {
  const ModelPtr m = make_model({"fhn", kTheta, 0.01});
  Mat v(3, 2);
  v << 0.1, 0.2, 0.1, 0.2, 0.1, 0.2;
  const ObservationSet obs = make_observations(v, 0.01);
  const double direct = gaussian_logpdf(ldl_moments(*m, v.row(0).transpose(), 0.01), v.row(1).transpose()) * 2;
  CHECK(log_likelihood(spec(2, CorrectionVariant::full_linearisation), *m, obs) == doctest::Approx(direct));
}

TEST_CASE("fhn likelihood equals a separate per-transition loop") {
  const ModelPtr m = make_model({"fhn-partial", kTheta, 0.0});
  const Mat path = simulate_path(*m, Vec{{0.0, 0.0}}, 0.05, 300, 50, 3);
  const ObservationSet obs = make_observations(path, 0.05);
  for (int j : {2, 3, 5}) {
    const CorrectionSpec s = spec(j, CorrectionVariant::partial_linearisation);
    double loop = 0.0;
    for (Eigen::Index k = 1; k < path.rows(); ++k) {
      const Vec x = path.row(k - 1).transpose(), y = path.row(k).transpose();
      const LdlMoments mo = ldl_moments(*m, x, 0.05);
      loop += gaussian_logpdf(mo, y) + log_taylor(correction_pi(s, *m, x, y, 0.05), 2);
    }
    const double ll = log_likelihood(s, *m, obs, 1);
    CHECK(ll == doctest::Approx(loop).epsilon(1e-12));
    CHECK(log_likelihood(s, *m, obs, 4) == ll);
  }
}

TEST_CASE("degenerate transitions are named") {
  const ModelPtr flat = make_model({"fhn", Vec{{0.1, 1.2, 0.3, 0.0}}, 0.0});
  Mat v(4, 2);
  v << 0.1, 0.2, 0.1, 0.2, 0.1, 0.2, 0.1, 0.2;
  try {
    log_likelihood(spec(3, CorrectionVariant::full_linearisation), *flat, make_observations(v, 0.1));
    FAIL("expected a degeneracy");
  } catch (const DegeneracyError& e) {
    CHECK(std::string(e.what()).find("transition 1") != std::string::npos);
  }
}

TEST_CASE("nelder-mead on the rosenbrock function") {
  auto rosen = [](const Vec& p) { return 100 * std::pow(p[1] - p[0] * p[0], 2) + std::pow(1 - p[0], 2); };
  NelderMeadOptions o;
  o.max_evals = 5000;
  o.diameter_tol = 1e-9;
  const NelderMeadResult r = nelder_mead(rosen, Vec{{-1.2, 1.0}}, o);
  CHECK(r.converged);
  CHECK((r.argmin - Vec{{1.0, 1.0}}).norm() < 1e-6);
  CHECK(r.evals <= 5000);
}

TEST_CASE("nelder-mead treats non-finite values as rejections") {
  auto f = [](const Vec& p) { return p[0] < 0 ? std::nan("") : (p[0] - 2) * (p[0] - 2); };
  const NelderMeadResult r = nelder_mead(f, Vec{{0.0}});
  CHECK(r.argmin[0] == doctest::Approx(2.0).epsilon(1e-5));
  auto bad = [](const Vec&) { return std::numeric_limits<double>::infinity(); };
  CHECK_THROWS_AS(nelder_mead(bad, Vec{{0.0, 1.0}}), DegeneracyError);
}

TEST_CASE("ou maximum likelihood recovers the parameters") {
  const Vec truth{{1.3, 0.5, 0.4}};
  const ModelPtr ou = make_model({"ou", truth});
  const ObservationSet obs = exact_ou_chain(*ou, 0.5, 0.1, 2000, 12);
  const CorrectionSpec s = spec(5, CorrectionVariant::exact_linear);
  const MleResult r = mle_fit(s, *ou, obs, Vec{{1.0, 1.0, 1.0}}, 4000);
  CHECK(r.converged);

  // Observed information by central differences of the exact likelihood.
  auto ll = [&](const Vec& t) { return ou_exact_loglik(t[0], t[1], t[2], obs); };
  Mat hess(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double hi = 1e-4 * r.theta_hat[i], hj = 1e-4 * r.theta_hat[j];
      Vec pp = r.theta_hat, pm = r.theta_hat, mp = r.theta_hat, mm = r.theta_hat;
      pp[i] += hi, pp[j] += hj;
      pm[i] += hi, pm[j] -= hj;
      mp[i] -= hi, mp[j] += hj;
      mm[i] -= hi, mm[j] -= hj;
      hess(i, j) = (ll(pp) - ll(pm) - ll(mp) + ll(mm)) / (4 * hi * hj);
    }
  const Vec se = (-hess).inverse().diagonal().cwiseSqrt();
  for (int i = 0; i < 3; ++i) CHECK(std::abs(r.theta_hat[i] - truth[i]) < 3 * se[i]);
  CHECK(r.loglik == doctest::Approx(ll(r.theta_hat)).epsilon(1e-10));
}

TEST_CASE("mle input validation") {
  const ModelPtr m = make_model({"fhn", kTheta, 0.0});
  const Mat path = simulate_path(*m, Vec{{0.0, 0.0}}, 0.05, 20, 10, 1);
  const CorrectionSpec s = spec(3, CorrectionVariant::full_linearisation);
  CHECK_THROWS_AS(mle_fit(s, *m, make_observations(path, 0.05), Vec{{0.1, 1.2, 0.3, 0.0}}), InputError);
  CHECK_THROWS_AS(mle_fit(s, *m, make_observations(path, 0.05), Vec{{0.1, 1.2, 0.3, -0.8}}), InputError);
}
