#include "cfd/expansion.hpp"

#include <cmath>

namespace cfd {

CorrectionVariant parse_variant(const std::string& s) {
  if (s == "DE-I" || s == "full") return CorrectionVariant::full_linearisation;
  if (s == "DE-II" || s == "partial") return CorrectionVariant::partial_linearisation;
  if (s == "exact" || s == "exact-linear") return CorrectionVariant::exact_linear;
  throw InputError("unknown correction variant '" + s + "' (DE-I, DE-II, exact)");
}

std::string to_string(CorrectionVariant v) {
  switch (v) {
    case CorrectionVariant::full_linearisation: return "DE-I";
    case CorrectionVariant::partial_linearisation: return "DE-II";
    case CorrectionVariant::exact_linear: return "exact";
  }
  return "?";
}

void validate(const CorrectionSpec& spec) {
  require(spec.order_j >= 2 && spec.order_j <= 5, "order_j must be in 2..5");
  require(spec.taylor_order >= 2 && spec.taylor_order % 2 == 0, "taylor_order must be even and >= 2");
}

CorrectionVariant default_variant(const SdeModel& model) {
  switch (model.correction_family()) {
    case CorrectionFamily::fhn_full: return CorrectionVariant::full_linearisation;
    case CorrectionFamily::fhn_partial: return CorrectionVariant::partial_linearisation;
    case CorrectionFamily::exact_linear: return CorrectionVariant::exact_linear;
  }
  return CorrectionVariant::exact_linear;
}

namespace {

void check_pairing(const CorrectionSpec& spec, const SdeModel& model) {
  if (default_variant(model) != spec.variant) {
    throw InputError("correction variant " + to_string(spec.variant) + " does not match model '" +
                     model.name() + "' (expects " + to_string(default_variant(model)) + ")");
  }
}

}  // namespace

CorrectionCoefficients fhn_coefficients(const FhnModel& model, const Vec& x, double dt,
                                        const HermiteContext& ctx) {
  const auto& p = model.params();
  const double eps = p.epsilon, gam = p.gamma, sig = p.sigma;
  // The published coefficients write the second drift component's constant
  // as alpha; it is beta.
  const double alpha = p.beta;
  const double s = model.stimulus();
  const double x1 = x[0], x2 = x[1];
  const double x1_2 = x1 * x1, x1_3 = x1_2 * x1;
  const double sig2 = sig * sig, sig4 = sig2 * sig2;
  const double eps2 = eps * eps, eps3 = eps2 * eps, eps4 = eps3 * eps, eps5 = eps4 * eps;
  // u = -eps * (first drift component).
  const double u = s + x1_3 - x1 + x2;

  const double sd = std::sqrt(dt);
  const double d32 = dt * sd, d52 = d32 * dt, d72 = d52 * dt, d92 = d72 * dt;

  const double h1 = hermite_ratio(ctx, {0});
  const double h11 = hermite_ratio(ctx, {0, 0});
  const double h12 = hermite_ratio(ctx, {0, 1});
  const double h111 = hermite_ratio(ctx, {0, 0, 0});
  const double h112 = hermite_ratio(ctx, {0, 0, 1});
  const double h122 = hermite_ratio(ctx, {0, 1, 1});

  // Third-order terms shared by both variants.
  const double third = -d52 / 120.0 * (18.0 * x1 * sig4 / eps3) * h122
                       - d72 / 720.0 * (60.0 * x1 * sig4 / eps4) * h112
                       - d92 / 5040.0 * (60.0 * x1 * sig4 / eps5) * h111;

  CorrectionCoefficients c;
  if (model.linearisation_kind() == FhnLinearisation::full) {
    c.e[3] = -d32 / 6.0 * (6.0 * x1 * u * u / eps3) * h1;
    c.e[4] = -dt * dt / 24.0 * (18.0 * sig2 * x1 * u / eps3) * h12
             - dt * dt * dt / 120.0 * (24.0 * sig2 * x1 * u / eps4) * h11;
    c.e[5] = d32 / 24.0 * 6.0 *
                 ((-3.0 * x1 * eps * u * (alpha + gam * x1 - x2) + u * u * u - sig2 * x1 * eps) / eps4) * h1
             + third;
    return c;
  }

  const double h2 = hermite_ratio(ctx, {1});
  const double h22 = hermite_ratio(ctx, {1, 1});
  c.e[3] = -sd / 2.0 * (u * gam / eps) * h2
           - d32 / 6.0 * ((6.0 * x1 * u * u + 2.0 * u * gam * eps) / eps3) * h1;
  c.e[4] = -dt / 6.0 * (gam * sig2 / eps) * h22
           - dt * dt / 24.0 * (2.0 * sig2 * (9.0 * x1 * u + 2.0 * gam * eps) / eps3) * h12
           - dt * dt * dt / 120.0 * (4.0 * sig2 * (6.0 * x1 * u + gam * eps) / eps4) * h11;

  const double w = x1_3 - x1 + x2;
  const double x1_4 = x1_3 * x1, x1_5 = x1_4 * x1, x1_6 = x1_5 * x1, x1_7 = x1_6 * x1, x1_9 = x1_7 * x1_2;
  const double x2_2 = x2 * x2, x2_3 = x2_2 * x2;
  const double g =
      -3.0 / eps4 *
      (alpha * gam * eps2 - 2.0 * s * s * s - 6.0 * s * s * w +
       s * (gam * eps2 - 6.0 * w * w + 6.0 * x1 * eps * (alpha + gam * x1 - x2)) - 2.0 * x1_9 + 6.0 * x1_7 -
       6.0 * x1_6 * x2 + 6.0 * x1_5 * (gam * eps - 1.0) + 6.0 * x1_4 * (alpha * eps - x2 * (eps - 2.0)) +
       x1_3 * (gam * (eps - 6.0) * eps - 6.0 * x2_2 + 2.0) + 6.0 * x1_2 * (x2 * (gam * eps + eps - 1.0) - alpha * eps) +
       x1 * (eps * ((gam - 1.0) * gam * eps + 2.0 * sig2) - 6.0 * x2_2 * (eps - 1.0) + 6.0 * alpha * x2 * eps) -
       2.0 * x2_3);
  c.e[5] = sd / 6.0 *
               ((gam * (3.0 * x1_2 - 1.0) * u - gam * eps * (alpha + 2.0 * s + 2.0 * x1_3 + (gam - 2.0) * x1 + x2)) /
                eps2) *
               h2
           + d32 / 24.0 * g * h1 + third;
  return c;
}

double assemble_pi(const CorrectionCoefficients& e, double dt, int order_j) {
  double pi = 0.0;
  for (int k = 1; k <= order_j && k <= 5; ++k) pi += std::pow(dt, 0.5 * k) * e.e[k];
  return pi;
}

double log_taylor(double xi, int order) {
  double sum = 0.0, power = 1.0;
  for (int j = 1; j <= order; ++j) {
    power *= xi;
    sum += (j % 2 == 1 ? power : -power) / j;
  }
  return sum;
}

TransitionExpansion::TransitionExpansion(const CorrectionSpec& spec, const SdeModel& model, const Vec& x,
                                         double dt)
    : TransitionExpansion(spec, model, x, dt, ldl_moments(model, x, dt)) {}

TransitionExpansion::TransitionExpansion(const CorrectionSpec& spec, const SdeModel& model, const Vec& x,
                                         double dt, LdlMoments moments)
    : spec_(spec), x_(x), dt_(dt), moments_(std::move(moments)) {
  validate(spec);
  check_pairing(spec, model);
  if (spec.variant != CorrectionVariant::exact_linear && spec.order_j > 2) {
    fhn_ = dynamic_cast<const FhnModel&>(model);
    precision_ = hermite_precision(moments_);
  }
}

double TransitionExpansion::correction(const Vec& y) const {
  if (!fhn_) return 0.0;
  const HermiteContext ctx = hermite_context(moments_, precision_, y);
  return assemble_pi(fhn_coefficients(*fhn_, x_, dt_, ctx), dt_, spec_.order_j);
}

ExpansionResult TransitionExpansion::evaluate(const Vec& y) const {
  ExpansionResult r;
  r.log_baseline = gaussian_logpdf(moments_, y);
  r.pi = correction(y);
  r.log_proxy = r.log_baseline + log_taylor(r.pi, spec_.taylor_order);
  r.raw = std::exp(r.log_baseline) * (1.0 + r.pi);
  return r;
}

double correction_pi(const CorrectionSpec& spec, const SdeModel& model, const Vec& x, const Vec& y, double dt) {
  return TransitionExpansion(spec, model, x, dt).correction(y);
}

ExpansionResult density_proxy(const CorrectionSpec& spec, const SdeModel& model, const Vec& x, const Vec& y,
                              double dt) {
  return TransitionExpansion(spec, model, x, dt).evaluate(y);
}

}  // namespace cfd
