#pragma once

#include "cfd/core.hpp"
#include "cfd/hermite.hpp"
#include "cfd/ldl.hpp"
#include "cfd/sde_model.hpp"

#include <optional>
#include <string>

namespace cfd {

enum class CorrectionVariant {
  full_linearisation,     // DE-I
  partial_linearisation,  // DE-II
  exact_linear,
};

CorrectionVariant parse_variant(const std::string& s);  // "DE-I", "DE-II", "exact"
std::string to_string(CorrectionVariant v);

struct CorrectionSpec {
  // Highest power Delta^{J/2} kept in the correction. J = 2 is the bare
  // LDL baseline for additive-noise models.
  int order_j = 5;
  // Truncation order of log(1 + x) in the positive proxy; must be even.
  int taylor_order = 2;
  CorrectionVariant variant = CorrectionVariant::full_linearisation;
};

void validate(const CorrectionSpec& spec);

// Variant implied by a model's correction family.
CorrectionVariant default_variant(const SdeModel& model);

struct ExpansionResult {
  double log_baseline = 0.0;  // log pbar
  double pi = 0.0;            // sum_k Delta^{k/2} e_k
  double log_proxy = 0.0;     // log pbar + T_{J'}(pi)
  double raw = 0.0;           // pbar (1 + pi), may be negative
};

// Coefficients e_1..e_5 of the Delta^{k/2} expansion at one (x, y).
// e_1 = e_2 = 0 for every shipped model (additive noise).
struct CorrectionCoefficients {
  double e[6] = {0, 0, 0, 0, 0, 0};  // e[k] for k = 1..5, e[0] unused
};

// FitzHugh-Nagumo e_3..e_5 around the full (DE-I) or partial (DE-II) LDL
// Gaussian. Each e_k carries its own internal Delta powers; pi adds the
// outer Delta^{k/2}.
CorrectionCoefficients fhn_coefficients(const FhnModel& model, const Vec& x, double dt,
                                        const HermiteContext& ctx);

double assemble_pi(const CorrectionCoefficients& e, double dt, int order_j);

// Truncated series sum_{j=1}^{order} (-1)^{j+1} xi^j / j of log(1 + xi).
double log_taylor(double xi, int order);

// CF proxy for a fixed start point and step; evaluates many end points
// against one set of LDL moments.
class TransitionExpansion {
 public:
  TransitionExpansion(const CorrectionSpec& spec, const SdeModel& model, const Vec& x, double dt);
  // Reuses precomputed moments (e.g. shared with a sampler).
  TransitionExpansion(const CorrectionSpec& spec, const SdeModel& model, const Vec& x, double dt,
                      LdlMoments moments);

  double correction(const Vec& y) const;
  ExpansionResult evaluate(const Vec& y) const;

  const LdlMoments& moments() const { return moments_; }
  bool step_in_unit_interval() const { return dt_ > 0 && dt_ < 1; }

 private:
  CorrectionSpec spec_;
  std::optional<FhnModel> fhn_;
  Vec x_;
  double dt_;
  LdlMoments moments_;
  Mat precision_;
};

double correction_pi(const CorrectionSpec& spec, const SdeModel& model, const Vec& x, const Vec& y, double dt);
ExpansionResult density_proxy(const CorrectionSpec& spec, const SdeModel& model, const Vec& x, const Vec& y,
                              double dt);

}  // namespace cfd
