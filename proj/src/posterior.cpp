#include "cfd/posterior.hpp"

#include "cfd/ldl.hpp"
#include "cfd/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace cfd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

double standard_normal_logpdf(const Vec& z) {
  return -0.5 * z.squaredNorm() - kHalfLog2Pi * static_cast<double>(z.size());
}

Priors default_priors(const SdeModel& model) {
  const auto n_theta = model.theta().size();
  Priors p;
  p.log_mean = Vec::Zero(n_theta);
  p.log_sd = Vec::Ones(n_theta);
  p.x0_mean = Vec::Zero(model.dim());
  p.x0_sd = Vec::Ones(model.dim());
  if (model.dim() == 2) p.x0_sd << 0.1, 0.2;
  return p;
}

void validate(const Priors& p, const SdeModel& model) {
  require_dim(p.log_mean, model.theta().size(), "prior log_mean");
  require_dim(p.log_sd, model.theta().size(), "prior log_sd");
  require_dim(p.x0_mean, model.dim(), "prior x0_mean");
  require_dim(p.x0_sd, model.dim(), "prior x0_sd");
  require((p.log_sd.array() > 0).all() && (p.x0_sd.array() > 0).all(), "prior scales must be positive");
  require(p.log_mean.allFinite() && p.x0_mean.allFinite() && p.log_sd.allFinite() && p.x0_sd.allFinite(),
          "prior parameters must be finite");
}

AugmentedPosterior::AugmentedPosterior(const CorrectionSpec& spec, ModelPtr model, ObservationSet obs,
                                       Priors priors, int augmentation)
    : spec_(spec), model_(std::move(model)), obs_(std::move(obs)), priors_(std::move(priors)),
      augmentation_(augmentation) {
  validate(spec_);
  validate(obs_);
  validate(priors_, *model_);
  require(obs_.mode == ObservationMode::noisy_first_coordinate, "posterior needs noisy first-coordinate observations");
  require(obs_.values.cols() == 1, "noisy observations carry one value column");
  require(augmentation_ >= 1, "augmentation must be >= 1");
  dim_ = model_->dim();
  n_steps_ = static_cast<int>(obs_.n_transitions()) * augmentation_;
  h_ = obs_.step() / augmentation_;
}

ModelPtr AugmentedPosterior::model_at(const Vec& log_theta) const {
  require_dim(log_theta, n_theta(), "log theta");
  return model_->with_theta(log_theta.array().exp().matrix());
}

double AugmentedPosterior::log_prior_theta(const Vec& log_theta) const {
  const Vec z = (log_theta - priors_.log_mean).cwiseQuotient(priors_.log_sd);
  return standard_normal_logpdf(z) - priors_.log_sd.array().log().sum();
}

double AugmentedPosterior::log_obs(int j, const Vec& x) const {
  const double r = (obs_.values(j, 0) - x[0]) / obs_.noise_sd;
  return -0.5 * r * r - kHalfLog2Pi - std::log(obs_.noise_sd);
}

Vec AugmentedPosterior::initial_state(const Vec& z0) const {
  return priors_.x0_mean + priors_.x0_sd.cwiseProduct(z0);
}

double AugmentedPosterior::transition_term(const TransitionExpansion& te, const Vec& z, const Vec& y) const {
  const double pi = te.correction(y);
  return standard_normal_logpdf(z) + log_taylor(pi, spec_.taylor_order);
}

AugmentedPosterior::Step AugmentedPosterior::forward(const SdeModel& model, const Vec& x_prev,
                                                     const Vec& z) const {
  TransitionExpansion te(spec_, model, x_prev, h_);
  Step s;
  s.x = colour(te.moments(), z);
  s.term = transition_term(te, z, s.x);
  s.half_log_det = 0.5 * te.moments().log_det;
  if (!s.x.allFinite() || !std::isfinite(s.term)) throw DegeneracyError("non-finite hidden state");
  return s;
}

AugmentedPosterior::Pinned AugmentedPosterior::pinned(const SdeModel& model, const Vec& x_prev,
                                                      const Vec& x_next) const {
  return pinned(model, x_prev, x_next, ldl_moments(model, x_prev, h_));
}

AugmentedPosterior::Pinned AugmentedPosterior::pinned(const SdeModel& model, const Vec& x_prev, const Vec& x_next,
                                                      LdlMoments moments) const {
  TransitionExpansion te(spec_, model, x_prev, h_, std::move(moments));
  Pinned p;
  p.z = whiten(te.moments(), x_next);
  p.term = transition_term(te, p.z, x_next);
  p.half_log_det = 0.5 * te.moments().log_det;
  if (!std::isfinite(p.term)) throw DegeneracyError("non-finite transition term");
  return p;
}

Mat AugmentedPosterior::reconstruct(const Vec& log_theta, const Mat& latents) const {
  PathCache cache;
  if (!std::isfinite(build_cache(log_theta, latents, cache))) throw DegeneracyError("hidden path reconstruction failed");
  return cache.path;
}

Mat AugmentedPosterior::latents_of(const Vec& log_theta, const Mat& path) const {
  require(path.rows() == n_steps_ + 1 && path.cols() == dim_, "hidden path has the wrong shape");
  const ModelPtr m = model_at(log_theta);
  Mat z(n_steps_ + 1, dim_);
  z.row(0) = (path.row(0).transpose() - priors_.x0_mean).cwiseQuotient(priors_.x0_sd).transpose();
  for (int k = 1; k <= n_steps_; ++k) {
    const LdlMoments mo = ldl_moments(*m, path.row(k - 1).transpose(), h_);
    z.row(k) = whiten(mo, path.row(k).transpose()).transpose();
  }
  return z;
}

double AugmentedPosterior::build_cache(const Vec& log_theta, const Mat& latents, PathCache& c) const {
  require(latents.rows() == n_steps_ + 1 && latents.cols() == dim_, "latents have the wrong shape");
  const auto n = static_cast<std::size_t>(n_steps_ + 1);
  c.path.resize(n_steps_ + 1, dim_);
  c.term.assign(n, 0.0);
  c.half_log_det.assign(n, 0.0);
  c.obs.assign(static_cast<std::size_t>(obs_.times.size()), 0.0);
  try {
    const ModelPtr m = model_at(log_theta);
    c.log_prior = log_prior_theta(log_theta);
    const Vec z0 = latents.row(0).transpose();
    c.path.row(0) = initial_state(z0).transpose();
    c.term[0] = standard_normal_logpdf(z0);
    for (int k = 1; k <= n_steps_; ++k) {
      const Step s = forward(*m, c.path.row(k - 1).transpose(), latents.row(k).transpose());
      c.path.row(k) = s.x.transpose();
      c.term[k] = s.term;
      c.half_log_det[k] = s.half_log_det;
    }
    for (int j = 0; j < obs_.times.size(); ++j) c.obs[j] = log_obs(j, c.path.row(j * augmentation_).transpose());
  } catch (const DegeneracyError&) {
    return kNegInf;
  } catch (const InputError&) {
    return kNegInf;
  }
  const double t = total(c);
  return std::isfinite(t) ? t : kNegInf;
}

double AugmentedPosterior::build_cache_centred(const Vec& log_theta, const Mat& path, Mat& latents,
                                               PathCache& c) const {
  const auto n = static_cast<std::size_t>(n_steps_ + 1);
  c.path = path;
  c.term.assign(n, 0.0);
  c.half_log_det.assign(n, 0.0);
  c.obs.assign(static_cast<std::size_t>(obs_.times.size()), 0.0);
  latents.resize(n_steps_ + 1, dim_);
  try {
    const ModelPtr m = model_at(log_theta);
    c.log_prior = log_prior_theta(log_theta);
    const Vec z0 = (path.row(0).transpose() - priors_.x0_mean).cwiseQuotient(priors_.x0_sd);
    latents.row(0) = z0.transpose();
    c.term[0] = standard_normal_logpdf(z0);
    for (int k = 1; k <= n_steps_; ++k) {
      const Pinned p = pinned(*m, path.row(k - 1).transpose(), path.row(k).transpose());
      latents.row(k) = p.z.transpose();
      c.term[k] = p.term;
      c.half_log_det[k] = p.half_log_det;
    }
    for (int j = 0; j < obs_.times.size(); ++j) c.obs[j] = log_obs(j, path.row(j * augmentation_).transpose());
  } catch (const DegeneracyError&) {
    return kNegInf;
  } catch (const InputError&) {
    return kNegInf;
  }
  const double t = total_centred(c);
  return std::isfinite(t) ? t : kNegInf;
}

double AugmentedPosterior::total(const PathCache& c) const {
  return pairwise_sum(c.term) + pairwise_sum(c.obs) + c.log_prior;
}

double AugmentedPosterior::total_centred(const PathCache& c) const { return total(c) - pairwise_sum(c.half_log_det); }

double AugmentedPosterior::log_posterior(const Vec& log_theta, const Mat& latents) const {
  PathCache cache;
  return build_cache(log_theta, latents, cache);
}

}  // namespace cfd
