#include "cfd/sde_model.hpp"

#include <cmath>

namespace cfd {

namespace {

void check_state(const SdeModel& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.dim()) {
    throw InputError(m.name() + ": state has length " + std::to_string(x.size()) +
                     ", expected " + std::to_string(m.dim()));
  }
}

std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<size_t>(v.size())}; }
std::span<double> as_span(Mat& m) { return {m.data(), static_cast<size_t>(m.size())}; }

}  // namespace

Vec SdeModel::drift(const Vec& x) const {
  check_state(*this, as_span(x));
  Vec out(dim());
  eval_drift(as_span(x), {out.data(), static_cast<size_t>(out.size())});
  return out;
}

Mat SdeModel::diffusion(const Vec& x) const {
  check_state(*this, as_span(x));
  Mat out(dim(), n_noise());
  eval_diffusion(as_span(x), as_span(out));
  return out;
}

Mat SdeModel::drift_jacobian(const Vec& x) const {
  check_state(*this, as_span(x));
  Mat out(dim(), dim());
  eval_drift_jacobian(as_span(x), as_span(out));
  return out;
}

Mat SdeModel::linearisation(const Vec& x) const {
  check_state(*this, as_span(x));
  Mat out(dim(), dim());
  eval_linearisation(as_span(x), as_span(out));
  return out;
}

// ---------------------------------------------------------------- FHN

FhnModel::FhnModel(FhnParams params, double stimulus, FhnLinearisation lin)
    : params_(params), stimulus_(stimulus), lin_(lin) {
  require(std::isfinite(params.epsilon) && params.epsilon > 0, "fhn: epsilon must be > 0");
  require(std::isfinite(params.sigma) && params.sigma >= 0, "fhn: sigma must be >= 0");
  require(std::isfinite(params.gamma) && std::isfinite(params.beta) && std::isfinite(stimulus),
          "fhn: non-finite parameter");
}

std::string FhnModel::name() const { return lin_ == FhnLinearisation::full ? "fhn" : "fhn-partial"; }

Vec FhnModel::theta() const {
  return Vec{{params_.epsilon, params_.gamma, params_.beta, params_.sigma}};
}

std::vector<std::string> FhnModel::theta_names() const { return {"epsilon", "gamma", "beta", "sigma"}; }

ModelPtr FhnModel::with_theta(const Vec& theta) const {
  require_dim(theta, 4, "fhn theta");
  return std::make_shared<FhnModel>(FhnParams{theta[0], theta[1], theta[2], theta[3]}, stimulus_, lin_);
}

CorrectionFamily FhnModel::correction_family() const {
  return lin_ == FhnLinearisation::full ? CorrectionFamily::fhn_full : CorrectionFamily::fhn_partial;
}

void FhnModel::eval_drift(std::span<const double> x, std::span<double> out) const {
  const double v = x[0], u = x[1];
  out[0] = (v - v * v * v - u - stimulus_) / params_.epsilon;
  out[1] = params_.gamma * v - u + params_.beta;
}

void FhnModel::eval_diffusion(std::span<const double>, std::span<double> out) const {
  out[0] = 0.0;
  out[1] = params_.sigma;
}

void FhnModel::eval_drift_jacobian(std::span<const double> x, std::span<double> out) const {
  const double inv_eps = 1.0 / params_.epsilon;
  out[0] = (1.0 - 3.0 * x[0] * x[0]) * inv_eps;
  out[1] = params_.gamma;
  out[2] = -inv_eps;
  out[3] = -1.0;
}

void FhnModel::eval_linearisation(std::span<const double> x, std::span<double> out) const {
  eval_drift_jacobian(x, out);
  if (lin_ == FhnLinearisation::partial) out[1] = 0.0;
}

// ---------------------------------------------------------------- Langevin

LangevinModel::LangevinModel(double alpha, double sigma, double stiffness)
    : alpha_(alpha), sigma_(sigma), stiffness_(stiffness) {
  require(std::isfinite(alpha) && std::isfinite(sigma) && std::isfinite(stiffness),
          "langevin: non-finite parameter");
  require(sigma >= 0, "langevin: sigma must be >= 0");
}

Vec LangevinModel::theta() const { return Vec{{alpha_, sigma_}}; }

std::vector<std::string> LangevinModel::theta_names() const { return {"alpha", "sigma"}; }

ModelPtr LangevinModel::with_theta(const Vec& theta) const {
  require_dim(theta, 2, "langevin theta");
  return std::make_shared<LangevinModel>(theta[0], theta[1], stiffness_);
}

void LangevinModel::eval_drift(std::span<const double> x, std::span<double> out) const {
  out[0] = x[1];
  out[1] = -stiffness_ * x[0] - alpha_ * x[1];
}

void LangevinModel::eval_diffusion(std::span<const double>, std::span<double> out) const {
  out[0] = 0.0;
  out[1] = sigma_;
}

void LangevinModel::eval_drift_jacobian(std::span<const double>, std::span<double> out) const {
  out[0] = 0.0;
  out[1] = -stiffness_;
  out[2] = 1.0;
  out[3] = -alpha_;
}

// ---------------------------------------------------------------- linear

LinearModel::LinearModel(Mat a, Vec b, Mat sigma)
    : a_(std::move(a)), b_(std::move(b)), sigma_(std::move(sigma)), n_smooth_(0) {
  require(a_.rows() == a_.cols() && a_.rows() > 0, "linear: A must be square and non-empty");
  require(b_.size() == a_.rows(), "linear: b length must match A");
  require(sigma_.rows() == a_.rows() && sigma_.cols() > 0, "linear: Sigma must be N x d");
  require(a_.allFinite() && b_.allFinite() && sigma_.allFinite(), "linear: non-finite coefficient");
  while (n_smooth_ < sigma_.rows() && sigma_.row(n_smooth_).isZero(0.0)) ++n_smooth_;
  if (n_smooth_ == sigma_.rows()) n_smooth_ = 0;  // noiseless: not a diffusion, report class E
}

Vec LinearModel::theta() const {
  const Eigen::Index n = a_.rows(), d = sigma_.cols();
  Vec t(n * n + n + n * d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) t[k++] = a_(i, j);
  for (Eigen::Index i = 0; i < n; ++i) t[k++] = b_[i];
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) t[k++] = sigma_(i, j);
  return t;
}

std::vector<std::string> LinearModel::theta_names() const {
  const Eigen::Index n = a_.rows(), d = sigma_.cols();
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) names.push_back("A" + std::to_string(i + 1) + std::to_string(j + 1));
  for (Eigen::Index i = 0; i < n; ++i) names.push_back("b" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      names.push_back("sigma" + std::to_string(i + 1) + std::to_string(j + 1));
  return names;
}

ModelPtr LinearModel::with_theta(const Vec& theta) const {
  const Eigen::Index n = a_.rows(), d = sigma_.cols();
  require_dim(theta, n * n + n + n * d, "linear theta");
  Mat a(n, n), s(n, d);
  Vec b(n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = theta[k++];
  for (Eigen::Index i = 0; i < n; ++i) b[i] = theta[k++];
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) s(i, j) = theta[k++];
  return std::make_shared<LinearModel>(std::move(a), std::move(b), std::move(s));
}

void LinearModel::eval_drift(std::span<const double> x, std::span<double> out) const {
  Eigen::Map<const Vec> xv(x.data(), dim());
  Eigen::Map<Vec> o(out.data(), dim());
  o.noalias() = a_ * xv + b_;
}

void LinearModel::eval_diffusion(std::span<const double>, std::span<double> out) const {
  Eigen::Map<Mat>(out.data(), sigma_.rows(), sigma_.cols()) = sigma_;
}

void LinearModel::eval_drift_jacobian(std::span<const double>, std::span<double> out) const {
  Eigen::Map<Mat>(out.data(), a_.rows(), a_.cols()) = a_;
}

// ---------------------------------------------------------------- OU

OuModel::OuModel(double kappa, double mean, double sigma) : kappa_(kappa), mean_(mean), sigma_(sigma) {
  require(std::isfinite(kappa) && std::isfinite(mean) && std::isfinite(sigma), "ou: non-finite parameter");
  require(sigma >= 0, "ou: sigma must be >= 0");
}

Vec OuModel::theta() const { return Vec{{kappa_, mean_, sigma_}}; }

std::vector<std::string> OuModel::theta_names() const { return {"kappa", "mean", "sigma"}; }

ModelPtr OuModel::with_theta(const Vec& theta) const {
  require_dim(theta, 3, "ou theta");
  return std::make_shared<OuModel>(theta[0], theta[1], theta[2]);
}

void OuModel::eval_drift(std::span<const double> x, std::span<double> out) const {
  out[0] = kappa_ * (mean_ - x[0]);
}

void OuModel::eval_diffusion(std::span<const double>, std::span<double> out) const { out[0] = sigma_; }

void OuModel::eval_drift_jacobian(std::span<const double>, std::span<double> out) const { out[0] = -kappa_; }

// ---------------------------------------------------------------- factory

ModelPtr make_model(const ModelSpec& spec) {
  const Vec& t = spec.theta;
  if (spec.name == "fhn" || spec.name == "fhn-partial") {
    require_dim(t, 4, "fhn theta (epsilon, gamma, beta, sigma)");
    return std::make_shared<FhnModel>(FhnParams{t[0], t[1], t[2], t[3]}, spec.stimulus,
                                      spec.name == "fhn" ? FhnLinearisation::full : FhnLinearisation::partial);
  }
  if (spec.name == "langevin") {
    require_dim(t, 2, "langevin theta (alpha, sigma)");
    return std::make_shared<LangevinModel>(t[0], t[1], spec.stiffness);
  }
  if (spec.name == "ou") {
    require_dim(t, 3, "ou theta (kappa, mean, sigma)");
    return std::make_shared<OuModel>(t[0], t[1], t[2]);
  }
  if (spec.name == "linear") {
    require(spec.dim > 0 && spec.n_noise > 0, "linear: dim and n_noise must be positive");
    const int n = spec.dim, d = spec.n_noise;
    LinearModel proto(Mat::Zero(n, n), Vec::Zero(n), Mat::Identity(n, d));
    return proto.with_theta(t);
  }
  throw InputError("unknown model '" + spec.name + "'");
}

// ---------------------------------------------------------------- Hormander

namespace {

int numerical_rank(const Mat& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  if (!(smax > 0)) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > rel_tol * smax) ++r;
  return r;
}

// Jacobian of column j of sigma, central differences.
Mat diffusion_column_jacobian(const SdeModel& model, const Vec& x, int j) {
  const int n = model.dim();
  Mat jac(n, n);
  for (int k = 0; k < n; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    jac.col(k) = (model.diffusion(xp).col(j) - model.diffusion(xm).col(j)) / (2 * h);
  }
  return jac;
}

}  // namespace

HormanderReport check_hormander(const SdeModel& model, const Vec& x, double rel_tol) {
  require_dim(x, model.dim(), "check_hormander state");
  const int n = model.dim(), d = model.n_noise(), ns = model.n_smooth();
  const Mat sigma = model.diffusion(x);

  HormanderReport rep;
  rep.rank_rough = numerical_rank(sigma.bottomRows(n - ns), rel_tol);
  if (ns == 0) {
    rep.rank_full = numerical_rank(sigma, rel_tol);
    rep.satisfied = rep.rank_full == n;
    return rep;
  }

  std::vector<Mat> dsigma;
  Vec v0t = model.drift(x);
  Mat dv0t = model.drift_jacobian(x);
  if (!model.additive_noise()) {
    for (int j = 0; j < d; ++j) {
      dsigma.push_back(diffusion_column_jacobian(model, x, j));
      v0t -= 0.5 * dsigma.back() * sigma.col(j);
    }
    // Jacobian of the Stratonovich correction, by differencing the corrected drift.
    for (int k = 0; k < n; ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[k]));
      auto corrected = [&](const Vec& p) {
        Vec v = model.drift(p);
        const Mat s = model.diffusion(p);
        for (int j = 0; j < d; ++j) v -= 0.5 * diffusion_column_jacobian(model, p, j) * s.col(j);
        return v;
      };
      Vec xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      dv0t.col(k) = (corrected(xp) - corrected(xm)) / (2 * h);
    }
  }

  Mat span(n, 2 * d);
  for (int j = 0; j < d; ++j) {
    span.col(j) = sigma.col(j);
    Vec bracket = -dv0t * sigma.col(j);
    if (!model.additive_noise()) bracket += dsigma[j] * v0t;
    span.col(d + j) = bracket;
  }
  rep.rank_full = numerical_rank(span, rel_tol);
  rep.satisfied = rep.rank_rough == n - ns && rep.rank_full == n;
  return rep;
}

}  // namespace cfd
