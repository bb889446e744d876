#include "cfd/mcmc.hpp"

#include "cfd/parallel.hpp"
#include "cfd/random.hpp"

#include <Eigen/SparseCholesky>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>

namespace cfd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kStartupDraws = 100;

struct Adapter {
  double log_scale;
  int n = 0;
  void update(double accept_prob, double target) {
    ++n;
    log_scale += std::pow(static_cast<double>(n), -0.6) * (accept_prob - target);
    log_scale = std::clamp(log_scale, -12.0, 3.0);
  }
  double scale() const { return std::exp(log_scale); }
};

// Welford mean / covariance of log theta during warmup.
struct RunningCov {
  Vec mean;
  Mat m2;
  int n = 0;
  explicit RunningCov(int d) : mean(Vec::Zero(d)), m2(Mat::Zero(d, d)) {}
  void add(const Vec& x) {
    ++n;
    const Vec delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean).transpose();
  }
  Mat cov() const { return m2 / std::max(1, n - 1); }
};

Vec normal_vec(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  Vec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
  return z;
}

bool accept(Rng& rng, double log_ratio) {
  if (std::isnan(log_ratio)) return false;
  return log_ratio >= 0 || std::log(rng.uniform()) < log_ratio;
}

double accept_prob(double log_ratio) {
  if (std::isnan(log_ratio)) return 0.0;
  return log_ratio >= 0 ? 1.0 : std::exp(log_ratio);
}

// Gaussian in information form over a window of hidden states, built by
// linearising each transition mean around a reference path.
struct BlockGaussian {
  Vec mean;
  Mat chol;  // lower factor of the precision
  double log_norm = 0.0;

  double logpdf(const Vec& x) const {
    const Vec w = chol.transpose() * (x - mean);
    return log_norm - 0.5 * w.squaredNorm();
  }
  Vec sample(Rng& rng) const {
    return mean + chol.transpose().triangularView<Eigen::Upper>().solve(normal_vec(rng, mean.size()));
  }
};

struct WindowFrame {
  const AugmentedPosterior& post;
  int a, b;
  const LdlMoments* into_first;  // transition into X_a, null when a == 0
  const Vec* x_after;            // fixed X_{b+1}, null when b == n
};

// ref rows are X_a..X_b and ref_m[i] the moments started at ref row i.
BlockGaussian block_gaussian(const WindowFrame& f, const Mat& ref, const std::vector<LdlMoments>& ref_m) {
  const int dim = f.post.dim();
  const int len = f.b - f.a + 1;
  const int d = dim * len;
  Mat prec = Mat::Zero(d, d);
  Vec lin = Vec::Zero(d);
  const Mat id = Mat::Identity(dim, dim);

  // Factor w = c + B_prev X_{i-1} + B_cur X_i ~ N(0, S) with S = L L^T.
  auto add = [&](int i_prev, const Mat* b_prev, int i_cur, const Mat* b_cur, const Vec& c, const Mat& chol) {
    const auto lt = chol.triangularView<Eigen::Lower>();
    const Vec wc = lt.solve(c);
    Mat wp, wq;
    if (b_prev) wp = lt.solve(*b_prev);
    if (b_cur) wq = lt.solve(*b_cur);
    if (b_prev) {
      prec.block(i_prev * dim, i_prev * dim, dim, dim) += wp.transpose() * wp;
      lin.segment(i_prev * dim, dim) -= wp.transpose() * wc;
    }
    if (b_cur) {
      prec.block(i_cur * dim, i_cur * dim, dim, dim) += wq.transpose() * wq;
      lin.segment(i_cur * dim, dim) -= wq.transpose() * wc;
    }
    if (b_prev && b_cur) {
      const Mat cross = wp.transpose() * wq;
      prec.block(i_prev * dim, i_cur * dim, dim, dim) += cross;
      prec.block(i_cur * dim, i_prev * dim, dim, dim) += cross.transpose();
    }
  };

  if (f.a == 0) {
    const Mat chol = f.post.priors().x0_sd.asDiagonal();
    add(0, nullptr, 0, &id, -f.post.priors().x0_mean, chol);
  } else {
    add(0, nullptr, 0, &id, -f.into_first->mean, f.into_first->chol);
  }
  for (int i = 1; i < len; ++i) {
    const LdlMoments& m = ref_m[i - 1];
    const Mat neg_t = -m.transition;
    const Vec c = -(m.mean - m.transition * ref.row(i - 1).transpose());
    add(i - 1, &neg_t, i, &id, c, m.chol);
  }
  if (f.x_after) {
    const LdlMoments& m = ref_m[len - 1];
    const Mat neg_t = -m.transition;
    const Vec c = *f.x_after - m.mean + m.transition * ref.row(len - 1).transpose();
    add(len - 1, &neg_t, len - 1, nullptr, c, m.chol);
  }
  const double noise = f.post.observations().noise_sd;
  for (int i = 0; i < len; ++i) {
    const int k = f.a + i;
    if (!f.post.observed(k)) continue;
    const double y = f.post.observations().values(k / f.post.augmentation(), 0);
    prec(i * dim, i * dim) += 1.0 / (noise * noise);
    lin[i * dim] += y / (noise * noise);
  }

  Eigen::LLT<Mat> llt(prec);
  if (llt.info() != Eigen::Success) throw DegeneracyError("window proposal precision is not positive definite");
  BlockGaussian g;
  g.chol = llt.matrixL();
  g.mean = llt.solve(lin);
  g.log_norm = g.chol.diagonal().array().log().sum() - 0.5 * d * std::log(2.0 * std::numbers::pi);
  return g;
}

// Gaussian over the whole hidden path (row-major flattening), built by
// Gauss-Newton iterations on the baseline-only target.
struct PathGaussian {
  Vec mean;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::NaturalOrdering<int>> llt;
  double log_norm = 0.0;

  double logpdf(const Vec& x) const {
    const Vec w = llt.matrixU() * (x - mean);
    return log_norm - 0.5 * w.squaredNorm();
  }
  Vec sample(Rng& rng) const { return mean + llt.matrixU().solve(normal_vec(rng, mean.size())); }
};

Vec flatten_path(const Mat& path) { return Eigen::Map<const Vec>(Mat(path.transpose()).data(), path.size()); }

Mat unflatten_path(const Vec& v, int dim) {
  return Eigen::Map<const Mat>(v.data(), dim, v.size() / dim).transpose();
}

void path_gaussian(const AugmentedPosterior& post, const SdeModel& model, Mat ref, int iterations, PathGaussian& g) {
  const int dim = post.dim();
  const int n = post.n_steps();
  const int d = dim * (n + 1);
  const double h = post.fine_step();
  const double noise = post.observations().noise_sd;
  const Mat id = Mat::Identity(dim, dim);
  for (int iter = 0; iter < std::max(iterations, 1); ++iter) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n + 1) * dim * dim * 3);
    Vec lin = Vec::Zero(d);
    auto put = [&](int r0, int c0, const Mat& blk) {
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          if (r0 + i >= c0 + j) trip.emplace_back(r0 + i, c0 + j, blk(i, j));
    };
    const Vec sd = post.priors().x0_sd;
    const Vec p0 = sd.array().square().inverse().matrix();
    put(0, 0, p0.asDiagonal().toDenseMatrix());
    lin.head(dim) += p0.cwiseProduct(post.priors().x0_mean);
    for (int k = 1; k <= n; ++k) {
      const Vec r = ref.row(k - 1).transpose();
      const LdlMoments m = ldl_moments(model, r, h);
      Mat jac(dim, dim);
      for (int c = 0; c < dim; ++c) {
        Vec rp = r;
        const double step = 1e-6 * (1.0 + std::abs(r[c]));
        rp[c] += step;
        jac.col(c) = (ldl_moments(model, rp, h).mean - m.mean) / step;
      }
      const auto lt = m.chol.triangularView<Eigen::Lower>();
      const Mat wq = lt.solve(id);
      const Mat wp = -(lt.solve(jac));
      const Vec wc = -(lt.solve(Vec(m.mean - jac * r)));
      put((k - 1) * dim, (k - 1) * dim, wp.transpose() * wp);
      put(k * dim, k * dim, wq.transpose() * wq);
      put(k * dim, (k - 1) * dim, wq.transpose() * wp);
      lin.segment((k - 1) * dim, dim) -= wp.transpose() * wc;
      lin.segment(k * dim, dim) -= wq.transpose() * wc;
    }
    for (int j = 0; j < post.observations().times.size(); ++j) {
      const int k = j * post.augmentation();
      trip.emplace_back(k * dim, k * dim, 1.0 / (noise * noise));
      lin[k * dim] += post.observations().values(j, 0) / (noise * noise);
    }
    Eigen::SparseMatrix<double> prec(d, d);
    prec.setFromTriplets(trip.begin(), trip.end());
    g.llt.compute(prec);
    if (g.llt.info() != Eigen::Success) throw DegeneracyError("path proposal precision is not positive definite");
    g.mean = g.llt.solve(lin);
    if (!g.mean.allFinite()) throw DegeneracyError("path proposal mean is not finite");
    ref = unflatten_path(g.mean, dim);
  }
  const Eigen::SparseMatrix<double> l = g.llt.matrixL();
  g.log_norm = l.diagonal().array().log().sum() - 0.5 * d * std::log(2.0 * std::numbers::pi);
}

class Chain {
 public:
  Chain(const AugmentedPosterior& post, const McmcOptions& opts, int id)
      : post_(post), opts_(opts), rng_(Rng::stream(opts.seed, static_cast<std::uint64_t>(id))),
        nc_{std::log(0.1)}, c_{std::log(0.1)}, lat_{std::log(0.3)}, joint_{std::log(0.5)}, cov_(post.n_theta()) {
    const int d = post.n_theta();
    prop_chol_ = Mat::Identity(d, d) * (2.38 / std::sqrt(static_cast<double>(d)));
  }

  ChainRecord run() {
    ChainRecord rec;
    rec.startup_redraws = initialise();
    const int d = post_.n_theta();
    rec.theta.resize(opts_.n_iters, d);
    rec.log_post.resize(opts_.n_iters);
    long acc_nc = 0, acc_c = 0, acc_lat = 0, tried_lat = 0, acc_joint = 0;
    for (int it = 0; it < opts_.n_warmup + opts_.n_iters; ++it) {
      const bool warm = it < opts_.n_warmup;
      if (opts_.joint_moves) acc_joint += joint_move(warm);
      acc_nc += theta_noncentred(warm);
      if (opts_.centred_theta_moves) acc_c += theta_centred(warm);
      const auto [a, t] = latent_sweep(warm);
      acc_lat += a;
      tried_lat += t;
      if (warm) {
        if (it >= opts_.n_warmup / 4) cov_.add(log_theta_);
        if (cov_.n >= 100 && (it + 1) % 50 == 0) refresh_proposal();
        if (it + 1 == opts_.n_warmup) {
          rec.scales_after_warmup = scales();
          acc_nc = acc_c = acc_lat = tried_lat = acc_joint = 0;
        }
      } else {
        const int k = it - opts_.n_warmup;
        rec.theta.row(k) = log_theta_.array().exp().matrix().transpose();
        rec.log_post[k] = log_post_;
      }
    }
    if (opts_.n_warmup == 0) rec.scales_after_warmup = scales();
    rec.scales_final = scales();
    rec.accept_theta_noncentred = static_cast<double>(acc_nc) / opts_.n_iters;
    rec.accept_theta_centred = static_cast<double>(acc_c) / opts_.n_iters;
    rec.accept_joint = static_cast<double>(acc_joint) / opts_.n_iters;
    rec.accept_latent = tried_lat ? static_cast<double>(acc_lat) / tried_lat : 0.0;
    rec.final_latents = latents_;
    rec.theta_proposal_cov = prop_chol_ * prop_chol_.transpose();
    return rec;
  }

 private:
  StepScales scales() const { return {nc_.scale(), c_.scale(), lat_.scale(), joint_.scale()}; }

  int initialise() {
    const Vec base = opts_.init_log_theta ? *opts_.init_log_theta : Vec(Vec::Zero(post_.n_theta()));
    require_dim(base, post_.n_theta(), "mcmc initial log theta");
    for (int attempt = 0; attempt <= kStartupDraws; ++attempt) {
      log_theta_ = attempt == 0 ? base : Vec(base + 0.1 * normal_vec(rng_, base.size()));
      try {
        Mat path = opts_.init_path ? *opts_.init_path : initial_path_guess(post_, log_theta_);
        if (attempt > 0) path += 1e-3 * Mat::NullaryExpr(path.rows(), path.cols(), [&] { return normal_vec(rng_, 1)[0]; });
        latents_ = post_.latents_of(log_theta_, path);
        log_post_ = post_.build_cache(log_theta_, latents_, cache_);
      } catch (const DegeneracyError&) {
        log_post_ = kNegInf;
      }
      if (std::isfinite(log_post_)) return attempt;
    }
    throw DegeneracyError("mcmc: non-finite initial posterior after " + std::to_string(kStartupDraws) +
                          " re-draws");
  }

  void refresh_proposal() {
    const int d = post_.n_theta();
    const Mat cov = cov_.cov() + 1e-8 * Mat::Identity(d, d);
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() == Eigen::Success) prop_chol_ = Mat(llt.matrixL()) * (2.38 / std::sqrt(static_cast<double>(d)));
  }

  Vec propose_theta(double scale) { return log_theta_ + scale * prop_chol_ * normal_vec(rng_, log_theta_.size()); }

  // Gaussian fit of p(path | theta, Y) started from a reference that depends
  // on theta only, so the map below is a bijection.
  void fit_path_gaussian(const Vec& log_theta, PathGaussian& g) const {
    const ModelPtr m = post_.model_at(log_theta);
    path_gaussian(post_, *m, initial_path_guess(post_, log_theta), opts_.laplace_iterations, g);
  }

  // theta' by random walk; the path keeps its whitened residual under the
  // Gaussian fits: x' = m' + U'^{-1} U (x - m).
  int joint_move(bool warm) {
    const Vec prop = propose_theta(joint_.scale());
    double r = kNegInf;
    PathCache cache;
    Mat lat;
    auto g_new = std::make_unique<PathGaussian>();
    try {
      if (!cur_gauss_) {
        cur_gauss_ = std::make_unique<PathGaussian>();
        fit_path_gaussian(log_theta_, *cur_gauss_);
      }
      fit_path_gaussian(prop, *g_new);
      const Vec w = cur_gauss_->llt.matrixU() * (flatten_path(cache_.path) - cur_gauss_->mean);
      const Vec x_new = g_new->mean + g_new->llt.matrixU().solve(w);
      const double lt = post_.build_cache_centred(prop, unflatten_path(x_new, post_.dim()), lat, cache);
      r = lt - post_.total_centred(cache_) + cur_gauss_->log_norm - g_new->log_norm;
    } catch (const DegeneracyError&) {
      r = kNegInf;
    } catch (const InputError&) {
      r = kNegInf;
    }
    if (warm) joint_.update(accept_prob(r), opts_.target_accept);
    if (!std::isfinite(r) || !accept(rng_, r)) return 0;
    log_theta_ = prop;
    cur_gauss_ = std::move(g_new);
    cache_ = std::move(cache);
    latents_ = std::move(lat);
    log_post_ = post_.total(cache_);
    return 1;
  }

  int theta_noncentred(bool warm) {
    const Vec prop = propose_theta(nc_.scale());
    PathCache cache;
    const double lp = post_.build_cache(prop, latents_, cache);
    const double r = lp - log_post_;
    if (warm) nc_.update(accept_prob(r), opts_.target_accept);
    if (!std::isfinite(lp) || !accept(rng_, r)) return 0;
    log_theta_ = prop;
    cur_gauss_.reset();
    cache_ = std::move(cache);
    log_post_ = lp;
    return 1;
  }

  int theta_centred(bool warm) {
    const Vec prop = propose_theta(c_.scale());
    PathCache cache;
    Mat lat;
    const double lt = post_.build_cache_centred(prop, cache_.path, lat, cache);
    const double r = lt - post_.total_centred(cache_);
    if (warm) c_.update(accept_prob(r), opts_.target_accept);
    if (!std::isfinite(lt) || !accept(rng_, r)) return 0;
    log_theta_ = prop;
    cur_gauss_.reset();
    cache_ = std::move(cache);
    latents_ = std::move(lat);
    log_post_ = post_.total(cache_);
    return 1;
  }

  std::pair<int, int> latent_sweep(bool warm) {
    const int n = post_.n_steps();
    const ModelPtr model = post_.model_at(log_theta_);
    int accepted = 0, tried = 0;
    for (int a = 0; a <= n; a += opts_.stride) {
      const int b = std::min(a + opts_.window - 1, n);
      ++tried;
      accepted += opts_.latent_move == LatentMove::gaussian ? gaussian_move(*model, a, b)
                                                            : window_move(*model, a, b, warm);
      if (b == n) break;
    }
    log_post_ = post_.total(cache_);
    return {accepted, tried};
  }

  int window_move(const SdeModel& model, int a, int b, bool warm) {
    const int dim = post_.dim();
    const int len = b - a + 1;
    const double s = lat_.scale();
    Mat z = latents_.middleRows(a, len);
    for (int i = 0; i < len; ++i) z.row(i) += s * normal_vec(rng_, dim).transpose();

    Mat path(len, dim);
    std::vector<double> term(len), hld(len);
    double delta = 0.0;
    AugmentedPosterior::Pinned pin;
    try {
      for (int i = 0; i < len; ++i) {
        const int k = a + i;
        if (k == 0) {
          path.row(0) = post_.initial_state(z.row(0).transpose()).transpose();
          term[0] = standard_normal_logpdf(z.row(0).transpose());
          hld[0] = 0.0;
        } else {
          const Vec prev = i == 0 ? Vec(cache_.path.row(k - 1).transpose()) : Vec(path.row(i - 1).transpose());
          const auto st = post_.forward(model, prev, z.row(i).transpose());
          path.row(i) = st.x.transpose();
          term[i] = st.term;
          hld[i] = st.half_log_det;
        }
        delta += term[i] - cache_.term[k];
        if (post_.observed(k)) {
          const int j = k / post_.augmentation();
          delta += post_.log_obs(j, path.row(i).transpose()) - cache_.obs[j];
        }
      }
      if (b < post_.n_steps()) {
        pin = post_.pinned(model, path.row(len - 1).transpose(), cache_.path.row(b + 1).transpose());
        delta += (pin.term - pin.half_log_det) - (cache_.term[b + 1] - cache_.half_log_det[b + 1]);
      }
    } catch (const DegeneracyError&) {
      delta = kNegInf;
    }
    if (warm) lat_.update(accept_prob(delta), opts_.target_accept);
    if (!std::isfinite(delta) || !accept(rng_, delta)) return 0;

    latents_.middleRows(a, len) = z;
    cache_.path.middleRows(a, len) = path;
    for (int i = 0; i < len; ++i) {
      const int k = a + i;
      cache_.term[k] = term[i];
      cache_.half_log_det[k] = hld[i];
      if (post_.observed(k)) {
        const int j = k / post_.augmentation();
        cache_.obs[j] = post_.log_obs(j, path.row(i).transpose());
      }
    }
    if (b < post_.n_steps()) {
      latents_.row(b + 1) = pin.z.transpose();
      cache_.term[b + 1] = pin.term;
      cache_.half_log_det[b + 1] = pin.half_log_det;
    }
    return 1;
  }

  // Metropolis-Hastings block move on X_a..X_b (X-coordinates) with
  // X_{a-1} and X_{b+1} held fixed; latents are re-derived on acceptance.
  int gaussian_move(const SdeModel& model, int a, int b) {
    const int n = post_.n_steps();
    const int len = b - a + 1;
    const double h = post_.fine_step();
    const Mat cur = cache_.path.middleRows(a, len);
    double delta = 0.0;
    Mat prop;
    std::vector<AugmentedPosterior::Pinned> pins(static_cast<std::size_t>(len + 1));
    try {
      std::optional<LdlMoments> first;
      if (a > 0) first = ldl_moments(model, cache_.path.row(a - 1).transpose(), h);
      const Vec after = b < n ? Vec(cache_.path.row(b + 1).transpose()) : Vec();
      const WindowFrame frame{post_, a, b, first ? &*first : nullptr, b < n ? &after : nullptr};

      std::vector<LdlMoments> cur_m, prop_m;
      for (int i = 0; i < len; ++i) cur_m.push_back(ldl_moments(model, cur.row(i).transpose(), h));
      const BlockGaussian fwd = block_gaussian(frame, cur, cur_m);
      const Vec flat = fwd.sample(rng_);
      prop = Eigen::Map<const Mat>(flat.data(), post_.dim(), len).transpose();
      for (int i = 0; i < len; ++i) prop_m.push_back(ldl_moments(model, prop.row(i).transpose(), h));
      const BlockGaussian rev = block_gaussian(frame, prop, prop_m);
      const Vec cur_flat = Eigen::Map<const Vec>(Mat(cur.transpose()).data(), cur.size());
      delta = rev.logpdf(cur_flat) - fwd.logpdf(flat);

      for (int i = 0; i <= len; ++i) {
        const int k = a + i;
        if (k > n) break;
        const Vec x = i < len ? Vec(prop.row(i).transpose()) : after;
        auto& p = pins[i];
        if (k == 0) {
          p.z = (x - post_.priors().x0_mean).cwiseQuotient(post_.priors().x0_sd);
          p.term = standard_normal_logpdf(p.z);
          p.half_log_det = 0.0;
        } else if (i == 0) {
          p = post_.pinned(model, cache_.path.row(k - 1).transpose(), x, *first);
        } else {
          p = post_.pinned(model, prop.row(i - 1).transpose(), x, prop_m[i - 1]);
        }
        delta += (p.term - p.half_log_det) - (cache_.term[k] - cache_.half_log_det[k]);
        if (i < len && post_.observed(k)) {
          const int j = k / post_.augmentation();
          delta += post_.log_obs(j, x) - cache_.obs[j];
        }
      }
    } catch (const DegeneracyError&) {
      delta = kNegInf;
    }
    if (!std::isfinite(delta) || !accept(rng_, delta)) return 0;

    cache_.path.middleRows(a, len) = prop;
    for (int i = 0; i <= len; ++i) {
      const int k = a + i;
      if (k > n) break;
      latents_.row(k) = pins[i].z.transpose();
      cache_.term[k] = pins[i].term;
      cache_.half_log_det[k] = pins[i].half_log_det;
      if (i < len && post_.observed(k)) {
        const int j = k / post_.augmentation();
        cache_.obs[j] = post_.log_obs(j, prop.row(i).transpose());
      }
    }
    return 1;
  }

  const AugmentedPosterior& post_;
  const McmcOptions& opts_;
  Rng rng_;
  Adapter nc_, c_, lat_, joint_;
  RunningCov cov_;
  Mat prop_chol_;
  Vec log_theta_;
  Mat latents_;
  PathCache cache_;
  std::unique_ptr<PathGaussian> cur_gauss_;
  double log_post_ = kNegInf;
};

}  // namespace

LatentMove parse_latent_move(const std::string& s) {
  if (s == "gaussian") return LatentMove::gaussian;
  if (s == "rwm") return LatentMove::rwm;
  throw InputError("unknown latent move '" + s + "' (expected gaussian or rwm)");
}

std::string to_string(LatentMove m) { return m == LatentMove::gaussian ? "gaussian" : "rwm"; }

void validate(const McmcOptions& o) {
  require(o.n_iters >= 4, "mcmc: n_iters must be >= 4");
  require(o.n_warmup >= 0, "mcmc: n_warmup must be >= 0");
  require(o.n_chains >= 1, "mcmc: n_chains must be >= 1");
  require(o.window >= 1 && o.stride >= 1 && o.stride <= o.window, "mcmc: need 1 <= stride <= window");
  require(o.target_accept > 0 && o.target_accept < 1, "mcmc: target_accept must lie in (0, 1)");
}

Mat initial_path_guess(const AugmentedPosterior& post, const Vec& log_theta) {
  const auto& obs = post.observations();
  const int m = post.augmentation();
  const int n = post.n_steps();
  const int n_obs = static_cast<int>(obs.times.size());
  Mat path = Mat::Zero(n + 1, post.dim());
  for (int k = 0; k <= n; ++k) {
    const int j = std::min(k / m, n_obs - 2);
    const double w = static_cast<double>(k - j * m) / m;
    path(k, 0) = (1 - w) * obs.values(j, 0) + w * obs.values(j + 1, 0);
  }
  if (post.dim() != 2) return path;

  const ModelPtr model = post.model_at(log_theta);
  const double h = post.fine_step();
  auto slope = [&](int k) {
    const int lo = std::max(k - m, 0), hi = std::min(k + m, n);
    return (path(hi, 0) - path(lo, 0)) / ((hi - lo) * h);
  };
  if (const auto* fhn = dynamic_cast<const FhnModel*>(model.get())) {
    for (int k = 0; k <= n; ++k) {
      const double v = path(k, 0);
      path(k, 1) = v - v * v * v - fhn->stimulus() - fhn->params().epsilon * slope(k);
    }
  } else if (dynamic_cast<const LangevinModel*>(model.get())) {
    for (int k = 0; k <= n; ++k) path(k, 1) = slope(k);
  }
  return path;
}

ChainRecord run_chain(const AugmentedPosterior& post, const McmcOptions& opts, int chain_id) {
  validate(opts);
  return Chain(post, opts, chain_id).run();
}

McmcResult rwm_sample(const AugmentedPosterior& post, const McmcOptions& opts) {
  validate(opts);
  McmcResult res;
  res.names = post.model_at(Vec::Zero(post.n_theta()))->theta_names();
  res.chains.resize(static_cast<std::size_t>(opts.n_chains));
  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(res.chains.size(), opts.threads,
               [&](std::size_t c) { res.chains[c] = Chain(post, opts, static_cast<int>(c)).run(); });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.seconds_per_iter = secs / (static_cast<double>(opts.n_iters + opts.n_warmup) * opts.n_chains);

  res.converged = true;
  for (int p = 0; p < post.n_theta(); ++p) {
    Draws d;
    for (const auto& c : res.chains) d.emplace_back(c.theta.col(p).data(), c.theta.col(p).data() + c.theta.rows());
    res.diagnostics.push_back(diagnose(d));
    const auto& g = res.diagnostics.back();
    res.converged = res.converged && g.rhat < 1.01 && g.ess_bulk > 400 && g.ess_tail > 400;
  }
  return res;
}

void write_chains_csv(std::ostream& os, const McmcResult& r) {
  os << "chain,iteration";
  for (const auto& n : r.names) os << "," << n;
  os << ",log_post\n";
  char buf[32];
  for (std::size_t c = 0; c < r.chains.size(); ++c) {
    const auto& ch = r.chains[c];
    for (Eigen::Index i = 0; i < ch.theta.rows(); ++i) {
      os << c << "," << i;
      for (Eigen::Index p = 0; p < ch.theta.cols(); ++p) {
        std::snprintf(buf, sizeof buf, ",%.17g", ch.theta(i, p));
        os << buf;
      }
      std::snprintf(buf, sizeof buf, ",%.17g\n", ch.log_post[i]);
      os << buf;
    }
  }
}

std::string diagnostics_json(const McmcResult& r) {
  nlohmann::ordered_json j;
  j["converged"] = r.converged;
  j["warning"] = !r.converged;
  j["seconds_per_iter"] = r.seconds_per_iter;
  for (std::size_t p = 0; p < r.names.size(); ++p) {
    const auto& d = r.diagnostics[p];
    j["parameters"][r.names[p]] = {{"mean", d.mean}, {"sd", d.sd}, {"rhat", d.rhat},
                                   {"ess_bulk", d.ess_bulk}, {"ess_tail", d.ess_tail}};
  }
  for (const auto& c : r.chains)
    j["chains"].push_back({{"accept_theta_noncentred", c.accept_theta_noncentred},
                           {"accept_theta_centred", c.accept_theta_centred},
                           {"accept_latent", c.accept_latent},
                           {"accept_joint", c.accept_joint},
                           {"scale_joint", c.scales_final.joint},
                           {"scale_theta_noncentred", c.scales_final.theta_noncentred},
                           {"scale_theta_centred", c.scales_final.theta_centred},
                           {"scale_latent", c.scales_final.latent},
                           {"startup_redraws", c.startup_redraws}});
  return j.dump(2);
}

}  // namespace cfd
