#include "cfd/ldl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cfd {

namespace {

// Pade coefficients and backward-error thresholds, Higham (2005) Table 2.3.
constexpr double kPade3[] = {120.0, 60.0, 12.0, 1.0};
constexpr double kPade5[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr double kPade7[] = {17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0};
constexpr double kPade9[] = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
                             2162160.0,     110880.0,     3960.0,       90.0,        1.0};
constexpr double kPade13[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                              1187353796428800.0,  129060195264000.0,   10559470521600.0,
                              670442572800.0,      33522128640.0,       1323241920.0,
                              40840800.0,          960960.0,            16380.0,
                              182.0,               1.0};
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068;
constexpr double kTheta13 = 5.371920351148152;

// Low-degree approximant r_m = (V - U)^{-1} (V + U) from even powers of a.
template <typename M>
M pade_low(const M& a, const double* b, int degree, const M& id) {
  const M a2 = a * a;
  M u_inner = b[1] * id, v = b[0] * id, p = id;
  for (int k = 2; k <= degree; k += 2) {
    p = p * a2;
    u_inner += b[k + 1] * p;
    v += b[k] * p;
  }
  const M u = a * u_inner;
  return (v - u).partialPivLu().solve(v + u);
}

template <typename M>
M pade_exp(const M& a) {
  const M id = M::Identity(a.rows(), a.cols());
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  if (norm1 <= kTheta3) return pade_low(a, kPade3, 3, id);
  if (norm1 <= kTheta5) return pade_low(a, kPade5, 5, id);
  if (norm1 <= kTheta7) return pade_low(a, kPade7, 7, id);
  if (norm1 <= kTheta9) return pade_low(a, kPade9, 9, id);

  int squarings = 0;
  if (norm1 > kTheta13) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / kTheta13))));
  const M as = a * std::ldexp(1.0, -squarings);
  const M a2 = as * as;
  const M a4 = a2 * a2;
  const M a6 = a4 * a2;
  const double* b = kPade13;
  const M u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
  const M u = as * u_inner;
  const M v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  M r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

template <int N>
Mat fixed_exp(const Mat& a) {
  return pade_exp(Eigen::Matrix<double, N, N>(a));
}

}  // namespace

Mat mat_exp(const Mat& a) {
  require(a.rows() == a.cols(), "mat_exp: matrix must be square");
  require(a.allFinite(), "mat_exp: non-finite entry");
  switch (a.rows()) {
    case 0: return a;
    case 3: return fixed_exp<3>(a);
    case 5: return fixed_exp<5>(a);
    default: return pade_exp(a);
  }
}

namespace {

void factorize(LdlMoments& m) {
  const Eigen::Index n = m.cov.rows();
  m.cov = 0.5 * (m.cov + m.cov.transpose());
  Eigen::LLT<Mat> llt(m.cov);
  if (llt.info() != Eigen::Success) {
    m.jitter = 1e-12 * m.cov.trace() / static_cast<double>(n);
    llt.compute(m.cov + m.jitter * Mat::Identity(n, n));
    if (llt.info() != Eigen::Success || !(m.jitter > 0)) {
      Eigen::SelfAdjointEigenSolver<Mat> eig(m.cov, Eigen::EigenvaluesOnly);
      std::ostringstream os;
      os << "LDL covariance is not positive definite (smallest eigenvalue "
         << (eig.info() == Eigen::Success ? eig.eigenvalues()[0] : std::nan("")) << ")";
      throw DegeneracyError(os.str());
    }
    m.cov += m.jitter * Mat::Identity(n, n);
  }
  m.chol = llt.matrixL();
  m.log_det = 2.0 * m.chol.diagonal().array().log().sum();
}

}  // namespace

LdlMoments linear_moments(const Mat& a_drift, const Vec& b_drift, const Mat& diffusion_cov, const Vec& x,
                          double dt) {
  require(dt > 0 && std::isfinite(dt), "LDL moments: dt must be positive");
  const Eigen::Index n = a_drift.rows();
  require_dim(x, n, "LDL moments state");
  require(x.allFinite(), "LDL moments: non-finite state");

  Mat block = Mat::Zero(2 * n + 1, 2 * n + 1);
  block.topLeftCorner(n, n) = a_drift * dt;
  block.block(0, n, n, n) = diffusion_cov * dt;
  block.block(0, 2 * n, n, 1) = b_drift * dt;
  block.block(n, n, n, n) = -a_drift.transpose() * dt;
  const Mat e = mat_exp(block);

  LdlMoments m;
  m.transition = e.topLeftCorner(n, n);
  m.mean = m.transition * x + e.block(0, 2 * n, n, 1);
  m.cov = e.block(0, n, n, n) * m.transition.transpose();
  if (!m.mean.allFinite() || !m.cov.allFinite()) throw DegeneracyError("LDL moments overflowed");
  factorize(m);
  return m;
}

LdlMoments ldl_moments(const SdeModel& model, const Vec& x, double dt) {
  const Mat a = model.linearisation(x);
  const Vec b = model.drift(x) - a * x;
  const Mat s = model.diffusion(x);
  return linear_moments(a, b, s * s.transpose(), x, dt);
}

Vec whiten(const LdlMoments& m, const Vec& y) {
  require_dim(y, m.mean.size(), "gaussian point");
  return m.chol.triangularView<Eigen::Lower>().solve(y - m.mean);
}

Vec colour(const LdlMoments& m, const Vec& z) {
  require_dim(z, m.mean.size(), "gaussian noise");
  return m.mean + m.chol.triangularView<Eigen::Lower>() * z;
}

double gaussian_logpdf(const LdlMoments& m, const Vec& y) {
  const Vec w = whiten(m, y);
  const double n = static_cast<double>(m.mean.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + m.log_det + w.squaredNorm());
}

}  // namespace cfd
