#pragma once

#include "cfd/core.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cfd {

// Which closed-form correction coefficients apply to a model.
enum class CorrectionFamily {
  exact_linear,  // drift is affine: the LDL Gaussian is the exact transition law
  fhn_full,      // FitzHugh-Nagumo around the full drift linearisation (DE-I)
  fhn_partial,   // FitzHugh-Nagumo around the partial linearisation (DE-II)
};

// dX = V0(X) dt + sigma(X) dB with X = (X_S, X_R): the first n_smooth()
// coordinates carry no direct noise (class H), n_smooth() == 0 is class E.
//
// Models are immutable; every method is const and thread-safe. The span
// primitives are the allocation-free hot path used by the simulator; the
// Eigen-returning wrappers validate dimensions.
class SdeModel {
 public:
  virtual ~SdeModel() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual int n_smooth() const = 0;
  virtual int n_noise() const = 0;
  int n_rough() const { return dim() - n_smooth(); }

  virtual Vec theta() const = 0;
  virtual std::vector<std::string> theta_names() const = 0;
  virtual std::shared_ptr<const SdeModel> with_theta(const Vec& theta) const = 0;
  virtual CorrectionFamily correction_family() const = 0;
  // True when sigma does not depend on the state.
  virtual bool additive_noise() const { return true; }

  virtual void eval_drift(std::span<const double> x, std::span<double> out) const = 0;
  // Column-major dim() x n_noise().
  virtual void eval_diffusion(std::span<const double> x, std::span<double> out) const = 0;
  // Column-major dim() x dim().
  virtual void eval_drift_jacobian(std::span<const double> x, std::span<double> out) const = 0;
  // Matrix A of the LDL scheme. Defaults to the drift Jacobian.
  virtual void eval_linearisation(std::span<const double> x, std::span<double> out) const {
    eval_drift_jacobian(x, out);
  }

  Vec drift(const Vec& x) const;
  Mat diffusion(const Vec& x) const;
  Mat drift_jacobian(const Vec& x) const;
  Mat linearisation(const Vec& x) const;
};

using ModelPtr = std::shared_ptr<const SdeModel>;

struct FhnParams {
  double epsilon = 0.1;
  double gamma = 1.2;
  double beta = 0.3;
  double sigma = 0.8;
};

enum class FhnLinearisation { full, partial };

// dV = (V - V^3 - U - s)/eps dt,  dU = (gamma V - U + beta) dt + sigma dB.
// theta = (epsilon, gamma, beta, sigma); s is a fixed signed stimulus.
class FhnModel final : public SdeModel {
 public:
  FhnModel(FhnParams params, double stimulus, FhnLinearisation lin = FhnLinearisation::full);

  std::string name() const override;
  int dim() const override { return 2; }
  int n_smooth() const override { return 1; }
  int n_noise() const override { return 1; }
  Vec theta() const override;
  std::vector<std::string> theta_names() const override;
  ModelPtr with_theta(const Vec& theta) const override;
  CorrectionFamily correction_family() const override;

  void eval_drift(std::span<const double> x, std::span<double> out) const override;
  void eval_diffusion(std::span<const double> x, std::span<double> out) const override;
  void eval_drift_jacobian(std::span<const double> x, std::span<double> out) const override;
  void eval_linearisation(std::span<const double> x, std::span<double> out) const override;

  const FhnParams& params() const { return params_; }
  double stimulus() const { return stimulus_; }
  FhnLinearisation linearisation_kind() const { return lin_; }

 private:
  FhnParams params_;
  double stimulus_;
  FhnLinearisation lin_;
};

// dQ = P dt,  dP = (-k Q - alpha P) dt + sigma dB: underdamped Langevin with
// the quadratic potential V(q) = k q^2 / 2. theta = (alpha, sigma).
class LangevinModel final : public SdeModel {
 public:
  LangevinModel(double alpha, double sigma, double stiffness = 1.0);

  std::string name() const override { return "langevin"; }
  int dim() const override { return 2; }
  int n_smooth() const override { return 1; }
  int n_noise() const override { return 1; }
  Vec theta() const override;
  std::vector<std::string> theta_names() const override;
  ModelPtr with_theta(const Vec& theta) const override;
  CorrectionFamily correction_family() const override { return CorrectionFamily::exact_linear; }

  void eval_drift(std::span<const double> x, std::span<double> out) const override;
  void eval_diffusion(std::span<const double> x, std::span<double> out) const override;
  void eval_drift_jacobian(std::span<const double> x, std::span<double> out) const override;

  double stiffness() const { return stiffness_; }

 private:
  double alpha_;
  double sigma_;
  double stiffness_;
};

// dX = (A X + b) dt + Sigma dB with constant coefficients.
// theta = (A row-major, b, Sigma row-major).
class LinearModel final : public SdeModel {
 public:
  LinearModel(Mat a, Vec b, Mat sigma);

  std::string name() const override { return "linear"; }
  int dim() const override { return static_cast<int>(a_.rows()); }
  int n_smooth() const override { return n_smooth_; }
  int n_noise() const override { return static_cast<int>(sigma_.cols()); }
  Vec theta() const override;
  std::vector<std::string> theta_names() const override;
  ModelPtr with_theta(const Vec& theta) const override;
  CorrectionFamily correction_family() const override { return CorrectionFamily::exact_linear; }

  void eval_drift(std::span<const double> x, std::span<double> out) const override;
  void eval_diffusion(std::span<const double> x, std::span<double> out) const override;
  void eval_drift_jacobian(std::span<const double> x, std::span<double> out) const override;

  const Mat& a() const { return a_; }
  const Vec& b() const { return b_; }
  const Mat& sigma() const { return sigma_; }

 private:
  Mat a_;
  Vec b_;
  Mat sigma_;
  int n_smooth_;
};

// Scalar Ornstein-Uhlenbeck dX = kappa (m - X) dt + sigma dB,
// theta = (kappa, m, sigma).
class OuModel final : public SdeModel {
 public:
  OuModel(double kappa, double mean, double sigma);

  std::string name() const override { return "ou"; }
  int dim() const override { return 1; }
  int n_smooth() const override { return 0; }
  int n_noise() const override { return 1; }
  Vec theta() const override;
  std::vector<std::string> theta_names() const override;
  ModelPtr with_theta(const Vec& theta) const override;
  CorrectionFamily correction_family() const override { return CorrectionFamily::exact_linear; }

  void eval_drift(std::span<const double> x, std::span<double> out) const override;
  void eval_diffusion(std::span<const double> x, std::span<double> out) const override;
  void eval_drift_jacobian(std::span<const double> x, std::span<double> out) const override;

 private:
  double kappa_;
  double mean_;
  double sigma_;
};

struct ModelSpec {
  std::string name;  // "fhn", "fhn-partial", "langevin", "linear", "ou"
  Vec theta;
  double stimulus = 0.0;   // fhn only
  double stiffness = 1.0;  // langevin only
  int dim = 0;             // linear only
  int n_noise = 0;         // linear only
};

ModelPtr make_model(const ModelSpec& spec);

struct HormanderReport {
  int rank_rough = 0;
  int rank_full = 0;
  bool satisfied = false;
};

// Numerical rank test of span{V_R,j} = R^{N_R} and span{V_j, [V0~, V_j]} = R^N,
// with V0~ the Stratonovich drift and [V, W] = (dW) V - (dV) W.
// Singular values above rel_tol * (largest singular value) count.
// For class-E models only the diffusion rank is reported.
HormanderReport check_hormander(const SdeModel& model, const Vec& x, double rel_tol = 1e-10);

}  // namespace cfd
