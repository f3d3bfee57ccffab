#pragma once

#include "ckg/types.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>

namespace ckg {

// ---------------------------------------------------------------------------
// Base leaf metric sigma on a single chart of M.
// ---------------------------------------------------------------------------

enum class CurvatureKind { flat, constant, user_supplied, unavailable };

/// Ricci information of the base leaf (M, sigma).  For `constant` the
/// sectional curvature kappa0 gives Ric_M = (n-1) kappa0 sigma.  For
/// `user_supplied` the callback returns Ric_M(eta, eta) for the unit radial
/// direction at a chart point; the caller owns the choice of direction.
struct CurvatureModel {
  CurvatureKind kind = CurvatureKind::unavailable;
  double kappa0 = 0.0;
  std::function<double(const Vec&)> radial_ricci;

  static CurvatureModel flat() { return {CurvatureKind::flat, 0.0, {}}; }
  static CurvatureModel constant(double k) { return {CurvatureKind::constant, k, {}}; }
  static CurvatureModel unavailable() { return {}; }
};

/// Riemannian metric sigma_ij(u) on a chart, with first derivatives for the
/// Christoffel symbols.  Immutable after construction.
class BaseMetric {
 public:
  using MetricFn = std::function<Mat(const Vec&)>;
  /// Returns d sigma / d x^k at u.
  using MetricDerivFn = std::function<Mat(const Vec&, int)>;

  static std::shared_ptr<const BaseMetric> flat(int dim);
  /// sigma = e^{2 omega} delta.
  static std::shared_ptr<const BaseMetric> conformal(int dim, std::string tag,
                                                     std::function<double(const Vec&)> omega,
                                                     std::function<Vec(const Vec&)> grad_omega);
  /// Unit round sphere in the stereographic chart from the south pole:
  /// sigma = 4 / (1 + |x|^2)^2 delta, polar angle theta = 2 atan |x|.
  static std::shared_ptr<const BaseMetric> round_sphere();
  /// Poincare disk model of the hyperbolic plane, sigma = 4 / (1 - |x|^2)^2 delta.
  static std::shared_ptr<const BaseMetric> hyperbolic_disk();
  static std::shared_ptr<const BaseMetric> general(int dim, std::string tag, MetricFn metric,
                                                   MetricDerivFn derivative);

  int dim() const { return dim_; }
  const std::string& tag() const { return tag_; }
  bool is_flat() const { return tag_ == "flat"; }

  /// sigma_ij(u); throws DomainError when not symmetric positive definite.
  Mat metric(const Vec& u) const;
  Mat inverse(const Vec& u) const;
  /// sqrt(det sigma).
  double volume_density(const Vec& u) const;
  /// Gamma^k_ij stored as result[k](i, j).
  std::array<Mat, kMaxDim> christoffel(const Vec& u) const;

  double inner(const Vec& u, const Vec& a, const Vec& b) const;
  double norm(const Vec& u, const Vec& a) const;

 private:
  BaseMetric(int dim, std::string tag, MetricFn metric, MetricDerivFn derivative)
      : dim_(dim), tag_(std::move(tag)), metric_(std::move(metric)), deriv_(std::move(derivative)) {}

  int dim_;
  std::string tag_;
  MetricFn metric_;
  MetricDerivFn deriv_;
};

// ---------------------------------------------------------------------------
// Conformal data lambda(t) and gamma(u).
// ---------------------------------------------------------------------------

/// lambda on the flow interval (-inf, interval_end) with analytic derivatives.
/// The optional closed forms short-circuit quadrature and root finding in
/// the change of variable r(t) = int_0^t lambda.
struct ConformalFactor {
  std::function<double(double)> value;
  std::function<double(double)> first;
  std::function<double(double)> second;
  double interval_end = kInf;
  std::function<double(double)> primitive;          // r(t)
  std::function<double(double)> primitive_inverse;  // t(r)
  bool finite_difference = false;

  /// Builds the derivative evaluators with central differences (step 1e-6)
  /// and marks the factor so reports can flag it.
  static ConformalFactor with_finite_differences(std::function<double(double)> value,
                                                 double interval_end);
};

/// gamma(u) = 1 / |Y(0, u)|^2 and its chart gradient.
struct GammaField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  bool constant = false;
  bool finite_difference = false;

  static GammaField constant_value(double g, int dim);
  static GammaField with_finite_differences(std::function<double(const Vec&)> value, int dim);
};

/// The conformal structure: flow interval, lambda, gamma and the base leaf.
/// All evaluators are pure; instances are immutable and thread-safe.
class AmbientSpace {
 public:
  AmbientSpace(std::string name, ConformalFactor lambda, GammaField gamma,
               std::shared_ptr<const BaseMetric> base, CurvatureModel curvature, bool killing = false);

  const std::string& name() const { return name_; }
  int n() const { return base_->dim(); }
  double interval_end() const { return lambda_.interval_end; }
  const BaseMetric& base() const { return *base_; }
  std::shared_ptr<const BaseMetric> base_ptr() const { return base_; }
  const CurvatureModel& curvature_model() const { return curvature_; }
  /// lambda is constant (Y Killing).
  bool killing() const { return killing_; }
  /// gamma constant (Y closed).
  bool closed() const { return gamma_.constant; }
  bool finite_difference_derivatives() const {
    return lambda_.finite_difference || gamma_.finite_difference;
  }

  void check_t(double t) const;

  double lambda(double t) const;
  double lambda_t(double t) const;
  double lambda_tt(double t) const;
  double rho(double t) const;
  double rho_t(double t) const;

  double gamma(const Vec& u) const;
  Vec gamma_gradient(const Vec& u) const;
  double psi(const Vec& u) const;
  /// gamma(u) / lambda(t)^2 = 1 / |Y(t,u)|^2.
  double gamma_bar(double t, const Vec& u) const;

  /// k = -lambda_t sqrt(gamma) / lambda^2, mean curvature of the leaf M_t
  /// with respect to Y / |Y|.
  double leaf_mean_curvature(double t, const Vec& u) const;
  /// Same quantity through k = -rho / |Y|.
  double leaf_mean_curvature_from_rho(double t, const Vec& u) const;
  /// d k / d t by direct differentiation.
  double leaf_curvature_t(double t, const Vec& u) const;
  /// d k / d t through sqrt(gamma_bar) k_t = -gamma_bar Y(rho) + k^2 with Y(rho) = rho_t.
  double leaf_curvature_t_from_flow(double t, const Vec& u) const;

  /// kappa = eta(log sqrt(gamma)) / lambda, the principal curvature of the
  /// Killing cylinder along the flow direction.  `eta` is a chart vector,
  /// unit with respect to sigma.
  double cylinder_kappa(double t, const Vec& u, const Vec& eta) const;
  /// H_K = (kappa + (n-1) H_Gamma / lambda) / n, inward convention.
  double cylinder_mean_curvature(double t, const Vec& u, const Vec& eta, double H_gamma) const;

  /// r(t) = int_0^t lambda.
  double r_of_t(double t) const;
  /// Inverse of r_of_t; DomainError outside the range of r.
  double t_of_r(double r) const;
  /// theta(r) = lambda(t(r)), the warping profile of the twisted product form.
  double theta(double r) const { return lambda(t_of_r(r)); }

 private:
  std::string name_;
  ConformalFactor lambda_;
  GammaField gamma_;
  std::shared_ptr<const BaseMetric> base_;
  CurvatureModel curvature_;
  bool killing_;
};

// ---------------------------------------------------------------------------
// Presets.
// ---------------------------------------------------------------------------

struct PresetParams {
  /// Warping function psi = 1 / sqrt(gamma); constant 1 when empty.
  std::function<double(const Vec&)> psi;
  std::function<Vec(const Vec&)> psi_gradient;
  /// Base leaf: "flat", "sphere" (stereographic) or "hyperbolic" (Poincare disk).
  std::string base = "flat";
  int dim = 2;
};

/// example_a (lambda = e^t), example_b (lambda = 1 / (1 - t)),
/// example_c (lambda = sinh(2 artanh(b^{-1} e^{t - c}))), killing_flat,
/// euclidean_radial.  Throws ParameterError on an unknown name.
std::shared_ptr<const AmbientSpace> preset_ambient(const std::string& name,
                                                   const PresetParams& params = {});

/// Description of the isometric warped-product form ds^2 = psi^2 dr^2 + theta(r)^2 dsigma^2
/// for a preset, for cross-checking theta(r(t)) = lambda(t).
struct WarpedForm {
  std::string description;
  std::function<double(double)> theta;  // closed form theta(r)
  double r_min;                          // r(-inf)
  double r_max;                          // r(interval_end)
};
WarpedForm preset_warped_form(const std::string& name, const PresetParams& params = {});

}  // namespace ckg
