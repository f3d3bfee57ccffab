#include "ckg/ambient.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <sstream>

namespace ckg {

namespace {

constexpr double kFdStep = 1e-6;
// The second derivative is differenced on a coarser step: with 1e-6 the
// cancellation error of the three-point stencil is about 1e-4.
constexpr double kFdStep2 = 1e-4;

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

// --------------------------------------------------------------- BaseMetric

std::shared_ptr<const BaseMetric> BaseMetric::flat(int dim) {
  return std::shared_ptr<const BaseMetric>(new BaseMetric(
      dim, "flat", [dim](const Vec&) -> Mat { return Mat::Identity(dim, dim); },
      [dim](const Vec&, int) -> Mat { return Mat::Zero(dim, dim); }));
}

std::shared_ptr<const BaseMetric> BaseMetric::conformal(int dim, std::string tag,
                                                        std::function<double(const Vec&)> omega,
                                                        std::function<Vec(const Vec&)> grad_omega) {
  auto metric = [dim, omega](const Vec& u) -> Mat {
    return std::exp(2.0 * omega(u)) * Mat::Identity(dim, dim);
  };
  auto deriv = [dim, omega, grad_omega](const Vec& u, int k) -> Mat {
    return 2.0 * grad_omega(u)(k) * std::exp(2.0 * omega(u)) * Mat::Identity(dim, dim);
  };
  return std::shared_ptr<const BaseMetric>(new BaseMetric(dim, std::move(tag), metric, deriv));
}

std::shared_ptr<const BaseMetric> BaseMetric::round_sphere() {
  return conformal(
      2, "sphere", [](const Vec& u) { return std::log(2.0) - std::log1p(u.squaredNorm()); },
      [](const Vec& u) -> Vec { return -2.0 * u / (1.0 + u.squaredNorm()); });
}

std::shared_ptr<const BaseMetric> BaseMetric::hyperbolic_disk() {
  return conformal(
      2, "hyperbolic",
      [](const Vec& u) {
        const double s = 1.0 - u.squaredNorm();
        if (s <= 0.0) throw DomainError("point outside the Poincare disk chart");
        return std::log(2.0) - std::log(s);
      },
      [](const Vec& u) -> Vec { return 2.0 * u / (1.0 - u.squaredNorm()); });
}

std::shared_ptr<const BaseMetric> BaseMetric::general(int dim, std::string tag, MetricFn metric,
                                                      MetricDerivFn derivative) {
  return std::shared_ptr<const BaseMetric>(
      new BaseMetric(dim, std::move(tag), std::move(metric), std::move(derivative)));
}

Mat BaseMetric::metric(const Vec& u) const {
  Mat s = metric_(u);
  const double scale = s.cwiseAbs().maxCoeff();
  if (!((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale)) {
    throw DomainError("base metric is not symmetric");
  }
  bool spd = s(0, 0) > 0.0;
  if (dim_ == 2) {
    spd = spd && s.determinant() > 0.0;
  } else if (dim_ > 2) {
    spd = Eigen::LLT<Mat>(s).info() == Eigen::Success;
  }
  if (!spd) throw DomainError("base metric is not positive definite");
  return s;
}

Mat BaseMetric::inverse(const Vec& u) const { return metric(u).inverse(); }

double BaseMetric::volume_density(const Vec& u) const { return std::sqrt(metric(u).determinant()); }

std::array<Mat, kMaxDim> BaseMetric::christoffel(const Vec& u) const {
  const Mat inv = inverse(u);
  std::array<Mat, kMaxDim> d{};
  for (int k = 0; k < dim_; ++k) d[k] = deriv_(u, k);
  std::array<Mat, kMaxDim> g{};
  for (int k = 0; k < dim_; ++k) {
    g[k] = Mat::Zero(dim_, dim_);
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        double s = 0.0;
        for (int l = 0; l < dim_; ++l) {
          s += inv(k, l) * (d[i](l, j) + d[j](l, i) - d[l](i, j));
        }
        g[k](i, j) = 0.5 * s;
      }
    }
  }
  return g;
}

double BaseMetric::inner(const Vec& u, const Vec& a, const Vec& b) const {
  return a.dot(metric(u) * b);
}

double BaseMetric::norm(const Vec& u, const Vec& a) const { return std::sqrt(inner(u, a, a)); }

// ---------------------------------------------------------- conformal data

ConformalFactor ConformalFactor::with_finite_differences(std::function<double(double)> value,
                                                         double interval_end) {
  ConformalFactor f;
  f.value = value;
  f.interval_end = interval_end;
  f.finite_difference = true;
  f.first = [value, interval_end](double t) {
    if (t + kFdStep < interval_end) return (value(t + kFdStep) - value(t - kFdStep)) / (2 * kFdStep);
    return (value(t) - value(t - kFdStep)) / kFdStep;
  };
  f.second = [value, interval_end](double t) {
    const double h = kFdStep2;
    if (t + h < interval_end) return (value(t + h) - 2 * value(t) + value(t - h)) / (h * h);
    return (value(t) - 2 * value(t - h) + value(t - 2 * h)) / (h * h);
  };
  return f;
}

GammaField GammaField::constant_value(double g, int dim) {
  GammaField f;
  f.value = [g](const Vec&) { return g; };
  f.gradient = [dim](const Vec&) -> Vec { return Vec::Zero(dim); };
  f.constant = true;
  return f;
}

GammaField GammaField::with_finite_differences(std::function<double(const Vec&)> value, int dim) {
  GammaField f;
  f.value = value;
  f.finite_difference = true;
  f.gradient = [value, dim](const Vec& u) -> Vec {
    Vec g(dim);
    for (int k = 0; k < dim; ++k) {
      Vec a = u, b = u;
      a(k) += kFdStep;
      b(k) -= kFdStep;
      g(k) = (value(a) - value(b)) / (2 * kFdStep);
    }
    return g;
  };
  return f;
}

// ------------------------------------------------------------ AmbientSpace

AmbientSpace::AmbientSpace(std::string name, ConformalFactor lambda, GammaField gamma,
                           std::shared_ptr<const BaseMetric> base, CurvatureModel curvature,
                           bool killing)
    : name_(std::move(name)),
      lambda_(std::move(lambda)),
      gamma_(std::move(gamma)),
      base_(std::move(base)),
      curvature_(std::move(curvature)),
      killing_(killing) {
  if (!base_) throw ParameterError("ambient space needs a base metric");
  if (!(lambda_.interval_end > 0.0)) throw ParameterError("interval end must be positive");
  if (!lambda_.value || !lambda_.first || !lambda_.second) {
    throw ParameterError("lambda needs value and derivative evaluators");
  }
  if (!gamma_.value || !gamma_.gradient) throw ParameterError("gamma needs value and gradient");
  const double l0 = lambda_.value(0.0);
  if (!(std::abs(l0 - 1.0) <= 1e-12)) {
    throw ParameterError("lambda(0) must equal 1, got " + fmt_num(l0));
  }
}

void AmbientSpace::check_t(double t) const {
  if (!(t < lambda_.interval_end) || std::isnan(t)) {
    throw DomainError("t = " + fmt_num(t) + " outside the flow interval (-inf, " +
                      fmt_num(lambda_.interval_end) + ")");
  }
}

double AmbientSpace::lambda(double t) const {
  check_t(t);
  const double v = lambda_.value(t);
  if (!(v > 0.0)) throw DomainError("lambda(" + fmt_num(t) + ") is not positive");
  return v;
}

double AmbientSpace::lambda_t(double t) const {
  check_t(t);
  return lambda_.first(t);
}

double AmbientSpace::lambda_tt(double t) const {
  check_t(t);
  return lambda_.second(t);
}

double AmbientSpace::rho(double t) const { return lambda_t(t) / lambda(t); }

double AmbientSpace::rho_t(double t) const {
  const double l = lambda(t);
  const double lt = lambda_t(t);
  return (lambda_tt(t) * l - lt * lt) / (l * l);
}

double AmbientSpace::gamma(const Vec& u) const {
  const double g = gamma_.value(u);
  if (!(g > 0.0)) throw DomainError("gamma is not positive");
  return g;
}

Vec AmbientSpace::gamma_gradient(const Vec& u) const { return gamma_.gradient(u); }

double AmbientSpace::psi(const Vec& u) const { return 1.0 / std::sqrt(gamma(u)); }

double AmbientSpace::gamma_bar(double t, const Vec& u) const {
  const double l = lambda(t);
  return gamma(u) / (l * l);
}

double AmbientSpace::leaf_mean_curvature(double t, const Vec& u) const {
  const double l = lambda(t);
  return -lambda_t(t) * std::sqrt(gamma(u)) / (l * l);
}

double AmbientSpace::leaf_mean_curvature_from_rho(double t, const Vec& u) const {
  const double y_norm = 1.0 / std::sqrt(gamma_bar(t, u));
  return -rho(t) / y_norm;
}

double AmbientSpace::leaf_curvature_t(double t, const Vec& u) const {
  const double l = lambda(t);
  const double lt = lambda_t(t);
  return -std::sqrt(gamma(u)) * (lambda_tt(t) / (l * l) - 2.0 * lt * lt / (l * l * l));
}

double AmbientSpace::leaf_curvature_t_from_flow(double t, const Vec& u) const {
  const double gb = gamma_bar(t, u);
  const double k = leaf_mean_curvature_from_rho(t, u);
  return (-gb * rho_t(t) + k * k) / std::sqrt(gb);
}

double AmbientSpace::cylinder_kappa(double t, const Vec& u, const Vec& eta) const {
  return eta.dot(gamma_gradient(u)) / (2.0 * gamma(u)) / lambda(t);
}

double AmbientSpace::cylinder_mean_curvature(double t, const Vec& u, const Vec& eta,
                                             double H_gamma) const {
  const int dim = n();
  return (cylinder_kappa(t, u, eta) + (dim - 1) * H_gamma / lambda(t)) / dim;
}

double AmbientSpace::r_of_t(double t) const {
  check_t(t);
  if (lambda_.primitive) return lambda_.primitive(t);
  if (t == 0.0) return 0.0;
  double err = 0.0;
  const double r = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
      [this](double s) { return lambda(s); }, 0.0, t, 20, 1e-14, &err);
  return r;
}

double AmbientSpace::t_of_r(double r) const {
  if (lambda_.primitive_inverse) {
    const double t = lambda_.primitive_inverse(r);
    if (std::isnan(t) || !(t < lambda_.interval_end)) {
      throw DomainError("r = " + fmt_num(r) + " outside the range of r(t)");
    }
    return t;
  }
  if (r == 0.0) return 0.0;
  double lo = 0.0, hi = 0.0;
  if (r > 0.0) {
    const double a = lambda_.interval_end;
    hi = std::isfinite(a) ? std::min(1.0, 0.5 * a) : 1.0;
    while (r_of_t(hi) < r) {
      lo = hi;
      if (std::isfinite(a)) {
        hi = hi + 0.5 * (a - hi);
        if (a - hi < 1e-14 * std::max(1.0, std::abs(a))) {
          throw DomainError("r = " + fmt_num(r) + " outside the range of r(t)");
        }
      } else {
        hi *= 2.0;
        if (hi > 1e6) throw DomainError("r = " + fmt_num(r) + " outside the range of r(t)");
      }
    }
  } else {
    lo = -1.0;
    while (r_of_t(lo) > r) {
      hi = lo;
      lo *= 2.0;
      if (lo < -1e6) throw DomainError("r = " + fmt_num(r) + " outside the range of r(t)");
    }
  }
  std::uintmax_t iters = 200;
  auto f = [this, r](double t) { return r_of_t(t) - r; };
  auto tol = [](double a, double b) { return std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)); };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (a + b);
}

// ----------------------------------------------------------------- presets

namespace {

GammaField gamma_from_params(const PresetParams& p) {
  if (!p.psi) return GammaField::constant_value(1.0, p.dim);
  auto psi = p.psi;
  if (!p.psi_gradient) {
    return GammaField::with_finite_differences(
        [psi](const Vec& u) {
          const double s = psi(u);
          return 1.0 / (s * s);
        },
        p.dim);
  }
  GammaField g;
  auto dpsi = p.psi_gradient;
  g.value = [psi](const Vec& u) {
    const double s = psi(u);
    return 1.0 / (s * s);
  };
  g.gradient = [psi, dpsi](const Vec& u) -> Vec {
    const double s = psi(u);
    return -2.0 * dpsi(u) / (s * s * s);
  };
  return g;
}

std::shared_ptr<const BaseMetric> base_from_params(const PresetParams& p, CurvatureModel& curv) {
  if (p.base == "flat") {
    curv = CurvatureModel::flat();
    return BaseMetric::flat(p.dim);
  }
  if (p.base == "sphere") {
    if (p.dim != 2) throw ParameterError("sphere base is only provided for n = 2");
    curv = CurvatureModel::constant(1.0);
    return BaseMetric::round_sphere();
  }
  if (p.base == "hyperbolic") {
    if (p.dim != 2) throw ParameterError("hyperbolic base is only provided for n = 2");
    curv = CurvatureModel::constant(-1.0);
    return BaseMetric::hyperbolic_disk();
  }
  throw ParameterError("unknown base metric '" + p.base + "'");
}

// lambda = sinh(s) with s = 2 artanh(q e^t); normalized so lambda(0) = 1,
// i.e. q = tanh(asinh(1) / 2) = sqrt(2) - 1.  ds/dt = sinh(s).
constexpr double kExampleCq = 0.41421356237309504880;  // sqrt(2) - 1
double example_c_s(double t) { return 2.0 * std::atanh(kExampleCq * std::exp(t)); }

}  // namespace

std::shared_ptr<const AmbientSpace> preset_ambient(const std::string& name, const PresetParams& params) {
  ConformalFactor lam;
  PresetParams p = params;
  CurvatureModel curv;
  bool killing = false;

  if (name == "example_a") {
    lam.value = [](double t) { return std::exp(t); };
    lam.first = lam.value;
    lam.second = lam.value;
    lam.primitive = [](double t) { return std::expm1(t); };
    lam.primitive_inverse = [](double r) {
      return r > -1.0 ? std::log1p(r) : std::numeric_limits<double>::quiet_NaN();
    };
  } else if (name == "example_b") {
    lam.interval_end = 1.0;
    lam.value = [](double t) { return 1.0 / (1.0 - t); };
    lam.first = [](double t) { return 1.0 / ((1.0 - t) * (1.0 - t)); };
    lam.second = [](double t) { return 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t)); };
    lam.primitive = [](double t) { return -std::log1p(-t); };
    lam.primitive_inverse = [](double r) { return -std::expm1(-r); };
  } else if (name == "example_c") {
    lam.interval_end = std::asinh(1.0);
    lam.value = [](double t) { return std::sinh(example_c_s(t)); };
    lam.first = [](double t) {
      const double s = example_c_s(t);
      return std::sinh(s) * std::cosh(s);
    };
    lam.second = [](double t) {
      const double s = example_c_s(t);
      return std::cosh(2.0 * s) * std::sinh(s);
    };
    lam.primitive = [](double t) { return example_c_s(t) - std::asinh(1.0); };
    lam.primitive_inverse = [](double r) {
      const double s = r + std::asinh(1.0);
      if (!(s > 0.0)) return std::numeric_limits<double>::quiet_NaN();
      return std::log(std::tanh(0.5 * s) / kExampleCq);
    };
  } else if (name == "killing_flat") {
    p = PresetParams{};
    p.dim = params.dim;
    killing = true;
  } else if (name == "euclidean_radial") {
    p = PresetParams{};
    p.base = "sphere";
    lam.value = [](double t) { return std::exp(t); };
    lam.first = lam.value;
    lam.second = lam.value;
    lam.primitive = [](double t) { return std::expm1(t); };
    lam.primitive_inverse = [](double r) {
      return r > -1.0 ? std::log1p(r) : std::numeric_limits<double>::quiet_NaN();
    };
  } else {
    throw ParameterError("unknown ambient preset '" + name + "'");
  }

  if (killing) {
    lam.value = [](double) { return 1.0; };
    lam.first = [](double) { return 0.0; };
    lam.second = [](double) { return 0.0; };
    lam.primitive = [](double t) { return t; };
    lam.primitive_inverse = [](double r) { return r; };
  }

  auto base = base_from_params(p, curv);
  return std::make_shared<const AmbientSpace>(name, std::move(lam), gamma_from_params(p), base, curv,
                                              killing);
}

WarpedForm preset_warped_form(const std::string& name, const PresetParams&) {
  if (name == "example_a" || name == "euclidean_radial") {
    return {"psi^2 dr^2 + (1 + r)^2 dsigma^2, r = e^t - 1", [](double r) { return 1.0 + r; }, -1.0,
            kInf};
  }
  if (name == "example_b") {
    return {"psi^2 dr^2 + e^{2r} dsigma^2, r = -ln(1 - t)", [](double r) { return std::exp(r); },
            -kInf, kInf};
  }
  if (name == "example_c") {
    const double a = std::asinh(1.0);
    return {"psi^2 dr^2 + sinh^2(r + asinh 1) dsigma^2",
            [a](double r) { return std::sinh(r + a); }, -a, kInf};
  }
  if (name == "killing_flat") {
    return {"psi^2 dr^2 + dsigma^2, r = t", [](double) { return 1.0; }, -kInf, kInf};
  }
  throw ParameterError("unknown ambient preset '" + name + "'");
}

}  // namespace ckg
