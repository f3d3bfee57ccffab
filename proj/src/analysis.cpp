#include "ckg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ckg {

namespace {

nlohmann::json vec_json(const Vec& v) {
  auto a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

double min_value(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }
double max_value(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

// Q[u] from the pointwise value, chart gradient and covariant Hessian of u.
double strong_Q(const AmbientSpace& amb, const Vec& x, double u, const Vec& grad, const Mat& hess, double H) {
  return amb.n() * amb.lambda(u) * (mean_curvature_pointwise(amb, x, u, grad, hess) - H);
}

// sigma-unit vector along the gradient covector.
Vec unit_direction(const BaseMetric& metric, const Vec& x, const Vec& covector) {
  Vec v = metric.inverse(x) * covector;
  const double norm = metric.norm(x, v);
  return norm > 0.0 ? Vec(v / norm) : v;
}

struct PointSample {
  int cell;
  Vec x;
  double d;
  Vec grad_d;
  Mat hess_d;
  double H;
  std::array<double, 3> bary;
};

// Lower-order quadrature points of every non-suspect cell with d, its
// recovered derivatives and H interpolated from the vertices.
std::vector<PointSample> sample_points(const Problem& P, const RecoveredDerivatives& rd, int& skipped) {
  const DomainMesh& mesh = *P.mesh;
  const auto& d = mesh.dist_to_boundary();
  const auto& quad = mesh.lower_order_quadrature();
  std::vector<PointSample> out;
  skipped = 0;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    if (mesh.cut_locus_suspect()[c]) {
      ++skipped;
      continue;
    }
    const auto nodes = mesh.cell(c);
    for (const auto& bary : quad.bary) {
      PointSample s{c, mesh.point(c, bary), 0.0, Vec::Zero(mesh.dim()), Mat::Zero(mesh.dim(), mesh.dim()), 0.0, bary};
      for (size_t a = 0; a < nodes.size(); ++a) {
        s.d += bary[a] * d[nodes[a]];
        s.grad_d += bary[a] * rd.gradient[nodes[a]];
        s.hess_d += bary[a] * rd.hessian[nodes[a]];
        s.H += bary[a] * P.H[nodes[a]];
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

double inf_cylinder_curvature(const Problem& P) {
  const DomainMesh& mesh = *P.mesh;
  double inf = kInf;
  for (int v : mesh.boundary_vertices()) {
    inf = std::min(inf, P.ambient->cylinder_mean_curvature(0.0, mesh.vertex(v), mesh.boundary_normal(v),
                                                           mesh.boundary_curvature(v)));
  }
  return inf;
}

}  // namespace

// ---------------------------------------------------------------- hypotheses

std::string to_string(CheckState s) {
  switch (s) {
    case CheckState::pass:
      return "pass";
    case CheckState::fail:
      return "fail";
    case CheckState::not_evaluable:
      return "not_evaluable";
    case CheckState::not_applicable:
      return "not_applicable";
  }
  return "unknown";
}

const HypothesisCondition& HypothesisReport::get(const std::string& name) const {
  for (const auto& c : conditions) {
    if (c.name == name) return c;
  }
  throw ParameterError("no condition named " + name);
}

bool HypothesisReport::all_pass() const { return failures().empty(); }

std::vector<std::string> HypothesisReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : conditions) {
    if (!c.informational && c.state == CheckState::fail) out.push_back(c.name);
  }
  return out;
}

nlohmann::json HypothesisReport::to_json() const {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : conditions) {
    conds.push_back({{"name", c.name},
                     {"requirement", c.requirement},
                     {"required_by", c.required_by},
                     {"margin", optional_json(c.margin)},
                     {"state", to_string(c.state)},
                     {"informational", c.informational},
                     {"note", c.note}});
  }
  return {{"branch", branch},
          {"t_range", {t_min, t_max}},
          {"inf_HK", inf_HK},
          {"inf_HGamma", inf_HGamma},
          {"sup_H", sup_H},
          {"ricci_base", optional_json(ricci_base)},
          {"ricci_ambient", optional_json(ricci_ambient)},
          {"leaf_term", optional_json(leaf_term)},
          {"low_confidence_curvature", low_confidence_curvature},
          {"all_pass", all_pass()},
          {"conditions", conds}};
}

HypothesisReport check_hypotheses(const Problem& problem, int samples) {
  problem.validate();
  const AmbientSpace& amb = *problem.ambient;
  const DomainMesh& mesh = *problem.mesh;
  const int n = amb.n();
  const bool killing = amb.killing();
  const bool closed = amb.closed();
  constexpr double slack = 1e-12;

  HypothesisReport rep;
  rep.branch = killing ? "killing" : (closed ? "closed" : "general");
  rep.t_min = std::min(problem.phi_min(), 0.0) - 1.0;
  rep.t_max = std::isfinite(amb.interval_end()) ? std::min(0.1, 0.5 * amb.interval_end()) : 0.1;
  const std::string existence = killing ? "existence (Killing field)" : "existence";

  auto add = [&](HypothesisCondition c) { rep.conditions.push_back(std::move(c)); };
  auto judge = [&](double margin, bool strict) {
    return (strict ? margin > 0.0 : margin >= -slack) ? CheckState::pass : CheckState::fail;
  };

  // Flow conditions.
  const auto mp = max_principle_conditions(amb, problem.H, rep.t_min, rep.t_max, samples);
  double lt_min = kInf;
  for (int i = 0; i < samples; ++i) {
    lt_min = std::min(lt_min, amb.lambda_t(rep.t_min + (rep.t_max - rep.t_min) * i / (samples - 1)));
  }
  add({"lambda_t_nonneg", "lambda_t >= 0 on the sampled flow range", existence, lt_min, judge(lt_min, false),
       killing ? "lambda is constant" : ""});
  add({"rho_t_nonneg", "(lambda_t / lambda)_t >= 0 on the sampled flow range", existence, mp.rho_t.margin,
       judge(mp.rho_t.margin, false), ""});

  // Data conditions.
  const double phi_margin = -problem.phi_max();
  HypothesisCondition phi{"phi_nonpos", "phi <= 0 on the boundary", existence, phi_margin, judge(phi_margin, false),
                          ""};
  if (killing) {
    phi.state = CheckState::not_applicable;
    phi.note = "not required when the field is Killing";
  }
  add(phi);
  const double h_min = min_value(problem.H.values);
  rep.sup_H = max_value(problem.H.values);
  add({"H_nonneg", "H >= 0", existence, h_min, judge(h_min, false), ""});

  rep.inf_HK = inf_cylinder_curvature(problem);
  rep.inf_HGamma = kInf;
  for (int v : mesh.boundary_vertices()) {
    rep.inf_HGamma = std::min(rep.inf_HGamma, mesh.boundary_curvature(v));
    rep.low_confidence_curvature = rep.low_confidence_curvature || mesh.boundary_curvature_low_confidence(v);
  }
  const double serrin = rep.inf_HK - rep.sup_H;
  add({"H_below_inf_HK", killing ? "sup H <= inf H_K (non-strict)" : "sup H < inf H_K (strict)", existence, serrin,
       judge(serrin, !killing),
       rep.low_confidence_curvature ? "boundary curvature estimate has low confidence at some vertices" : ""});

  // Ricci conditions at t = 0.
  const CurvatureModel& cm = amb.curvature_model();
  switch (cm.kind) {
    case CurvatureKind::flat:
      rep.ricci_base = 0.0;
      break;
    case CurvatureKind::constant:
      rep.ricci_base = (n - 1) * cm.kappa0;
      break;
    case CurvatureKind::user_supplied: {
      double m = kInf;
      for (int v = 0; v < mesh.vertex_count(); ++v) m = std::min(m, cm.radial_ricci(mesh.vertex(v)));
      rep.ricci_base = m;
      break;
    }
    case CurvatureKind::unavailable:
      break;
  }
  const double nH2 = n * rep.inf_HK * rep.inf_HK;
  HypothesisCondition simple{"ricci_simple", "Ric^rad >= -n (inf H_K)^2", existence, std::nullopt,
                             CheckState::not_evaluable, "", true};
  HypothesisCondition refined{"ricci_refined", "Ric^rad + (n k^2 - sqrt(gamma) k_t) >= -n (inf H_K)^2", existence,
                              std::nullopt, CheckState::not_evaluable, "", true};
  HypothesisCondition closed_form{"ricci_closed", "n Ric_M^rad >= -(n-1)^2 (inf H_Gamma)^2",
                                  "existence (closed field)", std::nullopt, CheckState::not_applicable, "", true};
  if (!rep.ricci_base) {
    simple.note = refined.note = "no Ricci model for the base leaf";
  } else if (!closed) {
    simple.note = refined.note = "radial direction field not computable for non-constant gamma";
  } else {
    const Vec& u0 = mesh.vertex(0);
    const double k = amb.leaf_mean_curvature(0.0, u0);
    const double kt = amb.leaf_curvature_t_from_flow(0.0, u0);
    rep.leaf_term = n * k * k - std::sqrt(amb.gamma(u0)) * kt;
    rep.ricci_ambient = *rep.ricci_base - *rep.leaf_term;
    simple.margin = *rep.ricci_ambient + nH2;
    simple.state = judge(*simple.margin, false);
    refined.margin = *rep.ricci_ambient + *rep.leaf_term + nH2;
    refined.state = judge(*refined.margin, false);
    closed_form.margin = *rep.ricci_base + (n - 1.0) * (n - 1.0) / n * rep.inf_HGamma * rep.inf_HGamma;
    closed_form.state = judge(*closed_form.margin, false);
    closed_form.note = "margin divided by n";
  }
  HypothesisCondition ricci{"ricci_condition", "simple or refined Ricci bound", existence, std::nullopt,
                            CheckState::not_evaluable, simple.note};
  if (simple.margin) {
    ricci.margin = std::max(*simple.margin, *refined.margin);
    ricci.state = (simple.state == CheckState::pass || refined.state == CheckState::pass) ? CheckState::pass
                                                                                          : CheckState::fail;
  }
  add(ricci);
  add(simple);
  add(refined);
  add(closed_form);
  return rep;
}

// ------------------------------------------------------------------ barriers

nlohmann::json BarrierCertificate::to_json() const {
  return {{"kind", kind},
          {"parameters", parameters},
          {"min_margin", std::isfinite(min_margin) ? nlohmann::json(min_margin) : nlohmann::json(nullptr)},
          {"min_location", min_location.size() ? vec_json(min_location) : nlohmann::json(nullptr)},
          {"min_cell", min_cell},
          {"checked_points", checked_points},
          {"skipped_cells", skipped_cells},
          {"boundary_margin", boundary_margin},
          {"ordering_margin", optional_json(ordering_margin)},
          {"ordering_vertex", ordering_vertex},
          {"ordering_tol", ordering_tol},
          {"dif_margin", optional_json(dif_margin)},
          {"valid", valid}};
}

BarrierResult height_barrier(const Problem& problem, double D, double B, const ScalarField* z,
                             double ordering_tol) {
  problem.validate();
  const DomainMesh& mesh = *problem.mesh;
  const AmbientSpace& amb = *problem.ambient;
  if (!(D > 0.0)) throw ParameterError("height barrier needs D > 0");
  if (!(B > mesh.diameter())) {
    throw ParameterError("height barrier needs B > diam = " + std::to_string(mesh.diameter()));
  }
  if (D * B > 700.0) throw ParameterError("height barrier overflows for D B > 700");
  const double inf_phi = problem.phi_min();
  const double eDB = std::exp(D * B);
  auto f = [&](double d) { return eDB / D * std::expm1(-D * d); };
  auto fp = [&](double d) { return -std::exp(D * (B - d)); };

  BarrierResult out{ScalarField::constant(mesh, 0.0), {}};
  BarrierCertificate& cert = out.certificate;
  cert.kind = "height";
  cert.parameters = {{"D", D}, {"B", B}, {"inf_phi", inf_phi}};
  cert.ordering_tol = ordering_tol;
  const auto& d = mesh.dist_to_boundary();
  for (int v = 0; v < mesh.vertex_count(); ++v) out.field[v] = inf_phi + f(d[v]);

  const auto rd = recover_derivatives(mesh, d);
  const auto pts = sample_points(problem, rd, cert.skipped_cells);
  const double HK = inf_cylinder_curvature(problem);
  const int n = amb.n();
  double dif_min = kInf;
  cert.min_margin = kInf;
  for (const auto& s : pts) {
    const double f1 = fp(s.d);
    const double f2 = -D * f1;
    const double u = inf_phi + f(s.d);
    const Vec grad = f1 * s.grad_d;
    const Mat hess = f2 * s.grad_d * s.grad_d.transpose() + f1 * s.hess_d;
    const double q = strong_Q(amb, s.x, u, grad, hess, s.H);
    ++cert.checked_points;
    if (q < cert.min_margin) {
      cert.min_margin = q;
      cert.min_location = s.x;
      cert.min_cell = s.cell;
    }
    const double gam = amb.gamma(s.x);
    const double U = std::sqrt(gam + f1 * f1);
    const double kappa = amb.cylinder_kappa(0.0, s.x, unit_direction(mesh.metric(), s.x, s.grad_d));
    const double D0 = (D + kappa) / n;
    const double dif = -HK * f1 / U - gam * amb.rho(u) / U - gam * D0 * f1 / (U * U * U) - s.H;
    dif_min = std::min(dif_min, dif);
  }
  if (std::isfinite(dif_min)) cert.dif_margin = dif_min;

  cert.boundary_margin = kInf;
  const auto& bv = mesh.boundary_vertices();
  for (size_t i = 0; i < bv.size(); ++i) {
    cert.boundary_margin = std::min(cert.boundary_margin, problem.phi[i] - out.field[bv[i]]);
  }
  bool ordered = true;
  if (z) {
    z->check(mesh, "z");
    double worst = kInf;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      const double m = (*z)[v] - out.field[v];
      if (m < worst) {
        worst = m;
        cert.ordering_vertex = v;
      }
    }
    cert.ordering_margin = worst;
    ordered = worst >= -ordering_tol;
  }
  cert.valid = cert.checked_points > 0 && cert.min_margin > 0.0 && cert.boundary_margin >= 0.0 && ordered;
  return out;
}

BarrierResult constant_upper_barrier(const Problem& problem, const ScalarField& z, double ordering_tol) {
  problem.validate();
  const DomainMesh& mesh = *problem.mesh;
  const AmbientSpace& amb = *problem.ambient;
  z.check(mesh, "z");
  const double top = problem.phi_max();
  BarrierResult out{ScalarField::constant(mesh, top), {}};
  BarrierCertificate& cert = out.certificate;
  cert.kind = "height_upper";
  cert.ordering_tol = ordering_tol;

  const double t_lo = std::min(min_value(z.values), problem.phi_min());
  const bool comparison = t_lo < top ? max_principle_conditions(amb, problem.H, t_lo, top, 256).pass()
                                     : max_principle_conditions(amb, problem.H, top - 1.0, top, 256).pass();
  cert.parameters = {{"value", top}, {"comparison_conditions", comparison}};

  const auto& quad = mesh.lower_order_quadrature();
  const Vec zero = Vec::Zero(mesh.dim());
  const Mat zero_h = Mat::Zero(mesh.dim(), mesh.dim());
  cert.min_margin = kInf;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const auto nodes = mesh.cell(c);
    for (const auto& bary : quad.bary) {
      double H = 0.0;
      for (size_t a = 0; a < nodes.size(); ++a) H += bary[a] * problem.H[nodes[a]];
      const Vec x = mesh.point(c, bary);
      const double q = -strong_Q(amb, x, top, zero, zero_h, H);
      ++cert.checked_points;
      if (q < cert.min_margin) {
        cert.min_margin = q;
        cert.min_location = x;
        cert.min_cell = c;
      }
    }
  }
  double worst = kInf, boundary_worst = kInf;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const double m = top - z[v];
    if (mesh.is_boundary(v)) boundary_worst = std::min(boundary_worst, m);
    if (m < worst) {
      worst = m;
      cert.ordering_vertex = v;
    }
  }
  cert.boundary_margin = boundary_worst;
  cert.ordering_margin = worst;
  cert.valid = comparison && cert.min_margin >= -1e-12 && worst >= -ordering_tol;
  return out;
}

HeightSearch search_height_barrier(const Problem& problem, const ScalarField* z, double ordering_tol,
                                   double b_factor) {
  if (!(b_factor > 1.0)) throw ParameterError("B factor must exceed 1");
  const double B = b_factor * problem.mesh->diameter();
  HeightSearch out;
  for (int j = 0; j <= 20; ++j) {
    const double D = std::ldexp(1.0, j);
    if (D * B > 300.0) break;
    auto r = height_barrier(problem, D, B, z, ordering_tol);
    out.attempts.push_back(r.certificate);
    if (r.certificate.valid) {
      out.result = std::move(r);
      break;
    }
  }
  return out;
}

double boundary_barrier_slope(double mu, double c) { return -c * mu / std::log1p(mu); }

namespace {

// phi carried along d: value at the closest point of the nearest boundary edge.
ScalarField extend_phi(const Problem& P) {
  const DomainMesh& mesh = *P.mesh;
  ScalarField ext = ScalarField::constant(mesh, 0.0);
  const auto& bv = mesh.boundary_vertices();
  std::vector<double> phi_at(mesh.vertex_count(), 0.0);
  for (size_t i = 0; i < bv.size(); ++i) phi_at[bv[i]] = P.phi[i];
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (mesh.is_boundary(v)) {
      ext[v] = phi_at[v];
      continue;
    }
    const Vec& x = mesh.vertex(v);
    double best = kInf;
    double value = 0.0;
    if (mesh.dim() == 1) {
      for (int b : bv) {
        const double dist = std::abs(mesh.vertex(b)(0) - x(0));
        if (dist < best) {
          best = dist;
          value = phi_at[b];
        }
      }
    } else {
      for (const auto& loop : mesh.boundary_loops()) {
        for (size_t i = 0; i < loop.size(); ++i) {
          const int a = loop[i], b = loop[(i + 1) % loop.size()];
          const Vec e = mesh.vertex(b) - mesh.vertex(a);
          const double s = std::clamp((x - mesh.vertex(a)).dot(e) / e.squaredNorm(), 0.0, 1.0);
          const double dist = (x - mesh.vertex(a) - s * e).norm();
          if (dist < best) {
            best = dist;
            value = (1.0 - s) * phi_at[a] + s * phi_at[b];
          }
        }
      }
    }
    ext[v] = value;
  }
  return ext;
}

BarrierResult strip_barrier(const Problem& problem, double mu, double c, double eps, const ScalarField* z,
                            double ordering_tol, bool upper) {
  problem.validate();
  const DomainMesh& mesh = *problem.mesh;
  const AmbientSpace& amb = *problem.ambient;
  if (!(mu > 0.0) || !(c > 0.0) || !(eps > 0.0)) throw ParameterError("boundary barrier needs mu, c, eps > 0");
  const double mut = c / std::log1p(mu);
  const double sign = upper ? -1.0 : 1.0;
  auto f = [&](double d) { return -mut * std::log1p(mu * d); };
  auto fp = [&](double d) { return -mu * mut / (1.0 + mu * d); };

  const auto& d = mesh.dist_to_boundary();
  const ScalarField phi = extend_phi(problem);
  BarrierResult out{ScalarField::constant(mesh, std::nan("")), {}};
  BarrierCertificate& cert = out.certificate;
  cert.kind = upper ? "boundary_upper" : "boundary_lower";
  cert.parameters = {{"mu", mu}, {"mu_tilde", mut}, {"c", c}, {"eps", eps}, {"slope", boundary_barrier_slope(mu, c)}};
  cert.ordering_tol = ordering_tol;
  int strip_vertices = 0;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (d[v] <= eps) {
      out.field[v] = sign * f(d[v]) + phi[v];
      ++strip_vertices;
    }
  }
  if (strip_vertices == static_cast<int>(mesh.boundary_vertices().size())) {
    throw ParameterError("boundary strip d <= " + std::to_string(eps) + " has no interior vertices");
  }

  const auto rd = recover_derivatives(mesh, d);
  const auto rphi = recover_derivatives(mesh, phi.values);
  const auto pts = sample_points(problem, rd, cert.skipped_cells);
  cert.min_margin = kInf;
  for (const auto& s : pts) {
    if (s.d > eps) continue;
    const auto nodes = mesh.cell(s.cell);
    double phi_q = 0.0;
    Vec gphi = Vec::Zero(mesh.dim());
    Mat hphi = Mat::Zero(mesh.dim(), mesh.dim());
    for (size_t a = 0; a < nodes.size(); ++a) {
      phi_q += s.bary[a] * phi[nodes[a]];
      gphi += s.bary[a] * rphi.gradient[nodes[a]];
      hphi += s.bary[a] * rphi.hessian[nodes[a]];
    }
    const double f1 = fp(s.d);
    const double f2 = f1 * f1 / mut;
    const double u = sign * f(s.d) + phi_q;
    const Vec grad = sign * f1 * s.grad_d + gphi;
    const Mat hess = sign * (f2 * s.grad_d * s.grad_d.transpose() + f1 * s.hess_d) + hphi;
    const double q = sign * strong_Q(amb, s.x, u, grad, hess, s.H);
    ++cert.checked_points;
    if (q < cert.min_margin) {
      cert.min_margin = q;
      cert.min_location = s.x;
      cert.min_cell = s.cell;
    }
  }
  if (cert.checked_points == 0) throw ParameterError("boundary strip contains no checkable points");

  bool ordered = true;
  if (z) {
    z->check(mesh, "z");
    double worst = kInf;
    double boundary_worst = kInf;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      if (!(d[v] <= eps)) continue;
      const double m = upper ? out.field[v] - (*z)[v] : (*z)[v] - out.field[v];
      if (mesh.is_boundary(v)) boundary_worst = std::min(boundary_worst, m);
      if (m < worst) {
        worst = m;
        cert.ordering_vertex = v;
      }
    }
    cert.boundary_margin = boundary_worst;
    cert.ordering_margin = worst;
    ordered = worst >= -ordering_tol;
  }
  cert.valid = cert.min_margin > 0.0 && cert.boundary_margin >= -ordering_tol && ordered;
  return out;
}

}  // namespace

BarrierResult boundary_barrier(const Problem& problem, double mu, double c, double eps, const ScalarField* z,
                               double ordering_tol) {
  return strip_barrier(problem, mu, c, eps, z, ordering_tol, false);
}

BarrierResult upper_barrier_check(const Problem& problem, const ScalarField& z, double mu, double c, double eps,
                                  double ordering_tol) {
  return strip_barrier(problem, mu, c, eps, &z, ordering_tol, true);
}

nlohmann::json HeightEnvelope::to_json() const {
  return {{"lower", lower},
          {"upper", upper},
          {"lower_source", lower_source},
          {"upper_source", upper_source},
          {"depth", depth}};
}

HeightEnvelope height_envelope(const Problem& problem, const ScalarField& z) {
  problem.validate();
  z.check(*problem.mesh, "z");
  const AmbientSpace& amb = *problem.ambient;
  HeightEnvelope env;
  env.lower = min_value(z.values);
  env.upper = max_value(z.values);
  env.lower_source = env.upper_source = "solution";

  const auto height = search_height_barrier(problem);
  if (height.result) {
    env.lower = min_value(height.result->field.values);
    env.lower_source = "height_barrier";
  }
  // Constants c >= sup phi satisfy Q[c] <= 0 when rho >= 0 and H >= 0.
  const double top = problem.phi_max();
  const double t_lo = std::min(env.lower, problem.phi_min());
  bool supersolution = min_value(problem.H.values) >= 0.0;
  if (supersolution) {
    const auto mp = max_principle_conditions(amb, problem.H, t_lo, top, 256);
    supersolution = mp.pass();
    for (int i = 0; i < 256 && supersolution; ++i) {
      supersolution = amb.lambda_t(t_lo + (top - t_lo) * i / 255.0) >= 0.0;
    }
  }
  if (supersolution) {
    env.upper = top;
    env.upper_source = "maximum_principle";
  }
  env.depth = std::max({problem.phi_max() - env.lower, env.upper - problem.phi_min(), 0.0});
  return env;
}

BoundarySearch search_boundary_barrier(const Problem& problem, const ScalarField& z, double eps,
                                       double ordering_tol) {
  BoundarySearch out;
  out.envelope = height_envelope(problem, z);
  for (int j = 0; j <= 8; ++j) {
    const double mu = std::pow(10.0, j);
    for (int k = 0; k <= 16; ++k) {
      const double c = 0.01 * std::ldexp(1.0, k);
      if (c * std::log1p(mu * eps) / std::log1p(mu) < out.envelope.depth) continue;
      auto lower = boundary_barrier(problem, mu, c, eps, &z, ordering_tol);
      out.attempts.push_back(lower.certificate);
      if (!(lower.certificate.min_margin > 0.0)) continue;
      auto upper = upper_barrier_check(problem, z, mu, c, eps, ordering_tol);
      out.attempts.push_back(upper.certificate);
      if (!(upper.certificate.min_margin > 0.0)) continue;
      out.lower = std::move(lower);
      out.upper = std::move(upper);
      return out;
    }
  }
  return out;
}

std::vector<double> inward_normal_derivative(const Problem& problem, const ScalarField& z) {
  const DomainMesh& mesh = *problem.mesh;
  std::vector<double> out;
  for (int v : mesh.boundary_vertices()) {
    const Vec& eta = mesh.boundary_normal(v);
    double sum = 0.0;
    const auto& cells = mesh.cells_of_vertex(v);
    for (int c : cells) {
      const auto nodes = mesh.cell(c);
      const Mat& G = mesh.basis_gradients(c);
      Vec g = Vec::Zero(mesh.dim());
      for (size_t a = 0; a < nodes.size(); ++a) g += z[nodes[a]] * G.col(a);
      sum += g.dot(eta);
    }
    out.push_back(sum / cells.size());
  }
  return out;
}

// ---------------------------------------------------------------- comparison

nlohmann::json ComparisonResult::to_json() const {
  return {{"ordered", ordered},
          {"direction", direction},
          {"worst_violation", worst_violation},
          {"worst_vertex", worst_vertex},
          {"worst_location", worst_location.size() ? vec_json(worst_location) : nlohmann::json(nullptr)},
          {"note", note}};
}

ComparisonResult comparison_check(const Problem& p1, const Problem& p2, const ScalarField& z1,
                                  const ScalarField& z2, double tol) {
  if (p1.mesh->id() != p2.mesh->id()) throw ParameterError("comparison needs both problems on the same mesh");
  const DomainMesh& mesh = *p1.mesh;
  z1.check(mesh, "z1");
  z2.check(mesh, "z2");
  bool le = true, ge = true;
  for (size_t i = 0; i < p1.phi.size(); ++i) {
    le = le && p1.phi[i] <= p2.phi[i];
    ge = ge && p1.phi[i] >= p2.phi[i];
  }
  ComparisonResult out;
  const bool swap = !le && ge;
  out.direction = swap ? "z2<=z1" : "z1<=z2";
  if (!le && !ge) out.note = "boundary data are not ordered; checked z1 <= z2";
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (p1.H[v] != p2.H[v]) {
      out.note += (out.note.empty() ? "" : "; ") + std::string("H fields differ");
      break;
    }
  }
  const ScalarField& lo = swap ? z2 : z1;
  const ScalarField& hi = swap ? z1 : z2;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const double excess = lo[v] - hi[v];
    if (out.worst_vertex < 0 || excess > out.worst_violation) {
      out.worst_violation = excess;
      out.worst_vertex = v;
    }
  }
  out.worst_location = mesh.vertex(out.worst_vertex);
  out.ordered = out.worst_violation <= tol;
  return out;
}

// ------------------------------------------------------- level-set curvature

std::vector<LevelCurve> extract_level_curves(const DomainMesh& mesh, const std::vector<double>& values,
                                             double level) {
  std::vector<LevelCurve> curves;
  // Nudge the level off vertex values so every crossing lies inside an edge.
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  const double nudge = 1e-9 * std::max(scale, 1.0);
  for (int guard = 0; guard < 8; ++guard) {
    bool hit = false;
    for (double v : values) hit = hit || std::abs(v - level) < 0.5 * nudge;
    if (!hit) break;
    level += nudge;
  }
  auto above = [&](int v) { return values[v] >= level; };
  auto crossing = [&](int a, int b) {
    const double s = (level - values[a]) / (values[b] - values[a]);
    return Vec(mesh.vertex(a) + s * (mesh.vertex(b) - mesh.vertex(a)));
  };
  if (mesh.dim() == 1) {
    for (int c = 0; c < mesh.cell_count(); ++c) {
      const auto nodes = mesh.cell(c);
      if (above(nodes[0]) != above(nodes[1])) curves.push_back({{crossing(nodes[0], nodes[1])}, {c}, false});
    }
    return curves;
  }

  using Edge = std::pair<int, int>;
  struct Segment {
    Edge e[2];
    int cell;
  };
  std::vector<Segment> segments;
  std::map<Edge, std::vector<int>> by_edge;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const auto nodes = mesh.cell(c);
    std::vector<Edge> cut;
    for (int k = 0; k < 3; ++k) {
      const int a = nodes[k], b = nodes[(k + 1) % 3];
      if (above(a) != above(b)) cut.push_back(a < b ? Edge{a, b} : Edge{b, a});
    }
    if (cut.size() != 2) continue;
    const int id = static_cast<int>(segments.size());
    segments.push_back({{cut[0], cut[1]}, c});
    by_edge[cut[0]].push_back(id);
    by_edge[cut[1]].push_back(id);
  }

  std::vector<bool> used(segments.size(), false);
  auto other_segment = [&](const Edge& e, int seg) {
    for (int s : by_edge[e]) {
      if (s != seg && !used[s]) return s;
    }
    return -1;
  };
  // Start open curves at edges touched by a single segment, then sweep loops.
  std::vector<int> starts;
  for (const auto& [e, segs] : by_edge) {
    if (segs.size() == 1) starts.push_back(segs[0]);
  }
  for (size_t s = 0; s < segments.size(); ++s) starts.push_back(static_cast<int>(s));

  for (int s0 : starts) {
    if (used[s0]) continue;
    LevelCurve curve;
    Edge entry = segments[s0].e[0];
    if (by_edge[segments[s0].e[0]].size() != 1 && by_edge[segments[s0].e[1]].size() == 1) {
      entry = segments[s0].e[1];
    }
    const Edge first = entry;
    curve.points.push_back(crossing(entry.first, entry.second));
    curve.cells.push_back(segments[s0].cell);
    int seg = s0;
    while (seg >= 0) {
      used[seg] = true;
      const Edge exit = segments[seg].e[0] == entry ? segments[seg].e[1] : segments[seg].e[0];
      if (exit == first) {
        curve.closed = true;
        break;
      }
      curve.points.push_back(crossing(exit.first, exit.second));
      curve.cells.push_back(segments[seg].cell);
      entry = exit;
      seg = other_segment(exit, seg);
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

nlohmann::json MonotonicityProbe::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"eps", r.eps},
                         {"skipped", r.skipped},
                         {"note", r.note},
                         {"analytic", r.analytic},
                         {"points", r.points},
                         {"min_HK", r.points ? nlohmann::json(r.min_HK) : nlohmann::json(nullptr)},
                         {"max_HK", r.points ? nlohmann::json(r.max_HK) : nlohmann::json(nullptr)}});
  }
  return {{"inf_HK", inf_HK}, {"tol", tol}, {"monotone", monotone}, {"rows", rows_json}};
}

MonotonicityProbe cylinder_monotonicity_probe(const Problem& problem, const std::vector<double>& depths,
                                              double tol) {
  problem.validate();
  const DomainMesh& mesh = *problem.mesh;
  const AmbientSpace& amb = *problem.ambient;
  const auto& d = mesh.dist_to_boundary();
  MonotonicityProbe out{inf_cylinder_curvature(problem), tol, {}, false};
  double min_all = kInf;
  for (double eps : depths) {
    MonotonicityRow row;
    row.eps = eps;
    const auto curves = extract_level_curves(mesh, d, eps);
    if (curves.empty()) {
      row.skipped = true;
      row.note = "level set not found";
      out.rows.push_back(row);
      continue;
    }
    const auto& preset = mesh.preset();
    row.analytic = preset.has_value();
    int suspect = 0;
    for (const auto& curve : curves) {
      const size_t m = curve.points.size();
      for (size_t i = 0; i < m; ++i) {
        const int c = curve.cells[i];
        if (mesh.cut_locus_suspect()[c]) {
          ++suspect;
          continue;
        }
        const Vec& x = curve.points[i];
        const auto nodes = mesh.cell(c);
        Vec g = Vec::Zero(mesh.dim());
        for (size_t a = 0; a < nodes.size(); ++a) g += d[nodes[a]] * mesh.basis_gradients(c).col(a);
        const Vec eta = unit_direction(mesh.metric(), x, g);
        double h_gamma = 0.0;
        if (preset) {
          bool outer = true;
          if (preset->kind == PresetShape::Kind::annulus) {
            outer = std::abs(x.norm() - (preset->b - eps)) < std::abs(x.norm() - (preset->a + eps));
          }
          const auto value = preset_level_curvature(*preset, eps, outer);
          if (!value) continue;
          h_gamma = *value;
        } else if (mesh.dim() == 2) {
          // Neighbours at least one mesh size away along the curve.
          const double reach = mesh.mesh_size();
          auto walk = [&](int step) -> std::optional<size_t> {
            size_t j = i;
            for (size_t k = 1; k < m; ++k) {
              const long next = static_cast<long>(j) + step;
              if (!curve.closed && (next < 0 || next >= static_cast<long>(m))) return std::nullopt;
              j = static_cast<size_t>((next + static_cast<long>(m)) % static_cast<long>(m));
              if ((curve.points[j] - x).norm() >= reach) return j;
            }
            return std::nullopt;
          };
          const auto prev = walk(-1);
          const auto next = walk(1);
          if (!prev || !next || *prev == *next) continue;
          bool low = false;
          h_gamma = DomainMesh::polyline_curvature(mesh.metric(), curve.points[*prev], x, curve.points[*next], eta,
                                                   &low);
          if (low) continue;
        }
        const double hk = amb.cylinder_mean_curvature(0.0, x, eta, h_gamma);
        row.min_HK = std::min(row.min_HK, hk);
        row.max_HK = std::max(row.max_HK, hk);
        ++row.points;
      }
    }
    if (row.points == 0) {
      row.skipped = true;
      row.note = suspect ? "level set lies in cut-locus suspect cells" : "no usable level-set points";
    } else {
      min_all = std::min(min_all, row.min_HK);
      if (suspect) row.note = std::to_string(suspect) + " points in suspect cells skipped";
    }
    out.rows.push_back(row);
  }
  out.monotone = std::isfinite(min_all) && min_all >= out.inf_HK - tol;
  return out;
}

}  // namespace ckg
