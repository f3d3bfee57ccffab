#include "ckg/problem_file.hpp"

#include "ckg/expression.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace ckg {

bool ProblemFile::requests(const std::string& check) const {
  return std::find(checks.begin(), checks.end(), check) != checks.end();
}

double ProblemFile::ordering_tol() const {
  if (barrier.ordering_tol) return *barrier.ordering_tol;
  const double h = problem.mesh->mesh_size();
  return h * h;
}

namespace {

using nlohmann::json;

std::string join(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }

std::string type_name(const json& v) { return v.type_name(); }

// Thin accessors that report failures with the JSON pointer of the value.
const json& object(const json& v, const std::string& ptr, std::initializer_list<const char*> allowed) {
  if (!v.is_object()) throw SchemaError(ptr, "expected an object, got " + type_name(v));
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, _] : v.items()) {
    if (!keys.count(key)) {
      std::string list;
      for (const auto& k : allowed) list += (list.empty() ? "" : ", ") + std::string(k);
      throw SchemaError(join(ptr, key), "unknown key (allowed: " + list + ")");
    }
  }
  return v;
}

double number(const json& v, const std::string& ptr) {
  if (!v.is_number()) throw SchemaError(ptr, "expected a number, got " + type_name(v));
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw SchemaError(ptr, "expected a finite number");
  return x;
}

double positive(const json& v, const std::string& ptr) {
  const double x = number(v, ptr);
  if (!(x > 0.0)) throw SchemaError(ptr, "expected a positive number");
  return x;
}

int integer(const json& v, const std::string& ptr) {
  if (!v.is_number_integer()) throw SchemaError(ptr, "expected an integer, got " + type_name(v));
  return v.get<int>();
}

std::string string(const json& v, const std::string& ptr) {
  if (!v.is_string()) throw SchemaError(ptr, "expected a string, got " + type_name(v));
  return v.get<std::string>();
}

const json& required(const json& obj, const std::string& ptr, const char* key) {
  if (!obj.contains(key)) throw SchemaError(join(ptr, key), "missing required key");
  return obj.at(key);
}

std::vector<std::string> chart_variables(int dim) {
  return dim == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x", "y"};
}

Expression expression(const json& v, const std::string& ptr, const std::vector<std::string>& vars) {
  const std::string text = string(v, ptr);
  try {
    return Expression::parse(text, vars);
  } catch (const ExpressionError& e) {
    throw SchemaError(ptr, e.what());
  }
}

// Chart-coordinate function u -> value from an expression over x (and y).
std::function<double(const Vec&)> chart_function(Expression e) {
  return [e = std::move(e)](const Vec& u) {
    return u.size() == 1 ? e({u(0)}) : e({u(0), u(1)});
  };
}

std::function<Vec(const Vec&)> chart_gradient(const json& v, const std::string& ptr, int dim) {
  if (!v.is_array() || static_cast<int>(v.size()) != dim) {
    throw SchemaError(ptr, "expected an array of " + std::to_string(dim) + " expressions");
  }
  std::vector<std::function<double(const Vec&)>> parts;
  for (int i = 0; i < dim; ++i) {
    parts.push_back(chart_function(expression(v[i], join(ptr, std::to_string(i)), chart_variables(dim))));
  }
  return [parts](const Vec& u) {
    Vec g(static_cast<int>(parts.size()));
    for (size_t i = 0; i < parts.size(); ++i) g(static_cast<int>(i)) = parts[i](u);
    return g;
  };
}

// ------------------------------------------------------------------ ambient

std::shared_ptr<const AmbientSpace> preset_ambient_from(const json& v, const std::string& ptr) {
  object(v, ptr, {"preset", "base", "dim", "psi", "psi_gradient"});
  const std::string name = string(v.at("preset"), join(ptr, "preset"));
  PresetParams params;
  if (v.contains("dim")) params.dim = integer(v.at("dim"), join(ptr, "dim"));
  if (params.dim != 1 && params.dim != 2) throw SchemaError(join(ptr, "dim"), "only n = 1 and n = 2 are supported");
  if (v.contains("base")) params.base = string(v.at("base"), join(ptr, "base"));
  if (v.contains("psi")) {
    params.psi = chart_function(expression(v.at("psi"), join(ptr, "psi"), chart_variables(params.dim)));
  }
  if (v.contains("psi_gradient")) {
    if (!v.contains("psi")) throw SchemaError(join(ptr, "psi_gradient"), "given without psi");
    params.psi_gradient = chart_gradient(v.at("psi_gradient"), join(ptr, "psi_gradient"), params.dim);
  }
  try {
    return preset_ambient(name, params);
  } catch (const ParameterError& e) {
    throw SchemaError(join(ptr, "preset"), e.what());
  }
}

std::shared_ptr<const AmbientSpace> custom_ambient_from(const json& v, const std::string& ptr) {
  object(v, ptr,
         {"name", "lambda", "lambda_t", "lambda_tt", "interval_end", "gamma", "gamma_gradient", "base", "dim",
          "curvature", "killing"});
  const std::string name = v.contains("name") ? string(v.at("name"), join(ptr, "name")) : "custom";
  const int dim = v.contains("dim") ? integer(v.at("dim"), join(ptr, "dim")) : 2;
  if (dim != 1 && dim != 2) throw SchemaError(join(ptr, "dim"), "only n = 1 and n = 2 are supported");
  const auto vars = chart_variables(dim);

  // lambda(t)
  auto of_t = [](Expression e) { return [e = std::move(e)](double t) { return e({t}); }; };
  const Expression lam = expression(required(v, ptr, "lambda"), join(ptr, "lambda"), {"t"});
  const double end = v.contains("interval_end") ? number(v.at("interval_end"), join(ptr, "interval_end")) : kInf;
  if (!(end > 0.0)) throw SchemaError(join(ptr, "interval_end"), "interval_end must be positive");
  if (v.contains("lambda_t") != v.contains("lambda_tt")) {
    throw SchemaError(join(ptr, v.contains("lambda_t") ? "lambda_tt" : "lambda_t"),
                      "lambda_t and lambda_tt must be given together");
  }
  ConformalFactor factor;
  if (v.contains("lambda_t")) {
    factor.value = of_t(lam);
    factor.first = of_t(expression(v.at("lambda_t"), join(ptr, "lambda_t"), {"t"}));
    factor.second = of_t(expression(v.at("lambda_tt"), join(ptr, "lambda_tt"), {"t"}));
    factor.interval_end = end;
  } else {
    factor = ConformalFactor::with_finite_differences(of_t(lam), end);
  }

  // gamma(u)
  GammaField gamma = GammaField::constant_value(1.0, dim);
  if (v.contains("gamma")) {
    const json& g = v.at("gamma");
    if (g.is_number()) {
      gamma = GammaField::constant_value(positive(g, join(ptr, "gamma")), dim);
      if (v.contains("gamma_gradient")) throw SchemaError(join(ptr, "gamma_gradient"), "gamma is constant");
    } else {
      const Expression ge = expression(g, join(ptr, "gamma"), vars);
      if (ge.is_constant()) {
        const double g0 = dim == 1 ? ge({0.0}) : ge({0.0, 0.0});
        if (!(g0 > 0.0)) throw SchemaError(join(ptr, "gamma"), "gamma must be positive");
        gamma = GammaField::constant_value(g0, dim);
      } else if (v.contains("gamma_gradient")) {
        gamma.value = chart_function(ge);
        gamma.gradient = chart_gradient(v.at("gamma_gradient"), join(ptr, "gamma_gradient"), dim);
        gamma.constant = false;
      } else {
        gamma = GammaField::with_finite_differences(chart_function(ge), dim);
      }
    }
  }

  // sigma and its curvature model
  std::shared_ptr<const BaseMetric> base;
  CurvatureModel curvature = CurvatureModel::unavailable();
  const json base_spec = v.contains("base") ? v.at("base") : json("flat");
  const std::string bptr = join(ptr, "base");
  if (base_spec.is_string()) {
    const std::string kind = base_spec.get<std::string>();
    if (kind == "flat") {
      base = BaseMetric::flat(dim);
      curvature = CurvatureModel::flat();
    } else if (kind == "sphere" || kind == "hyperbolic") {
      if (dim != 2) throw SchemaError(bptr, kind + " base needs dim = 2");
      base = kind == "sphere" ? BaseMetric::round_sphere() : BaseMetric::hyperbolic_disk();
      curvature = CurvatureModel::constant(kind == "sphere" ? 1.0 : -1.0);
    } else {
      throw SchemaError(bptr, "unknown base '" + kind + "' (flat, sphere, hyperbolic or {conformal, gradient})");
    }
  } else {
    object(base_spec, bptr, {"conformal", "gradient"});
    const Expression omega = expression(required(base_spec, bptr, "conformal"), join(bptr, "conformal"), vars);
    auto grad = chart_gradient(required(base_spec, bptr, "gradient"), join(bptr, "gradient"), dim);
    base = BaseMetric::conformal(dim, "conformal:" + omega.text(), chart_function(omega), grad);
  }
  if (v.contains("curvature")) {
    const json& c = v.at("curvature");
    const std::string cptr = join(ptr, "curvature");
    if (c.is_string() && c.get<std::string>() == "flat") {
      curvature = CurvatureModel::flat();
    } else if (c.is_string() && c.get<std::string>() == "unavailable") {
      curvature = CurvatureModel::unavailable();
    } else if (c.is_object()) {
      object(c, cptr, {"constant"});
      curvature = CurvatureModel::constant(number(required(c, cptr, "constant"), join(cptr, "constant")));
    } else {
      throw SchemaError(cptr, "expected \"flat\", \"unavailable\" or {\"constant\": k}");
    }
  }

  bool killing = false;
  if (v.contains("killing")) {
    if (!v.at("killing").is_boolean()) throw SchemaError(join(ptr, "killing"), "expected a boolean");
    killing = v.at("killing").get<bool>();
  }
  try {
    auto amb = std::make_shared<const AmbientSpace>(name, std::move(factor), std::move(gamma), base, curvature,
                                                    killing);
    if (killing) {
      for (double t : {-2.0, -1.0, -0.5, 0.0}) {
        if (std::abs(amb->lambda_t(t)) > 1e-10) {
          throw SchemaError(join(ptr, "killing"), "lambda is not constant");
        }
      }
    }
    return amb;
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(ptr, e.what());
  }
}

std::shared_ptr<const AmbientSpace> ambient_from(const json& v, const std::string& ptr) {
  if (!v.is_object()) throw SchemaError(ptr, "expected an object, got " + type_name(v));
  if (v.contains("custom")) {
    object(v, ptr, {"custom"});
    return custom_ambient_from(v.at("custom"), join(ptr, "custom"));
  }
  if (!v.contains("preset")) throw SchemaError(ptr, "needs either \"preset\" or \"custom\"");
  return preset_ambient_from(v, ptr);
}

// ------------------------------------------------------------------- domain

std::shared_ptr<const DomainMesh> domain_from(const json& doc, const AmbientSpace& amb,
                                              const std::filesystem::path& base_dir) {
  const std::string ptr = "/domain";
  const json& v = required(doc, "", "domain");
  if (!v.is_object()) throw SchemaError(ptr, "expected an object, got " + type_name(v));
  if (v.contains("mesh")) {
    object(v, ptr, {"mesh"});
    const std::filesystem::path path = base_dir / string(v.at("mesh"), join(ptr, "mesh"));
    std::ifstream in(path);
    if (!in) throw SchemaError(join(ptr, "mesh"), "cannot open mesh file " + path.string());
    json mesh_doc;
    try {
      in >> mesh_doc;
    } catch (const json::exception& e) {
      throw SchemaError(join(ptr, "mesh"), std::string("mesh file is not valid JSON: ") + e.what());
    }
    return DomainMesh::from_json(mesh_doc, amb.base_ptr());
  }

  const std::string kind = string(required(v, ptr, "preset"), join(ptr, "preset"));
  if (!doc.contains("resolution")) throw SchemaError("/resolution", "required for preset domains");
  const double h = positive(doc.at("resolution"), "/resolution");
  std::shared_ptr<const DomainMesh> mesh;
  std::string natural = "flat";
  const int want_dim = kind == "interval" ? 1 : 2;
  if (amb.n() != want_dim) {
    throw SchemaError(join(ptr, "preset"), kind + " domains need n = " + std::to_string(want_dim));
  }
  if (kind == "disk") {
    object(v, ptr, {"preset", "radius"});
    mesh = make_disk_mesh(positive(required(v, ptr, "radius"), join(ptr, "radius")), h);
  } else if (kind == "annulus") {
    object(v, ptr, {"preset", "inner", "outer"});
    const double a = positive(required(v, ptr, "inner"), join(ptr, "inner"));
    const double b = positive(required(v, ptr, "outer"), join(ptr, "outer"));
    if (!(b > a)) throw SchemaError(join(ptr, "outer"), "outer radius must exceed the inner radius");
    mesh = make_annulus_mesh(a, b, h);
  } else if (kind == "cap") {
    object(v, ptr, {"preset", "theta0"});
    const double t0 = positive(required(v, ptr, "theta0"), join(ptr, "theta0"));
    if (!(t0 < std::acos(-1.0))) throw SchemaError(join(ptr, "theta0"), "theta0 must be below pi");
    mesh = make_cap_mesh(t0, h);
    natural = "sphere";
  } else if (kind == "interval") {
    object(v, ptr, {"preset", "a", "b"});
    const double a = number(required(v, ptr, "a"), join(ptr, "a"));
    const double b = number(required(v, ptr, "b"), join(ptr, "b"));
    if (!(b > a)) throw SchemaError(join(ptr, "b"), "b must exceed a");
    mesh = make_interval_mesh(a, b, h);
  } else {
    throw SchemaError(join(ptr, "preset"), "unknown domain preset '" + kind + "' (disk, annulus, cap, interval)");
  }
  // Under a different base metric only the triangulation is reused; boundary
  // data and distances are then computed discretely.
  if (amb.base().tag() != natural) mesh = DomainMesh::from_json(mesh->to_json(), amb.base_ptr());
  return mesh;
}

// ------------------------------------------------------------------- fields

ScalarField field_from(const json& doc, const char* key, const DomainMesh& mesh,
                       const std::filesystem::path& base_dir) {
  const std::string ptr = std::string("/") + key;
  const json& v = required(doc, "", key);
  if (v.is_number()) return ScalarField::constant(mesh, number(v, ptr));
  if (!v.is_object() || v.size() != 1) {
    throw SchemaError(ptr, "expected a number or an object with one of constant, expression, csv");
  }
  object(v, ptr, {"constant", "expression", "csv"});
  if (v.contains("constant")) return ScalarField::constant(mesh, number(v.at("constant"), join(ptr, "constant")));
  if (v.contains("csv")) {
    const std::filesystem::path path = base_dir / string(v.at("csv"), join(ptr, "csv"));
    try {
      return read_field_csv(path, mesh);
    } catch (const std::exception& e) {
      throw SchemaError(join(ptr, "csv"), e.what());
    }
  }
  const std::string eptr = join(ptr, "expression");
  const std::string text = string(v.at("expression"), eptr);
  try {
    const auto fn = chart_function(Expression::parse(text, chart_variables(mesh.dim())));
    ScalarField f = ScalarField::sample(mesh, fn);
    for (int i = 0; i < f.size(); ++i) {
      if (!std::isfinite(f[i])) throw SchemaError(eptr, "not finite at vertex " + std::to_string(i));
    }
    return f;
  } catch (const ExpressionError& e) {
    if (e.identifier == "t") {
      throw SchemaError(eptr, std::string(key) + " must be a function of the chart coordinates only; " +
                                  "t-dependent data is not supported");
    }
    throw SchemaError(eptr, e.what());
  }
}

SolverOptions solver_from(const json& doc) {
  SolverOptions opt;
  if (!doc.contains("solver")) return opt;
  const std::string ptr = "/solver";
  const json& v = object(doc.at("solver"), ptr,
                         {"newton_tol", "max_newton_iters", "initial_tau_step", "min_tau_step", "damping",
                          "max_halvings", "clamp_margin"});
  if (v.contains("newton_tol")) opt.newton_tol = number(v.at("newton_tol"), join(ptr, "newton_tol"));
  if (v.contains("max_newton_iters")) {
    opt.max_newton_iters = integer(v.at("max_newton_iters"), join(ptr, "max_newton_iters"));
  }
  if (v.contains("initial_tau_step")) {
    opt.initial_tau_step = number(v.at("initial_tau_step"), join(ptr, "initial_tau_step"));
  }
  if (v.contains("min_tau_step")) opt.min_tau_step = number(v.at("min_tau_step"), join(ptr, "min_tau_step"));
  if (v.contains("damping")) opt.damping = number(v.at("damping"), join(ptr, "damping"));
  if (v.contains("max_halvings")) opt.max_halvings = integer(v.at("max_halvings"), join(ptr, "max_halvings"));
  if (v.contains("clamp_margin")) opt.clamp_margin = number(v.at("clamp_margin"), join(ptr, "clamp_margin"));
  try {
    opt.validate();
  } catch (const ParameterError& e) {
    throw SchemaError(ptr, e.what());
  }
  return opt;
}

}  // namespace

ProblemFile parse_problem_file(const json& doc, const std::filesystem::path& base_dir) {
  object(doc, "",
         {"name", "description", "ambient", "domain", "resolution", "H", "phi", "solver", "checks", "verify",
          "barrier", "probe"});
  ProblemFile pf;
  if (doc.contains("name")) pf.name = string(doc.at("name"), "/name");
  if (doc.contains("description")) string(doc.at("description"), "/description");

  const auto amb = ambient_from(required(doc, "", "ambient"), "/ambient");
  const auto mesh = domain_from(doc, *amb, base_dir);
  ScalarField H = field_from(doc, "H", *mesh, base_dir);
  const ScalarField phi = field_from(doc, "phi", *mesh, base_dir);
  const SolverOptions options = solver_from(doc);

  if (doc.contains("checks")) {
    const json& c = doc.at("checks");
    if (!c.is_array()) throw SchemaError("/checks", "expected an array of strings");
    pf.checks.clear();
    for (size_t i = 0; i < c.size(); ++i) {
      const std::string ptr = "/checks/" + std::to_string(i);
      const std::string name = string(c[i], ptr);
      if (std::find(kKnownChecks.begin(), kKnownChecks.end(), name) == kKnownChecks.end()) {
        std::string list;
        for (const auto& k : kKnownChecks) list += (list.empty() ? "" : ", ") + k;
        throw SchemaError(ptr, "unknown check '" + name + "' (known: " + list + ")");
      }
      pf.checks.push_back(name);
    }
  }
  if (doc.contains("verify")) {
    const json& v = object(doc.at("verify"), "/verify", {"tolerance", "norm"});
    if (v.contains("tolerance")) pf.verify.tolerance = positive(v.at("tolerance"), "/verify/tolerance");
    if (v.contains("norm")) {
      pf.verify.norm = string(v.at("norm"), "/verify/norm");
      if (pf.verify.norm != "max" && pf.verify.norm != "mean") {
        throw SchemaError("/verify/norm", "expected \"max\" or \"mean\"");
      }
    }
  }
  if (doc.contains("barrier")) {
    const json& v = object(doc.at("barrier"), "/barrier", {"D", "B", "b_factor", "mu", "c", "eps", "ordering_tol"});
    auto& b = pf.barrier;
    if (v.contains("D")) b.D = positive(v.at("D"), "/barrier/D");
    if (v.contains("B")) b.B = positive(v.at("B"), "/barrier/B");
    if (v.contains("b_factor")) b.b_factor = positive(v.at("b_factor"), "/barrier/b_factor");
    if (v.contains("mu")) b.mu = positive(v.at("mu"), "/barrier/mu");
    if (v.contains("c")) b.c = positive(v.at("c"), "/barrier/c");
    if (v.contains("eps")) b.eps = positive(v.at("eps"), "/barrier/eps");
    if (v.contains("ordering_tol")) {
      b.ordering_tol = number(v.at("ordering_tol"), "/barrier/ordering_tol");
      if (*b.ordering_tol < 0.0) throw SchemaError("/barrier/ordering_tol", "must be nonnegative");
    }
    if (b.mu.has_value() != b.c.has_value()) {
      throw SchemaError(b.mu ? "/barrier/c" : "/barrier/mu", "mu and c must be given together");
    }
  }
  if (doc.contains("probe")) {
    const json& v = object(doc.at("probe"), "/probe", {"depths", "tol"});
    if (v.contains("depths")) {
      const json& d = v.at("depths");
      if (!d.is_array() || d.empty()) throw SchemaError("/probe/depths", "expected a nonempty array of numbers");
      pf.probe.depths.clear();
      for (size_t i = 0; i < d.size(); ++i) pf.probe.depths.push_back(positive(d[i], "/probe/depths/" + std::to_string(i)));
    }
    if (v.contains("tol")) pf.probe.tol = positive(v.at("tol"), "/probe/tol");
  }

  pf.problem = make_problem(amb, mesh, std::move(H), phi, options);
  return pf;
}

ProblemFile load_problem_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("", "cannot open problem file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw SchemaError("", std::string("problem file is not valid JSON: ") + e.what());
  }
  ProblemFile pf = parse_problem_file(doc, path.parent_path());
  pf.source = path;
  return pf;
}

}  // namespace ckg
