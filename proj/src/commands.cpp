#include "ckg/commands.hpp"

#include "ckg/analysis.hpp"
#include "ckg/solver.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>

namespace ckg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json problem_summary(const ProblemFile& pf) {
  const DomainMesh& mesh = *pf.problem.mesh;
  return {{"source", pf.source.string()},
          {"name", pf.name},
          {"ambient", pf.problem.ambient->name()},
          {"n", pf.problem.n()},
          {"finite_difference_derivatives", pf.problem.ambient->finite_difference_derivatives()},
          {"mesh",
           {{"vertices", mesh.vertex_count()},
            {"cells", mesh.cell_count()},
            {"boundary_vertices", mesh.boundary_vertices().size()},
            {"h", mesh.mesh_size()},
            {"diameter", mesh.diameter()},
            {"preset", mesh.preset().has_value()}}},
          {"checks", pf.checks}};
}

json attempts_json(const std::vector<BarrierCertificate>& attempts) {
  json a = json::array();
  for (const auto& c : attempts) {
    a.push_back({{"kind", c.kind},
                 {"parameters", c.parameters},
                 {"min_margin", std::isfinite(c.min_margin) ? json(c.min_margin) : json(nullptr)},
                 {"ordering_margin", c.ordering_margin ? json(*c.ordering_margin) : json(nullptr)},
                 {"valid", c.valid}});
  }
  return a;
}

json height_section(const ProblemFile& pf, const ScalarField& z, bool& valid) {
  const Problem& P = pf.problem;
  const double tol = pf.ordering_tol();
  const double diam = P.mesh->diameter();
  if (pf.barrier.B && !(*pf.barrier.B > diam)) {
    throw ParameterError("barrier B = " + std::to_string(*pf.barrier.B) + " must exceed the domain diameter " +
                         std::to_string(diam));
  }
  const double b_factor = pf.barrier.B ? *pf.barrier.B / diam : pf.barrier.b_factor;
  std::optional<BarrierResult> found;
  std::vector<BarrierCertificate> attempts;
  if (pf.barrier.D) {
    auto r = height_barrier(P, *pf.barrier.D, b_factor * diam, &z, tol);
    attempts.push_back(r.certificate);
    found = std::move(r);
  } else {
    auto s = search_height_barrier(P, &z, tol, b_factor);
    attempts = std::move(s.attempts);
    found = std::move(s.result);
  }
  // The constant sup phi bounds z from above whenever it is a supersolution.
  const auto upper = constant_upper_barrier(P, z, tol).certificate;
  const bool upper_applies =
      upper.parameters.at("comparison_conditions").get<bool>() && upper.min_margin >= -1e-12;
  const bool ok = found && found->certificate.valid && (!upper_applies || upper.valid);
  valid = valid && ok;
  return {{"valid", ok},
          {"certificate", found ? found->certificate.to_json() : json(nullptr)},
          {"upper", upper.to_json()},
          {"upper_applies", upper_applies},
          {"attempts", attempts_json(attempts)}};
}

json boundary_section(const ProblemFile& pf, const ScalarField& z, bool& valid) {
  const Problem& P = pf.problem;
  const double tol = pf.ordering_tol();
  const double eps = pf.barrier.eps;
  std::optional<BarrierResult> lower, upper;
  std::vector<BarrierCertificate> attempts;
  json envelope = nullptr;
  if (pf.barrier.mu) {
    lower = boundary_barrier(P, *pf.barrier.mu, *pf.barrier.c, eps, &z, tol);
    upper = upper_barrier_check(P, z, *pf.barrier.mu, *pf.barrier.c, eps, tol);
    attempts = {lower->certificate, upper->certificate};
  } else {
    auto s = search_boundary_barrier(P, z, eps, tol);
    envelope = s.envelope.to_json();
    lower = std::move(s.lower);
    upper = std::move(s.upper);
    attempts = std::move(s.attempts);
  }
  const bool ok = lower && upper && lower->certificate.valid && upper->certificate.valid;
  valid = valid && ok;
  json out = {{"valid", ok},
              {"eps", eps},
              {"envelope", envelope},
              {"lower", lower ? lower->certificate.to_json() : json(nullptr)},
              {"upper", upper ? upper->certificate.to_json() : json(nullptr)},
              {"attempts", attempts_json(attempts)},
              {"gradient_bracket", nullptr}};
  if (ok) {
    // Slope bracket implied by the two barriers, with an O(h) allowance for
    // the one-sided discrete derivative.
    const auto& p = lower->certificate.parameters;
    const double slope = boundary_barrier_slope(p.at("mu").get<double>(), p.at("c").get<double>());
    const auto dn = inward_normal_derivative(P, z);
    double lo = kInf, hi = -kInf;
    for (double v : dn) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double allowance = P.mesh->mesh_size();
    out["gradient_bracket"] = {{"lower", slope},
                               {"upper", std::abs(slope)},
                               {"min_normal_derivative", lo},
                               {"max_normal_derivative", hi},
                               {"allowance", allowance},
                               {"holds", lo >= slope - allowance && hi <= std::abs(slope) + allowance}};
  }
  return out;
}

int input_error(std::ostream& err, const std::exception& e) {
  err << "error: " << e.what() << '\n';
  return kExitInputError;
}

}  // namespace

json certify_solution(const ProblemFile& pf, const ScalarField& z, bool all, bool& valid) {
  z.check(*pf.problem.mesh, "solution");
  json out = json::object();
  if (all || pf.requests("height_barrier")) out["height"] = height_section(pf, z, valid);
  if (all || pf.requests("boundary_barrier")) out["boundary"] = boundary_section(pf, z, valid);
  out["ordering_tol"] = pf.ordering_tol();
  out["valid"] = valid;
  return out;
}

json verify_solution(const ProblemFile& pf, const ScalarField& z, bool& pass) {
  const Problem& P = pf.problem;
  const DomainMesh& mesh = *P.mesh;
  z.check(mesh, "solution");
  const auto rec = mean_curvature_of_graph(P, z);
  double max_err = 0.0, sum = 0.0;
  int count = 0, skipped = 0, worst = -1;
  for (int v : mesh.interior_vertices()) {
    if (rec.flagged[v]) {
      ++skipped;
      continue;
    }
    const double e = std::abs(rec.H[v] - P.H[v]);
    if (e > max_err || worst < 0) {
      max_err = e;
      worst = v;
    }
    sum += e;
    ++count;
  }
  if (count == 0) throw ParameterError("no interior vertex with a complete recovery stencil");
  const double mean = sum / count;
  const double measured = pf.verify.norm == "max" ? max_err : mean;
  pass = measured <= pf.verify.tolerance;
  return {{"max", max_err},
          {"mean", mean},
          {"worst_vertex", worst},
          {"norm", pf.verify.norm},
          {"tolerance", pf.verify.tolerance},
          {"vertices", count},
          {"skipped_flagged", skipped},
          {"pass", pass}};
}

int cmd_solve(const fs::path& problem_file, const fs::path& out_dir, bool strict, std::ostream& out,
              std::ostream& err) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    err << "error: cannot create " << out_dir.string() << ": " << ec.message() << '\n';
    return kExitInputError;
  }
  json report = {{"schema_version", 1},
                 {"command", "solve"},
                 {"timestamp", utc_timestamp()},
                 {"strict", strict},
                 {"problem", {{"source", problem_file.string()}}},
                 {"status", "input_error"},
                 {"exit_code", kExitInputError},
                 {"error", nullptr},
                 {"hypotheses", nullptr},
                 {"solve", nullptr},
                 {"certificates", nullptr},
                 {"monotonicity", nullptr},
                 {"verification", nullptr}};
  const fs::path report_path = out_dir / "report.json";
  auto finish = [&](int code, const std::string& status) -> int {
    report["exit_code"] = code;
    report["status"] = status;
    try {
      write_json(report_path, report);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitInputError;
    }
    out << status << '\n';
    return code;
  };

  ProblemFile pf;
  try {
    pf = load_problem_file(problem_file);
    report["problem"] = problem_summary(pf);
    write_json(out_dir / "mesh.json", pf.problem.mesh->to_json());
  } catch (const std::exception& e) {
    report["error"] = e.what();
    input_error(err, e);
    return finish(kExitInputError, "input_error");
  }

  const auto hyp = check_hypotheses(pf.problem);
  report["hypotheses"] = hyp.to_json();
  if (!hyp.all_pass()) {
    std::string names;
    for (const auto& f : hyp.failures()) names += (names.empty() ? "" : ", ") + f;
    if (strict) {
      report["error"] = "hypotheses failed: " + names;
      err << "error: hypotheses failed: " << names << '\n';
      return finish(kExitInputError, "hypotheses_failed");
    }
    err << "warning: hypotheses failed: " << names << '\n';
  }

  std::ofstream log(out_dir / "log.jsonl");
  ContinuationResult result;
  try {
    result = continuity_solve(pf.problem, &log);
  } catch (const std::exception& e) {
    report["error"] = e.what();
    input_error(err, e);
    return finish(kExitInputError, "input_error");
  }
  log.close();
  report["solve"] = result.report.to_json();
  write_field_csv(out_dir / "solution.csv", *pf.problem.mesh, result.z);

  const SolveStatus status = result.report.status;
  if (status != SolveStatus::converged) {
    report["error"] = result.report.message;
    return finish(status == SolveStatus::left_interval ? kExitLeftInterval : kExitStalled, to_string(status));
  }

  try {
    bool pass = true;
    report["verification"] = verify_solution(pf, result.z, pass);
    if (pf.requests("height_barrier") || pf.requests("boundary_barrier")) {
      bool valid = true;
      report["certificates"] = certify_solution(pf, result.z, false, valid);
      if (!valid) err << "warning: a requested barrier certificate is not valid\n";
    }
    if (pf.requests("monotonicity")) {
      report["monotonicity"] = cylinder_monotonicity_probe(pf.problem, pf.probe.depths, pf.probe.tol).to_json();
    }
  } catch (const std::exception& e) {
    report["error"] = e.what();
    input_error(err, e);
    return finish(kExitInputError, "input_error");
  }
  return finish(kExitOk, to_string(status));
}

int cmd_check(const fs::path& problem_file, std::ostream& out, std::ostream& err) {
  try {
    const ProblemFile pf = load_problem_file(problem_file);
    const auto rep = check_hypotheses(pf.problem);
    json doc = rep.to_json();
    if (pf.requests("monotonicity")) {
      doc["monotonicity"] = cylinder_monotonicity_probe(pf.problem, pf.probe.depths, pf.probe.tol).to_json();
    }
    out << doc.dump(2) << '\n';
    if (!rep.all_pass()) {
      std::string names;
      for (const auto& f : rep.failures()) names += (names.empty() ? "" : ", ") + f;
      err << "failed: " << names << '\n';
      return kExitStalled;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return input_error(err, e);
  }
}

int cmd_certify(const fs::path& problem_file, const fs::path& solution_csv, const fs::path& certificates_out,
                std::ostream& out, std::ostream& err) {
  try {
    const ProblemFile pf = load_problem_file(problem_file);
    const ScalarField z = read_field_csv(solution_csv, *pf.problem.mesh);
    const bool all = !pf.requests("height_barrier") && !pf.requests("boundary_barrier");
    bool valid = true;
    json doc = certify_solution(pf, z, all, valid);
    doc["problem"] = problem_summary(pf);
    doc["solution"] = solution_csv.string();
    if (certificates_out.empty()) {
      out << doc.dump(2) << '\n';
    } else {
      write_json(certificates_out, doc);
      out << (valid ? "valid" : "invalid") << '\n';
    }
    if (!valid) {
      err << "certificate check failed\n";
      return kExitStalled;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return input_error(err, e);
  }
}

int cmd_verify(const fs::path& problem_file, const fs::path& solution_csv, std::ostream& out, std::ostream& err) {
  try {
    const ProblemFile pf = load_problem_file(problem_file);
    const ScalarField z = read_field_csv(solution_csv, *pf.problem.mesh);
    bool pass = true;
    const json doc = verify_solution(pf, z, pass);
    out << doc.dump(2) << '\n';
    if (!pass) {
      err << "mean curvature discrepancy above tolerance\n";
      return kExitStalled;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return input_error(err, e);
  }
}

}  // namespace ckg
