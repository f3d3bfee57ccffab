#include "doctest.h"

#include "support.hpp"

#include "ckg/commands.hpp"
#include "ckg/expression.hpp"

#include <fstream>
#include <sstream>

using namespace ckg;
using doctest::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kProblems = fs::path(CKG_SOURCE_DIR) / "problems";

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

fs::path write_problem(const fs::path& dir, const std::string& name, const json& doc) {
  const auto p = dir / (name + ".json");
  std::ofstream(p) << doc.dump(2);
  return p;
}

json cap_doc() { return read_json(kProblems / "cmc_cap.json"); }

std::string schema_pointer(const json& doc) {
  try {
    parse_problem_file(doc, kProblems);
  } catch (const SchemaError& e) {
    return e.pointer;
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("expression values") {
  const std::vector<std::string> vars{"x", "y"};
  struct Case {
    const char* text;
    double (*fn)(double, double);
  };
  const Case cases[] = {
      {"x + y * 2", [](double x, double y) { return x + y * 2; }},
      {"(x + y) * 2", [](double x, double y) { return (x + y) * 2; }},
      {"x - y - 1", [](double x, double y) { return x - y - 1; }},
      {"x / y / 4", [](double x, double y) { return x / y / 4; }},
      {"2^3^2", [](double, double) { return std::pow(2.0, 9.0); }},
      {"-x^2", [](double x, double) { return -(x * x); }},
      {"(-x)^2", [](double x, double) { return x * x; }},
      {"2^-1", [](double, double) { return 0.5; }},
      {"exp(x) * log(y + 3)", [](double x, double y) { return std::exp(x) * std::log(y + 3); }},
      {"sqrt(x^2 + y^2)", [](double x, double y) { return std::sqrt(x * x + y * y); }},
      {"sin(x) + cos(y) - tan(x*y)", [](double x, double y) { return std::sin(x) + std::cos(y) - std::tan(x * y); }},
      {"asin(x/2) + acos(y/3) + atan(x)",
       [](double x, double y) { return std::asin(x / 2) + std::acos(y / 3) + std::atan(x); }},
      {"sinh(x) * cosh(y) / (1 + tanh(x))",
       [](double x, double y) { return std::sinh(x) * std::cosh(y) / (1 + std::tanh(x)); }},
      {"abs(y) + pow(abs(x), 1.5)", [](double x, double y) { return std::abs(y) + std::pow(std::abs(x), 1.5); }},
      {"pi * 1.5e-1 + 2E2", [](double, double) { return std::acos(-1.0) * 0.15 + 200.0; }},
      {"-log(cos(2*atan(sqrt(x^2 + y^2) / 2)))",
       [](double x, double y) { return -std::log(std::cos(2 * std::atan(std::sqrt(x * x + y * y) / 2))); }},
  };
  for (const auto& c : cases) {
    const auto e = Expression::parse(c.text, vars);
    for (double x : {-0.7, 0.1, 0.45}) {
      for (double y : {-0.3, 0.2, 0.9}) {
        const std::string text = c.text;
        CAPTURE(text);
        const double want = c.fn(x, y);
        CHECK(std::abs(e({x, y}) - want) <= 1e-14 * std::max(1.0, std::abs(want)));
      }
    }
  }
  CHECK(Expression::parse("3 * pi", vars).is_constant());
  CHECK(Expression::parse("x + 1", vars).uses("x"));
  CHECK_FALSE(Expression::parse("x + 1", vars).uses("y"));
}

TEST_CASE("expression errors") {
  const std::vector<std::string> vars{"x", "y"};
  CHECK_THROWS_AS(Expression::parse("x +", vars), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("(x", vars), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("x y", vars), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("", vars), ExpressionError);
  try {
    Expression::parse("x + t", vars);
    FAIL("unknown variable accepted");
  } catch (const ExpressionError& e) {
    CHECK(e.identifier == "t");
    CHECK(e.position == 4);
  }
  try {
    Expression::parse("frob(x)", vars);
    FAIL("unknown function accepted");
  } catch (const ExpressionError& e) {
    CHECK(e.identifier == "frob");
  }
  CHECK_THROWS_AS(Expression::parse("sin(x, y)", vars), ExpressionError);
}

TEST_CASE("schema violations point at the offending value") {
  auto doc = cap_doc();
  CHECK(schema_pointer(doc) == "<accepted>");

  auto extra = cap_doc();
  extra["colour"] = "blue";
  CHECK(schema_pointer(extra) == "/colour");

  auto radius = cap_doc();
  radius["domain"]["radius"] = -1.0;
  CHECK(schema_pointer(radius) == "/domain/radius");

  auto flow = cap_doc();
  flow["H"] = {{"expression", "1 + t"}};
  CHECK(schema_pointer(flow) == "/H/expression");

  auto bad_expr = cap_doc();
  bad_expr["phi"] = {{"expression", "x +"}};
  CHECK(schema_pointer(bad_expr) == "/phi/expression");

  auto check = cap_doc();
  check["checks"] = {"hypotheses", "astrology"};
  CHECK(schema_pointer(check) == "/checks/1");

  auto missing = cap_doc();
  missing.erase("resolution");
  CHECK(schema_pointer(missing) == "/resolution");

  auto preset = cap_doc();
  preset["ambient"]["preset"] = "example_z";
  CHECK(schema_pointer(preset) == "/ambient/preset");

  auto solver = cap_doc();
  solver["solver"] = {{"damping", 2.0}};
  CHECK(schema_pointer(solver).rfind("/solver", 0) == 0);

  auto norm = cap_doc();
  norm["verify"] = {{"norm", "l7"}};
  CHECK(schema_pointer(norm) == "/verify/norm");
}

TEST_CASE("custom ambient spaces from expressions") {
  auto doc = cap_doc();
  doc["ambient"] = {{"custom",
                     {{"name", "exp"},
                      {"lambda", "exp(t)"},
                      {"lambda_t", "exp(t)"},
                      {"lambda_tt", "exp(t)"},
                      {"gamma", 1.0},
                      {"base", "flat"},
                      {"curvature", "flat"}}}};
  const auto pf = parse_problem_file(doc, kProblems);
  const auto ref = preset_ambient("example_a");
  for (double t : {-1.0, 0.0, 0.5}) {
    CHECK(pf.problem.ambient->rho(t) == Approx(ref->rho(t)).epsilon(1e-14));
    CHECK(pf.problem.ambient->r_of_t(t) == Approx(ref->r_of_t(t)).epsilon(1e-10));
  }
  doc["ambient"]["custom"]["lambda"] = "2*exp(t)";
  CHECK(schema_pointer(doc).rfind("/ambient", 0) == 0);
}

TEST_CASE("solve command on the spherical cap") {
  const auto dir = test::scratch_dir("cli_solve");
  std::ostringstream out, err;
  REQUIRE(cmd_solve(kProblems / "cmc_cap.json", dir / "a", false, out, err) == kExitOk);
  for (const char* f : {"solution.csv", "report.json", "log.jsonl", "mesh.json"}) CHECK(fs::exists(dir / "a" / f));

  const auto pf = load_problem_file(kProblems / "cmc_cap.json");
  const auto z = read_field_csv(dir / "a" / "solution.csv", *pf.problem.mesh);
  CHECK(test::max_error(*pf.problem.mesh, z, test::cmc_exact) < 1e-3);

  auto report = read_json(dir / "a" / "report.json");
  CHECK(report.at("status") == "converged");
  CHECK(report.at("exit_code") == 0);
  CHECK(report.at("verification").at("pass") == true);
  CHECK(report.at("certificates").at("height").at("certificate").at("valid") == true);
  CHECK(report.at("monotonicity").at("monotone") == true);

  // Reports differ only in the timestamp.
  REQUIRE(cmd_solve(kProblems / "cmc_cap.json", dir / "b", false, out, err) == kExitOk);
  auto again = read_json(dir / "b" / "report.json");
  report.erase("timestamp");
  again.erase("timestamp");
  CHECK(report.dump() == again.dump());
  std::ifstream s1(dir / "a" / "solution.csv"), s2(dir / "b" / "solution.csv");
  std::stringstream b1, b2;
  b1 << s1.rdbuf();
  b2 << s2.rdbuf();
  CHECK(b1.str() == b2.str());
}

TEST_CASE("solve command exit codes") {
  const auto dir = test::scratch_dir("cli_exit");
  std::ostringstream out, err;
  CHECK(cmd_solve(kProblems / "trivial.json", dir / "trivial", true, out, err) == kExitOk);
  const auto pf = load_problem_file(kProblems / "trivial.json");
  for (double v : read_field_csv(dir / "trivial" / "solution.csv", *pf.problem.mesh).values) CHECK(v == 0.0);

  auto positive = cap_doc();
  positive["ambient"] = {{"preset", "example_a"}};
  positive["H"] = 0.5;
  positive["phi"] = 0.2;
  positive["resolution"] = 0.05;
  const auto pos = write_problem(dir, "positive", positive);
  CHECK(cmd_solve(pos, dir / "strict", true, out, err) == kExitInputError);
  const auto strict = read_json(dir / "strict" / "report.json");
  CHECK(strict.at("status") == "hypotheses_failed");
  CHECK(strict.at("error").get<std::string>().find("phi_nonpos") != std::string::npos);

  auto leaving = cap_doc();
  leaving["ambient"] = {{"preset", "example_b"}};
  leaving["H"] = -3.0;
  leaving["phi"] = 0.9;
  leaving["resolution"] = 0.08;
  CHECK(cmd_solve(write_problem(dir, "leaving", leaving), dir / "leave", false, out, err) == kExitLeftInterval);
  CHECK(read_json(dir / "leave" / "report.json").at("status") == "left_interval");

  auto broken = cap_doc();
  broken["colour"] = 1;
  CHECK(cmd_solve(write_problem(dir, "broken", broken), dir / "broken", false, out, err) == kExitInputError);
  CHECK(read_json(dir / "broken" / "report.json").at("status") == "input_error");
  CHECK(cmd_solve(dir / "missing.json", dir / "missing", false, out, err) == kExitInputError);
}

TEST_CASE("check command") {
  const auto dir = test::scratch_dir("cli_check");
  std::ostringstream out, err;
  CHECK(cmd_check(kProblems / "cmc_cap.json", out, err) == kExitOk);
  CHECK(json::parse(out.str()).at("inf_HK").get<double>() == Approx(1.25).epsilon(1e-12));
  auto steep = cap_doc();
  steep["H"] = 1.3;
  std::ostringstream o2;
  CHECK(cmd_check(write_problem(dir, "steep", steep), o2, err) == kExitStalled);
}

TEST_CASE("certify and verify commands") {
  const auto dir = test::scratch_dir("cli_certify");
  std::ostringstream out, err;
  REQUIRE(cmd_solve(kProblems / "cmc_cap.json", dir / "sol", false, out, err) == kExitOk);
  const auto sol = dir / "sol" / "solution.csv";

  std::ostringstream cert;
  CHECK(cmd_certify(kProblems / "cmc_cap.json", sol, dir / "cert.json", cert, err) == kExitOk);
  CHECK(fs::exists(dir / "cert.json"));
  CHECK(cmd_verify(kProblems / "cmc_cap.json", sol, out, err) == kExitOk);

  auto tight = cap_doc();
  tight["barrier"] = {{"B", 0.5}};
  CHECK(cmd_certify(write_problem(dir, "tight", tight), sol, "", out, err) == kExitInputError);

  auto off = cap_doc();
  off["H"] = 1.1;
  CHECK(cmd_verify(write_problem(dir, "off", off), sol, out, err) == kExitStalled);

  // A field below the boundary data cannot lie above the lower barriers.
  const auto pf = load_problem_file(kProblems / "cmc_cap.json");
  auto z = read_field_csv(sol, *pf.problem.mesh);
  for (double& v : z.values) v -= 0.1;
  write_field_csv(dir / "shifted.csv", *pf.problem.mesh, z);
  CHECK(cmd_certify(kProblems / "cmc_cap.json", dir / "shifted.csv", "", out, err) == kExitStalled);

  // Independent uniform noise of amplitude 0.5 on the interior.
  auto noisy = read_field_csv(sol, *pf.problem.mesh);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  for (int v : pf.problem.mesh->interior_vertices()) noisy[v] += U(rng);
  write_field_csv(dir / "noisy.csv", *pf.problem.mesh, noisy);
  CHECK(cmd_certify(kProblems / "cmc_cap.json", dir / "noisy.csv", dir / "noisy.json", out, err) == kExitStalled);
  CHECK(read_json(dir / "noisy.json").at("height").at("upper").at("valid") == false);

  CHECK(cmd_verify(kProblems / "cmc_cap.json", dir / "absent.csv", out, err) == kExitInputError);
}

TEST_CASE("verify recovers the curvature of horizontal slices") {
  for (double c : {-0.5, 0.0, 0.3}) {
    auto doc = cap_doc();
    doc["ambient"] = {{"preset", "example_a"}};
    doc["H"] = -std::exp(-c);
    doc["phi"] = c;
    doc["resolution"] = 0.05;
    doc["verify"] = {{"norm", "max"}, {"tolerance", 1e-8}};
    const auto pf = parse_problem_file(doc, kProblems);
    bool pass = false;
    const auto v = verify_solution(pf, ScalarField::constant(*pf.problem.mesh, c), pass);
    CAPTURE(c);
    CHECK(pass);
    CHECK(v.at("max").get<double>() <= 1e-8);
  }
}

TEST_CASE("problem files round trip through the solution format") {
  const auto dir = test::scratch_dir("cli_roundtrip");
  std::ostringstream out, err;
  REQUIRE(cmd_solve(kProblems / "radial_minimal.json", dir / "r", false, out, err) == kExitOk);
  const auto pf = load_problem_file(kProblems / "radial_minimal.json");
  const auto z = read_field_csv(dir / "r" / "solution.csv", *pf.problem.mesh);
  CHECK(test::max_error(*pf.problem.mesh, z, test::radial_exact) < 1e-3);
  bool pass = false;
  verify_solution(pf, z, pass);
  CHECK(pass);
  const auto mesh = DomainMesh::from_json(read_json(dir / "r" / "mesh.json"), pf.problem.mesh->metric_ptr());
  CHECK(mesh->vertex_count() == pf.problem.mesh->vertex_count());
}
