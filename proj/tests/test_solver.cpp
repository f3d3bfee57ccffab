#include "doctest.h"

#include "support.hpp"

#include <sstream>

using namespace ckg;
using doctest::Approx;

namespace {

Problem disk_problem(const std::string& preset, double h, double H, double phi, SolverOptions opt = {}) {
  auto mesh = make_disk_mesh(0.4, h);
  return make_problem(preset_ambient(preset), mesh, ScalarField::constant(*mesh, H),
                      ScalarField::constant(*mesh, phi), opt);
}

}  // namespace

TEST_CASE("linear solve") {
  Eigen::SparseMatrix<double> I(5, 5);
  I.setIdentity();
  const std::vector<double> b{1, -2, 3, 0.5, 7};
  CHECK(linear_solve(I, b) == b);

  // Random SPD system against a dense solve.
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> U(-1, 1);
  Eigen::MatrixXd M(30, 30);
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 30; ++j) M(i, j) = U(rng);
  }
  const Eigen::MatrixXd A = M * M.transpose() + 30.0 * Eigen::MatrixXd::Identity(30, 30);
  Eigen::VectorXd rhs(30);
  for (int i = 0; i < 30; ++i) rhs(i) = U(rng);
  const auto x = linear_solve(Eigen::SparseMatrix<double>(A.sparseView()),
                              std::vector<double>(rhs.data(), rhs.data() + 30));
  const Eigen::VectorXd ref = A.ldlt().solve(rhs);
  for (int i = 0; i < 30; ++i) CHECK(x[i] == Approx(ref(i)).epsilon(1e-12));

  Eigen::SparseMatrix<double> S(3, 3);
  S.insert(0, 0) = 1.0;
  S.insert(1, 1) = 1.0;
  S.insert(2, 0) = 1.0;
  S.makeCompressed();
  CHECK_THROWS_AS(linear_solve(S, {1, 1, 1}, {10, 11, 12}), SingularSystemError);
}

TEST_CASE("Poisson problem on the disk") {
  // -Delta u = 1, u = 0 on |x| = r0: u(0) = r0^2 / 4.
  const auto mesh = make_disk_mesh(0.4, 0.02);
  const auto L = laplacian_system(*mesh);
  const auto& mass = mesh->lumped_mass();
  std::vector<double> rhs;
  for (int v : L.vertices) rhs.push_back(mass[v]);
  const auto u = linear_solve(L, rhs);
  CHECK(L.vertices[0] == 0);
  CHECK(u[0] == Approx(0.04).epsilon(1e-3));
}

TEST_CASE("harmonic extension reproduces affine data") {
  const auto mesh = make_disk_mesh(0.4, 0.05);
  const auto affine = ScalarField::sample(*mesh, [](const Vec& x) { return 0.3 + 2.0 * x(0) - x(1); });
  const auto ext = harmonic_extension(*mesh, affine);
  for (int v = 0; v < mesh->vertex_count(); ++v) CHECK(ext[v] == Approx(affine[v]).epsilon(1e-12));
}

TEST_CASE("Newton at tau = 0 starts converged") {
  const auto P = test::cmc_problem(0.05);
  const auto res = newton_solve(P, 0.0, ScalarField::constant(*P.mesh, 0.0));
  CHECK(res.iterations == 0);
  for (double v : res.z.values) CHECK(v == 0.0);
}

TEST_CASE("direct Newton and continuation on the spherical cap") {
  const auto P = test::cmc_problem(0.04);
  const auto direct = newton_solve(P, 1.0, harmonic_extension(*P.mesh, P.boundary_field(1.0)));
  CHECK(test::max_error(*P.mesh, direct.z, test::cmc_exact) < 1e-3);
  CHECK(direct.residual_norms.back() <= P.options.newton_tol);

  const auto cont = continuity_solve(P);
  CHECK(cont.report.status == SolveStatus::converged);
  CHECK(cont.report.tau_path.back() == 1.0);
  for (int v = 0; v < P.mesh->vertex_count(); ++v) CHECK(std::abs(cont.z[v] - direct.z[v]) <= 1e-10);
}

TEST_CASE("continuation path of a trivial problem") {
  const auto P = disk_problem("killing_flat", 0.05, 0.0, 0.0);
  const auto res = continuity_solve(P);
  CHECK(res.report.status == SolveStatus::converged);
  CHECK(res.report.tau_path == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  for (double v : res.z.values) CHECK(v == 0.0);
  CHECK(res.report.to_json().at("status") == "converged");
}

TEST_CASE("solution stays below the boundary data when the maximum principle applies") {
  const auto P = disk_problem("example_a", 0.04, 0.2, -0.1);
  const auto res = continuity_solve(P);
  REQUIRE(res.report.status == SolveStatus::converged);
  for (double v : res.z.values) CHECK(v <= 1e-12);
}

TEST_CASE("solver options are validated") {
  SolverOptions bad;
  bad.newton_tol = -1.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  SolverOptions steps;
  steps.initial_tau_step = 1e-5;
  CHECK_THROWS_AS(steps.validate(), ParameterError);
  SolverOptions damping;
  damping.damping = 1.5;
  CHECK_THROWS_AS(damping.validate(), ParameterError);
  CHECK_NOTHROW(SolverOptions{}.validate());
}

TEST_CASE("Newton log lines") {
  const auto P = test::cmc_problem(0.08);
  std::ostringstream log;
  const auto res = newton_solve(P, 1.0, harmonic_extension(*P.mesh, P.boundary_field(1.0)), &log);
  std::istringstream in(log.str());
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"tau", "iter", "residual_norm", "step_norm", "damping_halvings"}) {
      CHECK(j.contains(key));
    }
    ++count;
  }
  CHECK(count >= res.iterations);
}

TEST_CASE("Newton reports a stall with its best iterate") {
  SolverOptions opt;
  opt.max_newton_iters = 1;
  auto P = test::cmc_problem(0.08);
  P.options = opt;
  try {
    newton_solve(P, 1.0, ScalarField::constant(*P.mesh, 0.0));
    FAIL("expected a stall");
  } catch (const NewtonStalled& e) {
    CHECK(e.best.size() == P.mesh->vertex_count());
    CHECK(std::isfinite(e.best_norm));
  }
}

TEST_CASE("solves are deterministic") {
  const auto P = test::cmc_problem(0.05);
  const auto a = continuity_solve(P), b = continuity_solve(P);
  CHECK(a.z.values == b.z.values);
  CHECK(a.report.to_json() == b.report.to_json());
}

TEST_CASE("continuation reports leaving the flow interval") {
  const auto P = disk_problem("example_b", 0.08, -3.0, 0.9);
  const auto res = continuity_solve(P);
  CHECK(res.report.status == SolveStatus::left_interval);
  CHECK(res.report.clamped);
  CHECK_FALSE(res.report.message.empty());
}
