#include "doctest.h"

#include "support.hpp"

#include <map>
#include <set>
#include <sstream>

using namespace ckg;
using doctest::Approx;

namespace {

Problem flat_problem(const std::string& preset, double h, double H, double phi) {
  auto mesh = make_disk_mesh(0.4, h);
  return make_problem(preset_ambient(preset), mesh, ScalarField::constant(*mesh, H),
                      ScalarField::constant(*mesh, phi));
}

double interior_max(const Problem& P, const std::vector<double>& r) {
  double m = 0.0;
  for (double x : r) m = std::max(m, std::abs(x));
  (void)P;
  return m;
}

// Central differences of the interior residual, column by column.
double jacobian_fd_error(const Problem& P, const ScalarField& z, double tau) {
  const auto sys = jacobian_Qtau(P, z, tau);
  const Eigen::MatrixXd J = Eigen::MatrixXd(sys.matrix());
  const auto& iv = P.mesh->interior_vertices();
  const double e = 1e-6;
  double worst = 0.0;
  for (size_t j = 0; j < iv.size(); ++j) {
    ScalarField zp = z, zm = z;
    zp[iv[j]] += e;
    zm[iv[j]] -= e;
    const auto rp = residual_Qtau(P, zp, tau), rm = residual_Qtau(P, zm, tau);
    for (size_t i = 0; i < iv.size(); ++i) {
      const double fd = (rp[i] - rm[i]) / (2 * e);
      worst = std::max(worst, std::abs(fd - J(i, j)) / std::max(1.0, std::abs(J(i, j))));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("zero residual for horizontal slices in the Killing case") {
  const auto P = flat_problem("killing_flat", 0.05, 0.0, -0.3);
  const auto z = ScalarField::constant(*P.mesh, -0.3);
  for (double r : residual_Q(P, z)) CHECK(std::abs(r) <= 1e-14);
  for (double tau : {0.0, 0.4, 1.0}) {
    for (double r : residual_Qtau(P, ScalarField::constant(*P.mesh, -0.3 * tau), tau)) CHECK(std::abs(r) <= 1e-14);
  }
}

TEST_CASE("strong form of a slice in the exponential ambient") {
  const auto P = flat_problem("example_a", 0.05, 0.0, 0.0);
  for (double s : scaled_residual(P, ScalarField::constant(*P.mesh, 0.0))) CHECK(s == Approx(-2.0).epsilon(1e-12));
  auto line = make_interval_mesh(0.0, 1.0, 0.1);
  PresetParams one_d;
  one_d.dim = 1;
  const auto P1 = make_problem(preset_ambient("example_a", one_d), line, ScalarField::constant(*line, 0.0),
                               ScalarField::constant(*line, 0.0));
  for (double s : scaled_residual(P1, ScalarField::constant(*line, 0.0))) CHECK(s == Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("tau = 0 has the zero solution and tau enters linearly") {
  const auto P = flat_problem("example_a", 0.08, 0.7, -0.2);
  for (double r : residual_Qtau(P, ScalarField::constant(*P.mesh, 0.0), 0.0)) CHECK(r == 0.0);
  const auto z = test::random_state(P, ScalarField::constant(*P.mesh, -0.1), 0.05, 3);
  const auto r0 = residual_Qtau(P, z, 0.0), r1 = residual_Qtau(P, z, 1.0), rh = residual_Qtau(P, z, 0.3);
  for (size_t i = 0; i < r0.size(); ++i) CHECK(rh[i] == Approx(0.7 * r0[i] + 0.3 * r1[i]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("Jacobian matches finite differences") {
  for (const char* preset : {"killing_flat", "example_a", "example_b"}) {
    CAPTURE(preset);
    const auto P = flat_problem(preset, 0.1, 0.6, -0.3);
    for (unsigned seed = 1; seed <= 3; ++seed) {
      const auto z = test::random_state(P, P.boundary_field(1.0, -0.2), 0.2, seed);
      CHECK(jacobian_fd_error(P, z, 1.0) < 1e-6);
      CHECK(jacobian_fd_error(P, z, 0.5) < 1e-6);
    }
  }
  const auto R = test::radial_problem(0.15);
  CHECK(jacobian_fd_error(R, test::random_state(R, R.boundary_field(1.0), 0.1, 9), 1.0) < 1e-6);
}

TEST_CASE("Jacobian at the zero graph is the Laplacian") {
  const auto P = flat_problem("killing_flat", 0.05, 0.0, 0.0);
  const auto J = jacobian_Qtau(P, ScalarField::constant(*P.mesh, 0.0), 1.0).matrix();
  const auto L = laplacian_system(*P.mesh).matrix();
  CHECK(Eigen::SparseMatrix<double>(J + L).norm() <= 1e-12 * L.norm());
}

TEST_CASE("Jacobian sparsity is the interior adjacency") {
  const auto P = flat_problem("example_a", 0.08, 0.3, -0.2);
  const auto sys = jacobian_Qtau(P, test::random_state(P, P.boundary_field(1.0), 0.1, 5), 1.0);
  std::map<int, std::set<int>> pattern;
  for (const auto& e : sys.entries) pattern[e.row_vertex].insert(e.col_vertex);
  for (int v : P.mesh->interior_vertices()) {
    std::set<int> expect{v};
    for (int w : P.mesh->neighbors(v)) {
      if (!P.mesh->is_boundary(w)) expect.insert(w);
    }
    CHECK(pattern[v] == expect);
  }
  std::ostringstream dump;
  sys.dump(dump);
  std::istringstream in(dump.str());
  int i, j, lines = 0;
  double value;
  while (in >> i >> j >> value) {
    CHECK(pattern[i].count(j) == 1);
    ++lines;
  }
  CHECK(lines == static_cast<int>(sys.entries.size()));
}

TEST_CASE("residual rejects values past the flow interval") {
  const auto P = flat_problem("example_b", 0.1, 0.0, 0.0);
  auto z = ScalarField::constant(*P.mesh, 0.0);
  z[0] = 1.2;
  CHECK_THROWS_AS(residual_Q(P, z), DomainError);
  CHECK_THROWS_AS(jacobian_Qtau(P, z, 1.0), DomainError);
}

TEST_CASE("consistency on the radial minimal graph") {
  // Residual of the sampled exact solution tested against a smooth weight.
  double prev = 0.0;
  for (double h : {0.08, 0.04, 0.02}) {
    const auto P = test::radial_problem(h);
    const auto r = residual_Q(P, ScalarField::sample(*P.mesh, test::radial_exact));
    const auto& iv = P.mesh->interior_vertices();
    double weak = 0.0;
    for (size_t i = 0; i < r.size(); ++i) weak += r[i] * (0.2 - P.mesh->vertex(iv[i]).squaredNorm());
    weak = std::abs(weak);
    if (prev > 0.0) CHECK(std::log2(prev / weak) > 1.8);
    prev = weak;
  }
}

TEST_CASE("graph normal and induced metric") {
  const auto P = flat_problem("example_a", 0.05, 0.0, 0.0);
  const auto flat = graph_normal(P, ScalarField::constant(*P.mesh, 0.0), Vec::Zero(2));
  CHECK(flat.N(0) == Approx(1.0).epsilon(1e-14));
  CHECK(flat.N.tail(2).norm() <= 1e-14);

  const auto z = test::random_state(P, ScalarField::constant(*P.mesh, -0.2), 0.3, 11);
  const Vec u = Vec(Eigen::Vector2d(0.11, -0.07));
  const auto gn = graph_normal(P, z, u);
  CHECK(gn.N.dot(gn.metric * gn.N) == Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 2; ++i) CHECK(std::abs(gn.N.dot(gn.metric * gn.tangents.col(i))) <= 1e-12);

  // Plane z = a.x in the Killing cylinder: g = delta + a a^T.
  const auto K = flat_problem("killing_flat", 0.05, 0.0, 0.0);
  const Eigen::Vector2d a(0.3, -0.5);
  const auto plane = ScalarField::sample(*K.mesh, [&](const Vec& x) { return a.dot(Eigen::Vector2d(x)); });
  const auto im = induced_metric(K, plane, 7);
  const Eigen::Matrix2d expect = Eigen::Matrix2d::Identity() + a * a.transpose();
  CHECK((Eigen::Matrix2d(im.g) - expect).norm() <= 1e-12);
  CHECK(im.det == Approx(expect.determinant()).epsilon(1e-12));
  const auto sff = second_fundamental_form(K, plane, K.mesh->interior_vertices()[5]);
  CHECK(Eigen::Matrix2d(sff.a).norm() <= 1e-10);
}

TEST_CASE("pointwise mean curvature of a sphere graph") {
  const auto amb = preset_ambient("killing_flat");
  for (double r : {0.0, 0.1, 0.3}) {
    const Eigen::Vector2d x(r, 0.5 * r);
    const double s = std::sqrt(1.0 - x.squaredNorm());
    const Vec grad = Vec(x / s);
    const Mat hess = Mat(Eigen::Matrix2d::Identity() / s + x * x.transpose() / (s * s * s));
    CHECK(mean_curvature_pointwise(*amb, Vec(x), -s, grad, hess) == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("recovered mean curvature of the discrete spherical cap") {
  const auto P = test::cmc_problem(0.02);
  const auto rec = mean_curvature_of_graph(P, ScalarField::sample(*P.mesh, test::cmc_exact));
  double mean = 0.0;
  int count = 0;
  for (int v : P.mesh->interior_vertices()) {
    if (rec.flagged[v]) continue;
    mean += std::abs(rec.H[v] - 1.0);
    ++count;
  }
  CHECK(count > 0);
  CHECK(mean / count < 0.02);
}

TEST_CASE("maximum principle conditions") {
  auto mesh = make_disk_mesh(0.4, 0.1);
  const auto pos = ScalarField::constant(*mesh, 0.5), neg = ScalarField::constant(*mesh, -0.5);
  CHECK(max_principle_conditions(*preset_ambient("example_a"), pos, -2.0, 0.0).pass());
  CHECK(max_principle_conditions(*preset_ambient("killing_flat"), neg, -2.0, 0.0).pass());
  const auto b = max_principle_conditions(*preset_ambient("example_b"), pos, -1.0, 0.5);
  CHECK(b.pass());
  CHECK(b.rho_t.margin == Approx(0.25).epsilon(1e-12));
  CHECK_FALSE(max_principle_conditions(*preset_ambient("example_a"), neg, -2.0, 0.0).pass());

  ConformalFactor decay;
  decay.value = [](double t) { return std::exp(-t); };
  decay.first = [](double t) { return -std::exp(-t); };
  decay.second = decay.value;
  const AmbientSpace shrinking("decay", decay, GammaField::constant_value(1.0, 2), BaseMetric::flat(2),
                              CurvatureModel::flat());
  const auto report = max_principle_conditions(shrinking, pos, -2.0, 0.0);
  CHECK(report.rho_t.pass);
  CHECK_FALSE(report.lambda_t_H.pass);
  CHECK(report.lambda_t_H.margin < 0.0);
}

TEST_CASE("flux differential is uniformly elliptic on bounded gradients") {
  const auto amb = preset_ambient("example_a");
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const Vec grad = Vec(Eigen::Vector2d(U(rng), U(rng)));
    const auto fd = flux_differential(*amb, Vec::Zero(2), grad);
    CHECK(fd.eigenvalues(0) >= fd.gamma / std::pow(fd.U, 3) * (1 - 1e-12));
    CHECK(fd.eigenvalues(1) <= 1.0 / fd.U * (1 + 1e-12));
  }
}

TEST_CASE("flux balance") {
  const auto P = flat_problem("example_a", 0.05, 0.2, -0.2);
  const auto z = test::random_state(P, P.boundary_field(1.0, -0.3), 0.3, 21);
  const auto fb = flux_balance(P, z);
  CHECK(std::abs(fb.difference) <= 1e-10);
  CHECK(fb.max_cell_imbalance <= 1e-12);
  CHECK(interior_max(P, residual_Qtau(P, z, 1.0)) > 0.0);
}
