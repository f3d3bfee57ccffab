#include "doctest.h"

#include "support.hpp"

#include <numbers>

using namespace ckg;
using doctest::Approx;

namespace {

// lambda = 1 (or e^t) with gamma = e^{2x} on a flat chart.
std::shared_ptr<const AmbientSpace> exp_gamma_ambient(bool exponential) {
  PresetParams p;
  p.psi = [](const Vec& u) { return std::exp(-u(0)); };
  p.psi_gradient = [](const Vec& u) -> Vec { return Vec::Unit(2, 0) * -std::exp(-u(0)); };
  if (exponential) return preset_ambient("example_a", p);
  ConformalFactor one;
  one.value = [](double) { return 1.0; };
  one.first = [](double) { return 0.0; };
  one.second = [](double) { return 0.0; };
  GammaField g;
  g.value = [](const Vec& u) { return std::exp(2.0 * u(0)); };
  g.gradient = [](const Vec& u) -> Vec { return Vec::Unit(2, 0) * 2.0 * std::exp(2.0 * u(0)); };
  return std::make_shared<const AmbientSpace>("exp_gamma", one, g, BaseMetric::flat(2), CurvatureModel::flat(),
                                              true);
}

// Unit square split into 2 m^2 triangles, boundary counter-clockwise.
std::shared_ptr<const DomainMesh> square_mesh(int m) {
  std::vector<Vec> v;
  auto id = [m](int i, int j) { return j * (m + 1) + i; };
  for (int j = 0; j <= m; ++j) {
    for (int i = 0; i <= m; ++i) v.push_back(Vec(Eigen::Vector2d(double(i) / m, double(j) / m)));
  }
  std::vector<Cell> cells;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  std::vector<int> loop;
  for (int i = 0; i < m; ++i) loop.push_back(id(i, 0));
  for (int j = 0; j < m; ++j) loop.push_back(id(m, j));
  for (int i = m; i > 0; --i) loop.push_back(id(i, m));
  for (int j = m; j > 0; --j) loop.push_back(id(0, j));
  return std::make_shared<const DomainMesh>(BaseMetric::flat(2), v, cells, std::vector<std::vector<int>>{loop});
}

const char* kPresets[] = {"example_a", "example_b", "example_c", "killing_flat", "euclidean_radial"};

}  // namespace

TEST_CASE("rho and its flow derivative") {
  CHECK(preset_ambient("killing_flat")->rho(0.3) == 0.0);
  for (double t : {-2.0, 0.0, 1.7}) CHECK(preset_ambient("example_a")->rho(t) == Approx(1.0).epsilon(1e-14));
  const auto b = preset_ambient("example_b");
  CHECK(b->rho(0.5) == Approx(2.0).epsilon(1e-14));
  CHECK(b->rho_t(0.5) == Approx(4.0).epsilon(1e-14));
  CHECK_THROWS_AS(b->rho(1.0), DomainError);
  CHECK_THROWS_AS(b->lambda(1.5), DomainError);
}

TEST_CASE("leaf mean curvature") {
  const Vec u = Vec(Eigen::Vector2d(0.1, -0.2));
  CHECK(preset_ambient("killing_flat")->leaf_mean_curvature(0.7, u) == 0.0);
  CHECK(preset_ambient("example_a")->leaf_mean_curvature(0.0, u) == Approx(-1.0).epsilon(1e-14));
  PresetParams quarter;
  quarter.psi = [](const Vec&) { return 0.5; };
  quarter.psi_gradient = [](const Vec&) -> Vec { return Vec::Zero(2); };
  CHECK(preset_ambient("example_a", quarter)->leaf_mean_curvature(0.0, u) == Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("two evaluations of the leaf curvature and the flow identity agree") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> T(-2.0, 0.5), X(-0.5, 0.5);
  PresetParams warped;
  warped.psi = [](const Vec& u) { return 1.0 + 0.3 * u(0) * u(0) + 0.1 * u(1); };
  warped.psi_gradient = [](const Vec& u) -> Vec { return Vec(Eigen::Vector2d(0.6 * u(0), 0.1)); };
  for (const char* name : kPresets) {
    const auto amb = preset_ambient(name, std::string(name) == "killing_flat" ? PresetParams{} : warped);
    for (int i = 0; i < 100; ++i) {
      const double t = std::min(T(rng), 0.5 * amb->interval_end());
      const Vec u = Vec(Eigen::Vector2d(X(rng), X(rng)));
      CAPTURE(name);
      CHECK(std::abs(amb->leaf_mean_curvature(t, u) - amb->leaf_mean_curvature_from_rho(t, u)) <= 1e-12);
      CHECK(amb->gamma_bar(0.0, u) == amb->gamma(u));
      const double kt = amb->leaf_curvature_t(t, u);
      CHECK(std::abs(kt - amb->leaf_curvature_t_from_flow(t, u)) <= 1e-10 * std::max(1.0, std::abs(kt)));
    }
  }
}

TEST_CASE("cylinder principal curvature along the flow") {
  const Vec u = Vec(Eigen::Vector2d(0.0, 0.3));
  const Vec eta = Vec::Unit(2, 0);
  CHECK(preset_ambient("killing_flat")->cylinder_kappa(0.0, u, eta) == 0.0);
  CHECK(exp_gamma_ambient(false)->cylinder_kappa(0.0, u, eta) == Approx(1.0).epsilon(1e-12));
  const auto a = exp_gamma_ambient(true);
  CHECK(a->cylinder_kappa(std::log(2.0), u, eta) == Approx(0.5).epsilon(1e-12));
  CHECK(a->cylinder_kappa(std::log(2.0), u, -eta) == Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("Killing cylinder mean curvature") {
  const Vec u = Vec(Eigen::Vector2d(1.0, 0.0));
  const Vec eta = -u;
  CHECK(preset_ambient("killing_flat")->cylinder_mean_curvature(0.0, u, eta, 1.0) == Approx(0.5).epsilon(1e-14));
  const auto a = preset_ambient("example_a");
  CHECK(a->cylinder_mean_curvature(std::log(2.0), u, eta, 1.0) == Approx(0.25).epsilon(1e-14));
  for (double hg : {-1.0, 0.3, 4.0}) {
    CHECK(2.0 * a->cylinder_mean_curvature(0.2, u, eta, hg) == Approx(hg / a->lambda(0.2)).epsilon(1e-14));
  }
}

TEST_CASE("boundary mean curvature of preset and generic domains") {
  const auto disk = make_disk_mesh(0.4, 0.05);
  for (int v : disk->boundary_vertices()) CHECK(disk->boundary_curvature(v) == Approx(2.5).epsilon(1e-14));
  const auto cap = make_cap_mesh(1.0, 0.05);
  for (int v : cap->boundary_vertices()) {
    CHECK(cap->boundary_curvature(v) == Approx(1.0 / std::tan(1.0)).epsilon(1e-14));
    CHECK(cap->metric().norm(cap->vertex(v), cap->boundary_normal(v)) == Approx(1.0).epsilon(1e-12));
  }
  const auto sq = square_mesh(8);
  const int mid = 4;  // (0.5, 0) on the bottom edge
  CHECK(sq->boundary_curvature(mid) == Approx(0.0).epsilon(1e-12));
  CHECK(sq->boundary_normal(mid)(1) == Approx(1.0).epsilon(1e-12));

  // Generic triangulation of the disk: discrete curvature close to 1/r.
  const auto generic = DomainMesh::from_json(disk->to_json(), disk->metric_ptr());
  for (int v : generic->boundary_vertices()) CHECK(generic->boundary_curvature(v) == Approx(2.5).epsilon(0.02));
}

TEST_CASE("distance to the boundary") {
  const auto disk = make_disk_mesh(0.4, 0.05);
  const auto& d = disk->dist_to_boundary();
  CHECK(d[0] == Approx(0.4).epsilon(1e-14));
  for (int v : disk->boundary_vertices()) CHECK(d[v] == 0.0);
  bool found = false;
  for (int v = 0; v < disk->vertex_count(); ++v) {
    if (std::abs(disk->vertex(v).norm() - 0.25) < 1e-12) {
      CHECK(d[v] == Approx(0.15).epsilon(1e-12));
      found = true;
    }
  }
  CHECK(found);
  const auto cap = make_cap_mesh(1.0, 0.05);
  for (int v = 0; v < cap->vertex_count(); ++v) {
    const double theta = 2.0 * std::atan(cap->vertex(v).norm());
    CHECK(std::abs(cap->dist_to_boundary()[v] - (1.0 - theta)) <= 1e-12);
  }
  for (int v : disk->interior_vertices()) CHECK(d[v] > 0.0);
}

TEST_CASE("discrete distance on a generic mesh has unit gradient away from the medial axis") {
  const auto disk = make_disk_mesh(0.4, 0.02);
  const auto mesh = DomainMesh::from_json(disk->to_json(), disk->metric_ptr());
  const double h = mesh->mesh_size();
  const auto& d = mesh->dist_to_boundary();
  std::vector<std::pair<double, double>> cells;  // (distance to the centre, |grad d|)
  for (int c = 0; c < mesh->cell_count(); ++c) {
    const auto nodes = mesh->cell(c);
    Vec g = Vec::Zero(2);
    for (int a = 0; a < 3; ++a) g += d[nodes[a]] * mesh->basis_gradients(c).col(a);
    cells.push_back({mesh->centroid(c).norm(), g.norm()});
  }
  std::sort(cells.begin(), cells.end());
  const size_t skip = cells.size() / 10;
  for (size_t i = skip; i < cells.size(); ++i) {
    CHECK(cells[i].second >= 1.0 - 10.0 * h);
    CHECK(cells[i].second <= 1.0 + 10.0 * h);
  }
  for (int v = 0; v < mesh->vertex_count(); ++v) {
    CHECK(std::abs(d[v] - (0.4 - mesh->vertex(v).norm())) <= 0.02);
  }
}

TEST_CASE("change of variable r(t)") {
  const auto k = preset_ambient("killing_flat");
  CHECK(k->r_of_t(0.37) == Approx(0.37).epsilon(1e-14));
  CHECK(k->t_of_r(-1.2) == Approx(-1.2).epsilon(1e-14));
  const auto a = preset_ambient("example_a");
  CHECK(a->r_of_t(std::log(2.0)) == Approx(1.0).epsilon(1e-14));
  for (const char* name : kPresets) {
    const auto amb = preset_ambient(name);
    const auto form = preset_warped_form(name);
    double prev = -kInf;
    for (int i = 0; i <= 40; ++i) {
      const double t = -3.0 + i * (std::min(0.5, 0.9 * amb->interval_end()) + 3.0) / 40.0;
      const double r = amb->r_of_t(t);
      CAPTURE(name);
      CAPTURE(t);
      CHECK(r > prev);
      prev = r;
      CHECK(std::abs(amb->t_of_r(r) - t) <= 1e-10);
      CHECK(form.theta(r) == Approx(amb->lambda(t)).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(a->t_of_r(-1.5), DomainError);
}

TEST_CASE("quadrature and root finding path of r(t)") {
  const auto ref = preset_ambient("example_a");
  ConformalFactor lam;
  lam.value = [](double t) { return std::exp(t); };
  lam.first = lam.value;
  lam.second = lam.value;
  const AmbientSpace amb("exp_no_primitive", lam, GammaField::constant_value(1.0, 2), BaseMetric::flat(2),
                         CurvatureModel::flat());
  for (double t : {-2.0, -0.3, 0.4, 1.5}) {
    CHECK(amb.r_of_t(t) == Approx(ref->r_of_t(t)).epsilon(1e-12));
    CHECK(std::abs(amb.t_of_r(amb.r_of_t(t)) - t) <= 1e-10);
  }
  CHECK_THROWS_AS(amb.t_of_r(-2.0), DomainError);
}

TEST_CASE("preset ambient spaces") {
  const Vec u = Vec::Zero(2);
  for (const char* name : {"example_a", "example_b", "example_c"}) {
    const auto amb = preset_ambient(name);
    CAPTURE(name);
    CHECK(amb->lambda(0.0) == Approx(1.0).epsilon(1e-14));
  }
  CHECK(preset_ambient("example_a")->rho(0.0) == Approx(1.0).epsilon(1e-14));
  CHECK(preset_ambient("example_b")->rho(0.0) == Approx(1.0).epsilon(1e-14));
  const auto k = preset_ambient("killing_flat");
  CHECK(k->killing());
  CHECK(std::isinf(k->interval_end()));
  CHECK(k->rho(-3.0) == 0.0);
  CHECK(k->leaf_mean_curvature(2.0, u) == 0.0);
  const auto r = preset_ambient("euclidean_radial");
  CHECK(r->base().tag() == "sphere");
  CHECK(r->curvature_model().kind == CurvatureKind::constant);
  CHECK(preset_ambient("example_c")->interval_end() == Approx(std::asinh(1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(preset_ambient("example_z"), ParameterError);
}

TEST_CASE("lambda must be normalized") {
  ConformalFactor lam;
  lam.value = [](double t) { return 2.0 * std::exp(t); };
  lam.first = lam.value;
  lam.second = lam.value;
  CHECK_THROWS_AS(AmbientSpace("bad", lam, GammaField::constant_value(1.0, 2), BaseMetric::flat(2),
                               CurvatureModel::flat()),
                  ParameterError);
}

TEST_CASE("finite-difference fallback for lambda and gamma") {
  const auto ref = preset_ambient("example_b");
  const auto lam = ConformalFactor::with_finite_differences([](double t) { return 1.0 / (1.0 - t); }, 1.0);
  const auto gam =
      GammaField::with_finite_differences([](const Vec& u) { return std::exp(u(0) + 0.5 * u(1)); }, 2);
  const AmbientSpace fd("fd", lam, gam, BaseMetric::flat(2), CurvatureModel::flat());
  CHECK(fd.finite_difference_derivatives());
  CHECK(fd.lambda_t(0.3) == Approx(ref->lambda_t(0.3)).epsilon(1e-8));
  CHECK(fd.lambda_tt(0.3) == Approx(ref->lambda_tt(0.3)).epsilon(1e-5));
  const Vec u = Vec(Eigen::Vector2d(0.2, -0.1));
  CHECK(fd.gamma_gradient(u)(1) == Approx(0.5 * fd.gamma(u)).epsilon(1e-8));
}

TEST_CASE("base metrics") {
  const auto s = BaseMetric::round_sphere();
  const Vec u = Vec(Eigen::Vector2d(0.3, 0.4));
  CHECK(s->metric(u)(0, 0) == Approx(4.0 / std::pow(1.25, 2)).epsilon(1e-14));
  CHECK((s->metric(u) * s->inverse(u) - Mat::Identity(2, 2)).norm() <= 1e-14);
  // Christoffel symbols against central differences of sigma.
  const auto G = s->christoffel(u);
  const double e = 1e-6;
  for (int k = 0; k < 2; ++k) {
    const Vec du = Vec::Unit(2, k) * e;
    const Mat dS = (s->metric(u + du) - s->metric(u - du)) / (2 * e);
    // sigma = e^{2w} delta gives Gamma^k_kk = w_k = sigma_k / (2 sigma).
    CHECK(G[k](k, k) == Approx(0.5 * dS(k, k) / s->metric(u)(0, 0)).epsilon(1e-6));
  }
  CHECK_THROWS_AS(BaseMetric::hyperbolic_disk()->metric(Vec(Eigen::Vector2d(1.0, 0.5))), DomainError);
}

TEST_CASE("mesh validation") {
  const auto flat = BaseMetric::flat(2);
  std::vector<Vec> v = {Vec(Eigen::Vector2d(0, 0)), Vec(Eigen::Vector2d(1, 0)), Vec(Eigen::Vector2d(0, 1)),
                        Vec(Eigen::Vector2d(1, 1))};
  CHECK_THROWS_AS(DomainMesh(flat, v, {{0, 2, 1}}, {{0, 1, 2}}), MeshError);
  CHECK_THROWS_AS(DomainMesh(flat, v, {{0, 1, 2}, {1, 3, 2}, {0, 1, 3}}, {}), MeshError);
  const DomainMesh ok(flat, v, {{0, 1, 2}, {1, 3, 2}}, {{0, 1, 3, 2}});
  CHECK(ok.boundary_vertices().size() == 4);
  CHECK_THROWS_AS(DomainMesh::from_json(nlohmann::json{{"vertices", {{0, 0}}}, {"cells", {}}}, flat), MeshError);
}

TEST_CASE("mesh exchange format round trip") {
  const auto ann = make_annulus_mesh(0.2, 0.5, 0.05);
  const auto doc = ann->to_json();
  CHECK(doc.contains("triangles"));
  CHECK(doc.at("boundary").size() == 2);
  const auto back = DomainMesh::from_json(doc, ann->metric_ptr());
  CHECK(back->vertex_count() == ann->vertex_count());
  CHECK(back->cell_count() == ann->cell_count());
  CHECK(back->boundary_vertices().size() == ann->boundary_vertices().size());
  for (int v : ann->boundary_vertices()) {
    const double expect = ann->vertex(v).norm() > 0.35 ? 2.0 : -5.0;
    CHECK(ann->boundary_curvature(v) == Approx(expect).epsilon(1e-14));
    CHECK(back->boundary_curvature(v) == Approx(expect).epsilon(0.03));
  }
  const auto line = make_interval_mesh(-1.0, 2.0, 0.1);
  CHECK(line->dim() == 1);
  CHECK(line->to_json().contains("segments"));
  CHECK(line->boundary_vertices().size() == 2);
  CHECK(line->dist_to_boundary()[15] == Approx(1.5).epsilon(1e-12));
}

TEST_CASE("scalar field CSV round trip") {
  const auto mesh = make_disk_mesh(0.4, 0.1);
  const auto f = ScalarField::sample(*mesh, [](const Vec& x) { return std::sin(7.0 * x(0)) / 3.0 + x(1); });
  const auto dir = test::scratch_dir("csv");
  write_field_csv(dir / "f.csv", *mesh, f);
  const auto g = read_field_csv(dir / "f.csv", *mesh);
  CHECK(g.values == f.values);
  CHECK(g.mesh_id == mesh->id());
  const auto other = make_disk_mesh(0.4, 0.05);
  CHECK_THROWS(read_field_csv(dir / "f.csv", *other));
  CHECK_THROWS_AS(f.check(*other, "f"), ParameterError);
}
