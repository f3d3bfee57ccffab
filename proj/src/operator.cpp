#include "ckg/operator.hpp"

#include "ckg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace ckg {

// ------------------------------------------------------------------- Problem

void Problem::validate() const {
  if (!ambient || !mesh) throw ParameterError("problem needs an ambient space and a mesh");
  if (mesh->dim() != ambient->n()) {
    throw ParameterError("mesh dimension " + std::to_string(mesh->dim()) + " does not match n = " +
                         std::to_string(ambient->n()));
  }
  if (mesh->metric().tag() != ambient->base().tag()) {
    throw ParameterError("mesh chart metric '" + mesh->metric().tag() + "' differs from the base leaf metric '" +
                         ambient->base().tag() + "'");
  }
  H.check(*mesh, "H");
  if (phi.size() != mesh->boundary_vertices().size()) {
    throw ParameterError("phi must have one value per boundary vertex");
  }
  for (size_t i = 0; i < phi.size(); ++i) {
    const int v = mesh->boundary_vertices()[i];
    if (!std::isfinite(phi[i])) throw ParameterError("phi is not finite at vertex " + std::to_string(v));
    if (!(phi[i] < ambient->interval_end())) {
      throw ParameterError("phi reaches interval_end at vertex " + std::to_string(v));
    }
  }
  options.validate();
}

ScalarField Problem::boundary_field(double tau, double interior) const {
  ScalarField f = ScalarField::constant(*mesh, interior);
  impose_boundary(f, tau);
  return f;
}

void Problem::impose_boundary(ScalarField& z, double tau) const {
  const auto& bv = mesh->boundary_vertices();
  for (size_t i = 0; i < bv.size(); ++i) z[bv[i]] = tau * phi[i];
}

double Problem::phi_min() const { return *std::min_element(phi.begin(), phi.end()); }
double Problem::phi_max() const { return *std::max_element(phi.begin(), phi.end()); }

Problem make_problem(std::shared_ptr<const AmbientSpace> ambient, std::shared_ptr<const DomainMesh> mesh,
                     ScalarField H, const ScalarField& phi, SolverOptions options) {
  phi.check(*mesh, "phi");
  Problem p{std::move(ambient), mesh, std::move(H), {}, options};
  for (int v : mesh->boundary_vertices()) p.phi.push_back(phi[v]);
  p.validate();
  return p;
}

// -------------------------------------------------------------- SparseSystem

Eigen::SparseMatrix<double> SparseSystem::matrix() const {
  std::vector<int> index_of;
  int max_vertex = 0;
  for (int v : vertices) max_vertex = std::max(max_vertex, v);
  index_of.assign(max_vertex + 1, -1);
  for (int i = 0; i < size(); ++i) index_of[vertices[i]] = i;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(entries.size());
  for (const auto& e : entries) trip.emplace_back(index_of[e.row_vertex], index_of[e.col_vertex], e.value);
  Eigen::SparseMatrix<double> A(size(), size());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

void SparseSystem::dump(std::ostream& out) const {
  const auto old = out.precision(17);
  for (const auto& e : entries) out << e.row_vertex << ' ' << e.col_vertex << ' ' << e.value << '\n';
  out.precision(old);
}

SparseSystem SparseSystem::from_matrix(const Eigen::SparseMatrix<double>& A, std::vector<int> vertices) {
  SparseSystem s;
  s.vertices = std::move(vertices);
  Eigen::SparseMatrix<double, Eigen::RowMajor> R = A;
  s.entries.reserve(R.nonZeros());
  for (int r = 0; r < R.outerSize(); ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(R, r); it; ++it) {
      s.entries.push_back({s.vertices[r], s.vertices[it.col()], it.value()});
    }
  }
  return s;
}

// ------------------------------------------------------------------ assembly

namespace {

struct Local {
  double r[3] = {0.0, 0.0, 0.0};
  double J[3][3] = {{0.0}};
};

void check_heights(const Problem& P, const ScalarField& z) {
  z.check(*P.mesh, "z");
  const double end = P.ambient->interval_end();
  if (!std::isfinite(end)) return;
  for (int v = 0; v < z.size(); ++v) {
    if (!(z[v] < end)) {
      throw DomainError("z = " + std::to_string(z[v]) + " reaches interval_end at vertex " + std::to_string(v));
    }
  }
}

void check_tau(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("tau must lie in [0, 1]");
}

Vec cell_gradient(const DomainMesh& mesh, const std::vector<double>& z, int c) {
  const auto nodes = mesh.cell(c);
  const Mat& G = mesh.basis_gradients(c);
  Vec g = Vec::Zero(mesh.dim());
  for (size_t a = 0; a < nodes.size(); ++a) g += z[nodes[a]] * G.col(a);
  return g;
}

double cell_mean(const DomainMesh& mesh, const std::vector<double>& z, int c) {
  const auto nodes = mesh.cell(c);
  double s = 0.0;
  for (int a : nodes) s += z[a];
  return s / static_cast<double>(nodes.size());
}

void cell_kernel(const Problem& P, const std::vector<double>& z, double tau, int c, bool jac, Local& out) {
  const DomainMesh& mesh = *P.mesh;
  const AmbientSpace& amb = *P.ambient;
  const BaseMetric& metric = mesh.metric();
  const int n = mesh.dim();
  const int k = n + 1;
  const auto nodes = mesh.cell(c);
  const Mat& G = mesh.basis_gradients(c);
  const double meas = mesh.chart_measure(c);
  const Vec g = cell_gradient(mesh, z, c);

  // Flux term, integrated by parts with the centroid rule.
  {
    const Vec xc = mesh.centroid(c);
    const Mat Sinv = metric.inverse(xc);
    const double w = meas * metric.volume_density(xc);
    const Vec p = Sinv * g;
    const double U = std::sqrt(amb.gamma(xc) + g.dot(p));
    for (int a = 0; a < k; ++a) out.r[a] -= w * p.dot(G.col(a)) / U;
    if (jac) {
      const Mat D = Sinv / U - p * p.transpose() / (U * U * U);
      for (int a = 0; a < k; ++a) {
        const Vec DGa = D * G.col(a);
        for (int b = 0; b < k; ++b) out.J[a][b] -= w * DGa.dot(G.col(b));
      }
    }
  }

  // Lower-order terms; lambda and rho at the cell mean of z.
  const double zmid = cell_mean(mesh, z, c);
  const double lam = amb.lambda(zmid);
  const double rho = amb.rho(zmid);
  const double lam_t = jac ? amb.lambda_t(zmid) : 0.0;
  const double rho_t = jac ? amb.rho_t(zmid) : 0.0;
  const CellQuadrature& quad = mesh.lower_order_quadrature();
  for (size_t q = 0; q < quad.weights.size(); ++q) {
    const auto& bary = quad.bary[q];
    const Vec xq = mesh.point(c, bary);
    const double w = meas * quad.weights[q] * metric.volume_density(xq);
    const Mat Sinv = metric.inverse(xq);
    const double gam = amb.gamma(xq);
    const Vec dgam = amb.gamma_gradient(xq);
    const Vec p = Sinv * g;
    const double U = std::sqrt(gam + g.dot(p));
    const double s = dgam.dot(p);
    double Hq = 0.0;
    for (int a = 0; a < k; ++a) Hq += bary[a] * P.H[nodes[a]];
    const double S = -s / (2.0 * gam * U) - tau * (n * gam * rho / U + n * lam * Hq);
    for (int a = 0; a < k; ++a) out.r[a] += w * S * bary[a];
    if (jac) {
      const double U3 = U * U * U;
      const Vec dSdg = -(Sinv * dgam) / (2.0 * gam * U) + (s / (2.0 * gam * U3) + tau * n * gam * rho / U3) * p;
      const double dSdm = -tau * (n * gam * rho_t / U + n * lam_t * Hq);
      for (int b = 0; b < k; ++b) {
        const double dS = dSdg.dot(G.col(b)) + dSdm / k;
        for (int a = 0; a < k; ++a) out.J[a][b] += w * bary[a] * dS;
      }
    }
  }
}

std::vector<Local> assemble_cells(const Problem& P, const ScalarField& z, double tau, bool jac) {
  std::vector<Local> locals(P.mesh->cell_count());
  parallel_for(P.mesh->cell_count(), [&](int c) { cell_kernel(P, z.values, tau, c, jac, locals[c]); });
  return locals;
}

}  // namespace

std::vector<double> residual_Qtau_all(const Problem& problem, const ScalarField& z, double tau) {
  check_tau(tau);
  check_heights(problem, z);
  const DomainMesh& mesh = *problem.mesh;
  const auto locals = assemble_cells(problem, z, tau, false);
  std::vector<double> r(mesh.vertex_count(), 0.0);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const auto nodes = mesh.cell(c);
    for (size_t a = 0; a < nodes.size(); ++a) r[nodes[a]] += locals[c].r[a];
  }
  return r;
}

std::vector<double> residual_Qtau(const Problem& problem, const ScalarField& z, double tau) {
  const auto all = residual_Qtau_all(problem, z, tau);
  const auto& iv = problem.mesh->interior_vertices();
  std::vector<double> r(iv.size());
  for (size_t i = 0; i < iv.size(); ++i) r[i] = all[iv[i]];
  return r;
}

std::vector<double> residual_Q(const Problem& problem, const ScalarField& z) {
  return residual_Qtau(problem, z, 1.0);
}

std::vector<double> scaled_residual(const Problem& problem, const ScalarField& z, double tau) {
  auto r = residual_Qtau(problem, z, tau);
  const auto& iv = problem.mesh->interior_vertices();
  const auto& mass = problem.mesh->lumped_mass();
  for (size_t i = 0; i < iv.size(); ++i) r[i] /= mass[iv[i]];
  return r;
}

SparseSystem jacobian_Qtau(const Problem& problem, const ScalarField& z, double tau) {
  check_tau(tau);
  check_heights(problem, z);
  const DomainMesh& mesh = *problem.mesh;
  const auto locals = assemble_cells(problem, z, tau, true);
  const int ni = static_cast<int>(mesh.interior_vertices().size());
  std::vector<double> r(ni, 0.0);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.cell_count() * 9);
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const auto nodes = mesh.cell(c);
    for (size_t a = 0; a < nodes.size(); ++a) {
      const int ia = mesh.interior_index(nodes[a]);
      if (ia < 0) continue;
      r[ia] += locals[c].r[a];
      for (size_t b = 0; b < nodes.size(); ++b) {
        const int ib = mesh.interior_index(nodes[b]);
        if (ib >= 0) trip.emplace_back(ia, ib, locals[c].J[a][b]);
      }
    }
  }
  Eigen::SparseMatrix<double> A(ni, ni);
  A.setFromTriplets(trip.begin(), trip.end());
  auto sys = SparseSystem::from_matrix(A, mesh.interior_vertices());
  sys.residual = std::move(r);
  return sys;
}

SparseSystem laplacian_system(const DomainMesh& mesh) {
  const int ni = static_cast<int>(mesh.interior_vertices().size());
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const auto nodes = mesh.cell(c);
    const Mat& G = mesh.basis_gradients(c);
    const Vec xc = mesh.centroid(c);
    const Mat Sinv = mesh.metric().inverse(xc);
    const double w = mesh.chart_measure(c) * mesh.metric().volume_density(xc);
    for (size_t a = 0; a < nodes.size(); ++a) {
      const int ia = mesh.interior_index(nodes[a]);
      if (ia < 0) continue;
      for (size_t b = 0; b < nodes.size(); ++b) {
        const int ib = mesh.interior_index(nodes[b]);
        if (ib >= 0) trip.emplace_back(ia, ib, w * G.col(a).dot(Sinv * G.col(b)));
      }
    }
  }
  Eigen::SparseMatrix<double> A(ni, ni);
  A.setFromTriplets(trip.begin(), trip.end());
  return SparseSystem::from_matrix(A, mesh.interior_vertices());
}

// ------------------------------------------------------------ graph geometry

GraphEvaluation evaluate_graph(const Problem& problem, const ScalarField& z) {
  check_heights(problem, z);
  const DomainMesh& mesh = *problem.mesh;
  const AmbientSpace& amb = *problem.ambient;
  const int nc = mesh.cell_count();
  GraphEvaluation ev;
  ev.grad_sq.resize(nc);
  ev.U.resize(nc);
  ev.W.resize(nc);
  ev.flux.resize(nc);
  ev.flux_norm.resize(nc);
  for (int c = 0; c < nc; ++c) {
    const Vec xc = mesh.centroid(c);
    const Vec g = cell_gradient(mesh, z.values, c);
    const Vec p = mesh.metric().inverse(xc) * g;
    ev.grad_sq[c] = g.dot(p);
    ev.U[c] = std::sqrt(amb.gamma(xc) + ev.grad_sq[c]);
    ev.W[c] = ev.U[c] / amb.lambda(cell_mean(mesh, z.values, c));
    ev.flux[c] = p / ev.U[c];
    ev.flux_norm[c] = std::sqrt(ev.grad_sq[c]) / ev.U[c];
    ev.grad_sup = std::max(ev.grad_sup, std::sqrt(ev.grad_sq[c]));
  }
  ev.recovered = recover_derivatives(mesh, z.values);
  return ev;
}

double gradient_sup(const Problem& problem, const ScalarField& z) {
  const DomainMesh& mesh = *problem.mesh;
  double sup = 0.0;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const Vec g = cell_gradient(mesh, z.values, c);
    sup = std::max(sup, mesh.metric().norm(mesh.centroid(c), mesh.metric().inverse(mesh.centroid(c)) * g));
  }
  return sup;
}

GraphNormal graph_normal(const Problem& problem, const ScalarField& z, const Vec& u) {
  const DomainMesh& mesh = *problem.mesh;
  const AmbientSpace& amb = *problem.ambient;
  const auto hit = mesh.locate(u);
  if (!hit) throw DomainError("point lies outside the mesh");
  const auto [c, bary] = *hit;
  const auto nodes = mesh.cell(c);
  double t = 0.0;
  for (size_t a = 0; a < nodes.size(); ++a) t += bary[a] * z[nodes[a]];
  const int n = mesh.dim();
  const Vec g = cell_gradient(mesh, z.values, c);
  const Mat S = mesh.metric().metric(u);
  const Vec p = S.ldlt().solve(g);
  const double gam = amb.gamma(u);
  const double lam = amb.lambda(t);
  const double W = std::sqrt(gam + g.dot(p)) / lam;

  GraphNormal out;
  out.t = t;
  out.W = W;
  out.N = Vec::Zero(n + 1);
  out.N(0) = gam / (lam * lam * W);
  out.N.tail(n) = -p / (lam * lam * W);
  out.metric = Mat::Zero(n + 1, n + 1);
  out.metric(0, 0) = lam * lam / gam;
  out.metric.bottomRightCorner(n, n) = lam * lam * S;
  out.tangents = Mat::Zero(n + 1, n);
  for (int i = 0; i < n; ++i) {
    out.tangents(0, i) = g(i);
    out.tangents(i + 1, i) = 1.0;
  }
  return out;
}

InducedMetric induced_metric(const Problem& problem, const ScalarField& z, int cell) {
  const DomainMesh& mesh = *problem.mesh;
  const AmbientSpace& amb = *problem.ambient;
  const Vec xc = mesh.centroid(cell);
  const Vec g = cell_gradient(mesh, z.values, cell);
  const Mat S = mesh.metric().metric(xc);
  const Mat Sinv = mesh.metric().inverse(xc);
  const Vec p = Sinv * g;
  const double gam = amb.gamma(xc);
  const double U2 = gam + g.dot(p);
  const double lam2 = std::pow(amb.lambda(cell_mean(mesh, z.values, cell)), 2);
  const int n = mesh.dim();
  return {lam2 * (S + g * g.transpose() / gam), (Sinv - p * p.transpose() / U2) / lam2,
          std::pow(lam2, n) * S.determinant() * U2 / gam};
}

SecondFundamentalForm second_fundamental_form(const Problem& problem, const ScalarField& z, int vertex,
                                              const RecoveredDerivatives& rec) {
  const DomainMesh& mesh = *problem.mesh;
  const AmbientSpace& amb = *problem.ambient;
  const Vec& u = mesh.vertex(vertex);
  const Vec& g = rec.gradient[vertex];
  const Mat& hess = rec.hessian[vertex];
  const Mat S = mesh.metric().metric(u);
  const Mat Sinv = mesh.metric().inverse(u);
  const Vec p = Sinv * g;
  const double gam = amb.gamma(u);
  const Vec dgam = amb.gamma_gradient(u);
  const double t = z[vertex];
  const double lam = amb.lambda(t);
  const double rho = amb.rho(t);
  const double U2 = gam + g.dot(p);
  const double W = std::sqrt(U2) / lam;
  const Mat ggT = g * g.transpose();
  const Mat a = (hess - rho * ggT - rho * gam * S - (dgam * g.transpose() + g * dgam.transpose()) / (2.0 * gam) -
                 dgam.dot(p) * ggT / (2.0 * gam * gam)) /
                W;
  const Mat g_inv = (Sinv - p * p.transpose() / U2) / (lam * lam);
  return {a, g_inv * a, rec.flagged[vertex]};
}

SecondFundamentalForm second_fundamental_form(const Problem& problem, const ScalarField& z, int vertex) {
  return second_fundamental_form(problem, z, vertex, recover_derivatives(*problem.mesh, z.values));
}

double mean_curvature_pointwise(const AmbientSpace& amb, const Vec& u, double z, const Vec& grad,
                                const Mat& hess) {
  const int n = amb.n();
  const Mat Sinv = amb.base().inverse(u);
  const Vec p = Sinv * grad;
  const double gam = amb.gamma(u);
  const double gz = amb.gamma_gradient(u).dot(p);
  const double U2 = gam + grad.dot(p);
  const double U = std::sqrt(U2);
  const Mat P = Sinv - p * p.transpose() / U2;
  const double trace = (P.array() * hess.array()).sum();
  const double nlH = trace / U - gz / (2.0 * U2 * U) - (gz / (2.0 * gam) + n * gam * amb.rho(z)) / U;
  return nlH / (n * amb.lambda(z));
}

RecoveredCurvature mean_curvature_of_graph(const Problem& problem, const ScalarField& z) {
  check_heights(problem, z);
  const DomainMesh& mesh = *problem.mesh;
  const auto rec = recover_derivatives(mesh, z.values);
  RecoveredCurvature out{ScalarField::constant(mesh, 0.0), rec.flagged};
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    out.H[v] = mean_curvature_pointwise(*problem.ambient, mesh.vertex(v), z[v], rec.gradient[v], rec.hessian[v]);
  }
  return out;
}

MaxPrincipleReport max_principle_conditions(const AmbientSpace& ambient, const ScalarField& H, double t_min,
                                            double t_max, int samples) {
  if (samples < 2 || !(t_max >= t_min)) throw ParameterError("t range needs t_min <= t_max and 2 samples");
  const double h_min = *std::min_element(H.values.begin(), H.values.end());
  const double h_max = *std::max_element(H.values.begin(), H.values.end());
  double rho_t_min = kInf;
  double lth_min = kInf;
  for (int i = 0; i < samples; ++i) {
    const double t = t_min + (t_max - t_min) * i / (samples - 1);
    rho_t_min = std::min(rho_t_min, ambient.rho_t(t));
    const double lt = ambient.lambda_t(t);
    lth_min = std::min({lth_min, lt * h_min, lt * h_max});
  }
  constexpr double slack = 1e-12;
  return {t_min,
          t_max,
          samples,
          {"rho_t_nonneg", rho_t_min, rho_t_min >= -slack},
          {"lambda_t_H_nonneg", lth_min, lth_min >= -slack}};
}

FluxDifferential flux_differential(const AmbientSpace& ambient, const Vec& u, const Vec& grad) {
  const Mat Sinv = ambient.base().inverse(u);
  const Vec p = Sinv * grad;
  const double gam = ambient.gamma(u);
  const double U = std::sqrt(gam + grad.dot(p));
  FluxDifferential out;
  out.U = U;
  out.gamma = gam;
  out.matrix = Sinv / U - p * p.transpose() / (U * U * U);
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(out.matrix, Sinv);
  out.eigenvalues = es.eigenvalues();
  return out;
}

FluxBalance flux_balance(const Problem& problem, const ScalarField& z) {
  check_heights(problem, z);
  const DomainMesh& mesh = *problem.mesh;
  const AmbientSpace& amb = *problem.ambient;
  const int nc = mesh.cell_count();
  std::vector<double> weak(mesh.vertex_count(), 0.0);
  std::vector<Vec> F(nc);
  std::vector<double> dens(nc);
  FluxBalance out{0.0, 0.0, 0.0, 0.0};
  for (int c = 0; c < nc; ++c) {
    const auto nodes = mesh.cell(c);
    const Mat& G = mesh.basis_gradients(c);
    const Vec xc = mesh.centroid(c);
    const Vec g = cell_gradient(mesh, z.values, c);
    const Vec p = mesh.metric().inverse(xc) * g;
    F[c] = p / std::sqrt(amb.gamma(xc) + g.dot(p));
    dens[c] = mesh.metric().volume_density(xc);
    double cell_sum = 0.0;
    for (size_t a = 0; a < nodes.size(); ++a) {
      const double term = -mesh.chart_measure(c) * dens[c] * F[c].dot(G.col(a));
      weak[nodes[a]] += term;
      cell_sum += term;
    }
    out.max_cell_imbalance = std::max(out.max_cell_imbalance, std::abs(cell_sum));
  }

  auto cell_with = [&](int a, int b) {
    for (int c : mesh.cells_of_vertex(a)) {
      const auto nodes = mesh.cell(c);
      if (std::find(nodes.begin(), nodes.end(), b) != nodes.end()) return c;
    }
    throw MeshError("boundary edge without a cell");
  };

  if (mesh.dim() == 1) {
    for (int v : mesh.boundary_vertices()) {
      const int c = mesh.cells_of_vertex(v).front();
      // Outward chart normal is minus the inward one.
      const double nu = mesh.boundary_normal(v)(0) > 0.0 ? -1.0 : 1.0;
      const double flux = dens[c] * F[c](0) * nu;
      weak[v] += flux;
      out.boundary_flux += flux;
    }
  } else {
    for (const auto& loop : mesh.boundary_loops()) {
      for (size_t i = 0; i < loop.size(); ++i) {
        const int a = loop[i];
        const int b = loop[(i + 1) % loop.size()];
        const int c = cell_with(a, b);
        const Vec d = mesh.vertex(b) - mesh.vertex(a);
        Vec nu(2);
        nu << d(1), -d(0);  // outward, scaled by the chart edge length
        const double flux = dens[c] * F[c].dot(nu);
        weak[a] += 0.5 * flux;
        weak[b] += 0.5 * flux;
        out.boundary_flux += flux;
      }
    }
  }
  for (double w : weak) out.weak_sum += w;
  out.difference = std::abs(out.weak_sum - out.boundary_flux);
  return out;
}

}  // namespace ckg
