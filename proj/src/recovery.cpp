#include "ckg/recovery.hpp"

namespace ckg {

RecoveredDerivatives recover_derivatives(const DomainMesh& mesh, const std::vector<double>& values) {
  const int n = mesh.dim();
  const int nv = mesh.vertex_count();
  const int unknowns = n == 2 ? 5 : 2;
  RecoveredDerivatives out;
  out.gradient.assign(nv, Vec::Zero(n));
  out.hessian.assign(nv, Mat::Zero(n, n));
  out.flagged.assign(nv, false);

  for (int v = 0; v < nv; ++v) {
    const Vec& x0 = mesh.vertex(v);
    const auto ring = mesh.two_ring(v);
    Eigen::MatrixXd A(ring.size(), unknowns);
    Eigen::VectorXd b(ring.size());
    // Fit z(x) - z(x0) = g.dx + 1/2 dx^T H dx, value pinned at the vertex.
    for (size_t r = 0; r < ring.size(); ++r) {
      const Vec dx = mesh.vertex(ring[r]) - x0;
      if (n == 2) {
        A.row(r) << dx(0), dx(1), 0.5 * dx(0) * dx(0), dx(0) * dx(1), 0.5 * dx(1) * dx(1);
      } else {
        A.row(r) << dx(0), 0.5 * dx(0) * dx(0);
      }
      b(r) = values[ring[r]] - values[v];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (static_cast<int>(ring.size()) < unknowns || qr.rank() < unknowns) {
      out.flagged[v] = true;
      continue;
    }
    const Eigen::VectorXd c = qr.solve(b);
    Vec g(n);
    Mat H(n, n);
    if (n == 2) {
      g << c(0), c(1);
      H << c(2), c(3), c(3), c(4);
    } else {
      g << c(0);
      H << c(1);
    }
    const auto gam = mesh.metric().christoffel(x0);
    for (int k = 0; k < n; ++k) H -= g(k) * gam[k];
    out.gradient[v] = g;
    out.hessian[v] = H;
    out.flagged[v] = mesh.is_boundary(v);
  }
  return out;
}

}  // namespace ckg
