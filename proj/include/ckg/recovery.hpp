#pragma once

#include "ckg/mesh.hpp"

#include <vector>

namespace ckg {

/// Per-vertex derivatives of a piecewise-linear field recovered by a
/// least-squares quadratic fit over the vertex 2-ring.
struct RecoveredDerivatives {
  std::vector<Vec> gradient;      // z_i
  std::vector<Mat> hessian;       // covariant z_{i;j}
  std::vector<bool> flagged;      // boundary vertex or rank-deficient stencil
};

RecoveredDerivatives recover_derivatives(const DomainMesh& mesh, const std::vector<double>& values);

}  // namespace ckg
