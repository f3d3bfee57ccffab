#pragma once

#include "ckg/analysis.hpp"
#include "ckg/solver.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace ckg::test {

inline constexpr double kCapRadius = 0.4;
inline const double kCapPhi = -std::sqrt(0.84);
inline const double kRadialShift = std::log(std::cos(1.0)) - 0.1;

/// Lower unit hemisphere over the disk of radius 0.4: H = 1 in flat R^3.
inline double cmc_exact(const Vec& x) { return -std::sqrt(1.0 - x.squaredNorm()); }

inline Problem cmc_problem(double h, double phi_shift = 0.0) {
  auto mesh = make_disk_mesh(kCapRadius, h);
  return make_problem(preset_ambient("killing_flat"), mesh, ScalarField::constant(*mesh, 1.0),
                      ScalarField::constant(*mesh, kCapPhi + phi_shift));
}

/// -ln cos(theta) + c0 on the cap theta <= 1 (stereographic chart).
inline double radial_exact(const Vec& x) {
  const double theta = 2.0 * std::atan(x.norm());
  return -std::log(std::cos(theta)) + kRadialShift;
}

inline Problem radial_problem(double h) {
  auto mesh = make_cap_mesh(1.0, h);
  return make_problem(preset_ambient("euclidean_radial"), mesh, ScalarField::constant(*mesh, 0.0),
                      ScalarField::sample(*mesh, radial_exact));
}

inline double max_error(const DomainMesh& mesh, const ScalarField& z, double (*exact)(const Vec&)) {
  double e = 0.0;
  for (int v = 0; v < mesh.vertex_count(); ++v) e = std::max(e, std::abs(z[v] - exact(mesh.vertex(v))));
  return e;
}

/// Smooth random perturbation of a field on the interior vertices.
inline ScalarField random_state(const Problem& P, const ScalarField& base, double amplitude, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double a = U(rng), b = U(rng), c = U(rng), d = U(rng);
  ScalarField z = base;
  for (int v : P.mesh->interior_vertices()) {
    const Vec& x = P.mesh->vertex(v);
    const double y = x.size() > 1 ? x(1) : 0.0;
    z[v] += amplitude * (a * std::sin(3.0 * x(0) + b) + c * std::cos(2.0 * y + d) + 0.1 * U(rng));
  }
  return z;
}

/// Fresh scratch directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ckg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ckg::test
