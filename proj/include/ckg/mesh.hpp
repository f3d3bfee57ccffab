#pragma once

#include "ckg/ambient.hpp"
#include "ckg/types.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace ckg {

/// Vertex indices of a simplex; the last entry is unused (-1) on 1D meshes.
using Cell = std::array<int, 3>;

/// Analytic description carried by meshes built from a preset constructor.
/// disk: a = radius (flat).  annulus: a = inner, b = outer radius (flat).
/// cap: a = polar angle theta0 on the unit sphere (stereographic chart).
/// interval: [a, b] (flat, n = 1).
struct PresetShape {
  enum class Kind { disk, annulus, cap, interval };
  Kind kind;
  double a = 0.0;
  double b = 0.0;
};

/// Quadrature rule on a cell: barycentric points and weights summing to 1.
struct CellQuadrature {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weights;
};

/// Triangulated (or, for n = 1, segmented) bounded domain in a single chart
/// of (M, sigma).  Immutable after construction.
///
/// Boundary loops are stored with the domain on their left.  Every boundary
/// vertex carries the inward sigma-unit normal and the mean curvature of the
/// boundary with respect to it (positive on convex boundaries).
class DomainMesh {
 public:
  DomainMesh(std::shared_ptr<const BaseMetric> metric, std::vector<Vec> vertices,
             std::vector<Cell> cells, std::vector<std::vector<int>> boundary_loops,
             std::optional<PresetShape> preset = std::nullopt);

  /// {vertices: [[x,y],...], triangles: [[i,j,k],...], boundary: [[i,...],...]};
  /// 1D meshes use "segments" instead of "triangles".
  static std::shared_ptr<const DomainMesh> from_json(const nlohmann::json& doc,
                                                     std::shared_ptr<const BaseMetric> metric);
  nlohmann::json to_json() const;

  std::uint64_t id() const { return id_; }
  int dim() const { return dim_; }
  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int cell_count() const { return static_cast<int>(cells_.size()); }
  const Vec& vertex(int v) const { return vertices_[v]; }
  const std::vector<Vec>& vertices() const { return vertices_; }
  std::span<const int> cell(int c) const { return {cells_[c].data(), static_cast<size_t>(dim_ + 1)}; }
  const BaseMetric& metric() const { return *metric_; }
  std::shared_ptr<const BaseMetric> metric_ptr() const { return metric_; }
  const std::optional<PresetShape>& preset() const { return preset_; }

  const std::vector<std::vector<int>>& boundary_loops() const { return loops_; }
  bool is_boundary(int v) const { return interior_index_[v] < 0; }
  const std::vector<int>& boundary_vertices() const { return boundary_vertices_; }
  const std::vector<int>& interior_vertices() const { return interior_vertices_; }
  int interior_index(int v) const { return interior_index_[v]; }
  /// Position of v in boundary_vertices(), -1 for interior vertices.
  int boundary_index(int v) const { return boundary_index_[v]; }

  /// Inward sigma-unit normal at a boundary vertex.
  const Vec& boundary_normal(int v) const { return normals_[boundary_index_checked(v)]; }
  /// H_Gamma at a boundary vertex (analytic for presets, discrete otherwise).
  double boundary_curvature(int v) const { return curvature_[boundary_index_checked(v)]; }
  bool boundary_curvature_low_confidence(int v) const {
    return low_confidence_[boundary_index_checked(v)];
  }

  /// sigma-distance to the boundary at every vertex.
  const std::vector<double>& dist_to_boundary() const { return dist_; }
  /// Cells where the discrete |grad d| deviates from 1 by more than 10 h.
  const std::vector<bool>& cut_locus_suspect() const { return suspect_; }

  const std::vector<int>& cells_of_vertex(int v) const { return vertex_cells_[v]; }
  const std::vector<int>& neighbors(int v) const { return neighbors_[v]; }
  /// Vertices within two edges of v, v excluded.
  std::vector<int> two_ring(int v) const;

  /// Largest sigma edge length.
  double mesh_size() const { return h_; }
  /// sigma-diameter estimate (closed form for presets, graph distance otherwise).
  double diameter() const { return diameter_; }

  /// Chart measure of a cell (area, or length for 1D).
  double chart_measure(int c) const { return measure_[c]; }
  /// Chart gradients of the hat functions, column a for local vertex a.
  const Mat& basis_gradients(int c) const { return grads_[c]; }
  Vec centroid(int c) const;
  Vec point(int c, const std::array<double, 3>& bary) const;
  /// Three-point edge-midpoint rule on triangles, two-point Gauss on segments.
  const CellQuadrature& lower_order_quadrature() const { return quad_; }
  /// Row sums of the sigma mass matrix under lower_order_quadrature().
  const std::vector<double>& lumped_mass() const { return lumped_; }

  /// Cell containing the chart point and its barycentric coordinates.
  std::optional<std::pair<int, std::array<double, 3>>> locate(const Vec& u) const;

  /// Discrete geodesic curvature of a boundary polyline at `v` with inward
  /// normal `eta`, from a three-point quadratic fit and the Christoffel
  /// correction.  Exposed for level-curve probing.  `low_confidence` is set
  /// for collinear or badly graded triples.
  static double polyline_curvature(const BaseMetric& metric, const Vec& prev, const Vec& at,
                                   const Vec& next, const Vec& eta, bool* low_confidence);

 private:
  int boundary_index_checked(int v) const;
  void validate_and_orient();
  void build_topology();
  void build_geometry();
  void build_boundary_data();
  void build_distance();

  static std::uint64_t next_id();

  std::uint64_t id_;
  std::shared_ptr<const BaseMetric> metric_;
  int dim_;
  std::vector<Vec> vertices_;
  std::vector<Cell> cells_;
  std::vector<std::vector<int>> loops_;
  std::optional<PresetShape> preset_;

  std::vector<int> interior_index_;
  std::vector<int> boundary_index_;
  std::vector<int> boundary_vertices_;
  std::vector<int> interior_vertices_;
  std::vector<std::vector<int>> vertex_cells_;
  std::vector<std::vector<int>> neighbors_;

  std::vector<double> measure_;
  std::vector<Mat> grads_;
  CellQuadrature quad_;
  std::vector<double> lumped_;
  double h_ = 0.0;
  double diameter_ = 0.0;

  std::vector<Vec> normals_;
  std::vector<double> curvature_;
  std::vector<bool> low_confidence_;
  std::vector<double> dist_;
  std::vector<bool> suspect_;
};

/// Graph-distance refinement passes used by distance_to_boundary on
/// non-preset meshes.
struct DistanceOptions {
  int gauss_seidel_sweeps = 1;
};

/// sigma-distance to the boundary: closed form for presets, otherwise
/// Dijkstra on edges followed by Gauss-Seidel eikonal sweeps in Dijkstra order.
std::vector<double> distance_to_boundary(const DomainMesh& mesh, const DistanceOptions& opts = {});

/// H_Gamma at a boundary vertex; analytic value for preset meshes.
struct BoundaryCurvature {
  double value;
  bool low_confidence;
};
BoundaryCurvature boundary_mean_curvature(const DomainMesh& mesh, int vertex);

// ----------------------------------------------------- preset constructors

/// Flat disk of radius r centred at the origin, concentric rings of 6k vertices.
std::shared_ptr<const DomainMesh> make_disk_mesh(double radius, double h);
/// Flat annulus r_in < |x| < r_out.
std::shared_ptr<const DomainMesh> make_annulus_mesh(double r_in, double r_out, double h);
/// Geodesic cap theta <= theta0 of the unit sphere in the stereographic chart.
std::shared_ptr<const DomainMesh> make_cap_mesh(double theta0, double h);
/// Flat interval [a, b] for the one-dimensional base.
std::shared_ptr<const DomainMesh> make_interval_mesh(double a, double b, double h);

/// Mean curvature of the parallel level set Gamma_eps = {d = eps} of a preset
/// domain with respect to the inward normal; nullopt for non-preset meshes or
/// when eps leaves the domain.  For an annulus, `outer` selects the component.
std::optional<double> preset_level_curvature(const PresetShape& shape, double eps, bool outer = true);

}  // namespace ckg
