#pragma once

#include "ckg/ambient.hpp"
#include "ckg/field.hpp"
#include "ckg/mesh.hpp"
#include "ckg/options.hpp"
#include "ckg/recovery.hpp"

#include <Eigen/Sparse>

#include <iosfwd>
#include <memory>
#include <vector>

namespace ckg {

/// Dirichlet problem Q[z] = 0 on the mesh with z = phi on the boundary.
/// phi is stored per boundary vertex in mesh.boundary_vertices() order.
struct Problem {
  std::shared_ptr<const AmbientSpace> ambient;
  std::shared_ptr<const DomainMesh> mesh;
  ScalarField H;
  std::vector<double> phi;
  SolverOptions options;

  /// Checks field bindings, chart compatibility of mesh and ambient and
  /// phi < interval_end.  Throws ParameterError.
  void validate() const;

  int n() const { return ambient->n(); }
  /// Field equal to tau * phi on the boundary and `interior` elsewhere.
  ScalarField boundary_field(double tau, double interior = 0.0) const;
  /// Writes tau * phi into the boundary entries of z.
  void impose_boundary(ScalarField& z, double tau) const;
  double phi_min() const;
  double phi_max() const;
};

/// Builds a Problem from per-vertex phi values (only boundary entries used).
Problem make_problem(std::shared_ptr<const AmbientSpace> ambient, std::shared_ptr<const DomainMesh> mesh,
                     ScalarField H, const ScalarField& phi, SolverOptions options = {});

/// Residual and Jacobian on interior vertices.  Rows and columns are
/// indexed by position in mesh.interior_vertices(); entries keep vertex ids.
struct SparseSystem {
  struct Entry {
    int row_vertex;
    int col_vertex;
    double value;
  };

  std::vector<int> vertices;        // interior vertex ids, row/column order
  std::vector<double> residual;     // empty when only the Jacobian was requested
  std::vector<Entry> entries;       // sorted by (row, col), one per adjacent pair

  int size() const { return static_cast<int>(vertices.size()); }
  Eigen::SparseMatrix<double> matrix() const;
  /// "i j value" lines with vertex ids.
  void dump(std::ostream& out) const;

  static SparseSystem from_matrix(const Eigen::SparseMatrix<double>& A, std::vector<int> vertices);
};

/// Weak residual of Q_tau at every vertex: int Q_tau[z] phi_a over the
/// mesh.  Boundary entries carry the unbalanced boundary flux and are
/// normally ignored.  Throws DomainError when z reaches interval_end.
std::vector<double> residual_Qtau_all(const Problem& problem, const ScalarField& z, double tau);
/// Interior entries of residual_Qtau_all, in interior_vertices() order.
std::vector<double> residual_Qtau(const Problem& problem, const ScalarField& z, double tau);
std::vector<double> residual_Q(const Problem& problem, const ScalarField& z);
/// Residual divided by the lumped mass: a pointwise estimate of Q[z].
std::vector<double> scaled_residual(const Problem& problem, const ScalarField& z, double tau = 1.0);

/// Residual and exact Jacobian of the interior residual w.r.t. interior values.
SparseSystem jacobian_Qtau(const Problem& problem, const ScalarField& z, double tau);

/// Stiffness matrix of the sigma-Laplacian (centroid rule) on interior vertices.
SparseSystem laplacian_system(const DomainMesh& mesh);

// ------------------------------------------------------------ graph geometry

struct GraphEvaluation {
  std::vector<double> grad_sq;    // |grad z|^2_sigma per cell
  std::vector<double> U;          // sqrt(gamma + |grad z|^2)
  std::vector<double> W;          // U / lambda at the cell mean of z
  std::vector<Vec> flux;          // grad z / sqrt(gamma + |grad z|^2) per cell
  std::vector<double> flux_norm;  // sigma-norm of flux
  RecoveredDerivatives recovered;
  double grad_sup = 0.0;
};

GraphEvaluation evaluate_graph(const Problem& problem, const ScalarField& z);
/// max over cells of |grad z|_sigma.
double gradient_sup(const Problem& problem, const ScalarField& z);

/// Upward unit normal of the graph in the coordinate frame (d_t, d_1, ..., d_n)
/// together with the data needed to test it.
struct GraphNormal {
  Vec N;            // components
  Mat metric;       // ambient metric lambda^2 (dt^2 / gamma + sigma) at the graph point
  Mat tangents;     // columns X_i = d_i + z_i d_t
  double t;         // z(u)
  double W;
};
GraphNormal graph_normal(const Problem& problem, const ScalarField& z, const Vec& u);

struct InducedMetric {
  Mat g;
  Mat g_inv;
  double det;
};
/// Induced metric at the centroid of a cell with lambda at the cell mean of z.
InducedMetric induced_metric(const Problem& problem, const ScalarField& z, int cell);

struct SecondFundamentalForm {
  Mat a;        // a_ij
  Mat shape;    // a^i_j = g^ik a_kj
  bool flagged; // recovery unreliable at this vertex
};
SecondFundamentalForm second_fundamental_form(const Problem& problem, const ScalarField& z, int vertex,
                                              const RecoveredDerivatives& recovered);
SecondFundamentalForm second_fundamental_form(const Problem& problem, const ScalarField& z, int vertex);

/// Mean curvature of the graph from the trace formula at every vertex.
struct RecoveredCurvature {
  ScalarField H;
  std::vector<bool> flagged;
};
RecoveredCurvature mean_curvature_of_graph(const Problem& problem, const ScalarField& z);

/// Pointwise mean curvature of a graph given z, its chart gradient and
/// covariant Hessian at u.
double mean_curvature_pointwise(const AmbientSpace& ambient, const Vec& u, double z, const Vec& grad,
                                const Mat& hess);

struct ConditionMargin {
  std::string name;
  double margin;
  bool pass;
};
struct MaxPrincipleReport {
  double t_min;
  double t_max;
  int samples;
  ConditionMargin rho_t;         // min rho_t
  ConditionMargin lambda_t_H;    // min lambda_t * H over t samples and vertices
  bool pass() const { return rho_t.pass && lambda_t_H.pass; }
};
MaxPrincipleReport max_principle_conditions(const AmbientSpace& ambient, const ScalarField& H, double t_min,
                                            double t_max, int samples = 512);

/// Generalized eigenvalues of the flux differential d(grad z / U) / d(grad z)
/// relative to sigma, ascending.  They lie in [gamma / U^3, 1 / U].
struct FluxDifferential {
  Mat matrix;
  Vec eigenvalues;
  double U;
  double gamma;
};
FluxDifferential flux_differential(const AmbientSpace& ambient, const Vec& u, const Vec& grad);

/// Divergence theorem check for the flux term: the sum over all vertices of
/// the weak divergence (including the boundary term) against the boundary
/// flux integral, and the worst per-cell imbalance of sum_a int F.grad phi_a.
struct FluxBalance {
  double weak_sum;
  double boundary_flux;
  double difference;
  double max_cell_imbalance;
};
FluxBalance flux_balance(const Problem& problem, const ScalarField& z);

}  // namespace ckg
