#pragma once

#include "ckg/operator.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ckg {

// ---------------------------------------------------------------- hypotheses

enum class CheckState { pass, fail, not_evaluable, not_applicable };
std::string to_string(CheckState s);

struct HypothesisCondition {
  std::string name;
  std::string requirement;     // the inequality being tested
  std::string required_by;     // which existence statement needs it
  std::optional<double> margin;
  CheckState state = CheckState::not_evaluable;
  std::string note;
  bool informational = false;  // component of an aggregated condition
};

struct HypothesisReport {
  std::string branch;          // "general", "killing" or "closed"
  double t_min = 0.0;          // sampled flow range
  double t_max = 0.0;
  double inf_HK = 0.0;         // inf over the boundary of H_K at t = 0
  double inf_HGamma = 0.0;
  double sup_H = 0.0;
  std::optional<double> ricci_base;     // Ric_M^rad
  std::optional<double> ricci_ambient;  // Ric^rad of the ambient space at t = 0
  std::optional<double> leaf_term;      // (n k^2 - sqrt(gamma) k_t) at t = 0
  bool low_confidence_curvature = false;
  std::vector<HypothesisCondition> conditions;

  const HypothesisCondition& get(const std::string& name) const;
  /// Every evaluable, applicable, non-informational condition passes.
  bool all_pass() const;
  /// Names of the failing applicable conditions.
  std::vector<std::string> failures() const;
  nlohmann::json to_json() const;
};

/// Samples the flow range [min(phi, 0) - 1, min(0.1, interval_end / 2)] with
/// `samples` points.
HypothesisReport check_hypotheses(const Problem& problem, int samples = 512);

// ------------------------------------------------------------------ barriers

struct BarrierCertificate {
  std::string kind;                  // "height", "boundary_lower", "boundary_upper"
  nlohmann::json parameters;
  double min_margin = -kInf;         // min of Q (lower) or -Q (upper) over checked points
  Vec min_location;
  int min_cell = -1;
  int checked_points = 0;
  int skipped_cells = 0;             // cut-locus suspect cells left out
  double boundary_margin = 0.0;      // ordering against phi on the boundary
  std::optional<double> ordering_margin;  // min (z - barrier) or (barrier - z)
  int ordering_vertex = -1;
  double ordering_tol = 0.0;
  std::optional<double> dif_margin;  // sufficient inequality of the height barrier, over U^3
  bool valid = false;

  nlohmann::json to_json() const;
};

struct BarrierResult {
  ScalarField field;                 // barrier values (NaN outside the strip)
  BarrierCertificate certificate;
};

/// Height barrier inf phi + f(d), f = (e^{DB} / D)(e^{-D d} - 1).  When z is
/// given, also checks z >= barrier - ordering_tol at every vertex.
BarrierResult height_barrier(const Problem& problem, double D, double B, const ScalarField* z = nullptr,
                             double ordering_tol = 0.0);

struct HeightSearch {
  std::optional<BarrierResult> result;
  std::vector<BarrierCertificate> attempts;
};
/// D over 1, 2, 4, ..., 2^20 with B = b_factor * diameter; values with
/// D B > 300 are skipped to keep e^{D(B - d)} finite in cubic terms.
HeightSearch search_height_barrier(const Problem& problem, const ScalarField* z = nullptr,
                                   double ordering_tol = 0.0, double b_factor = 1.1);

/// Constant supersolution sup phi with the ordering z <= sup phi at every
/// vertex.  min_margin is min -Q[sup phi]; the certificate is valid when it
/// is nonnegative, the comparison conditions hold on [min z, sup phi] and
/// the ordering holds within ordering_tol.
BarrierResult constant_upper_barrier(const Problem& problem, const ScalarField& z, double ordering_tol = 0.0);

/// w = -mu_t ln(1 + mu d), mu_t = c / ln(1 + mu) on the strip d <= eps, with
/// phi extended constantly along d.  The lower barrier is w + phi, the upper
/// barrier -w + phi.  Ordering against z is checked on every strip vertex.
BarrierResult boundary_barrier(const Problem& problem, double mu, double c, double eps,
                               const ScalarField* z = nullptr, double ordering_tol = 0.0);
BarrierResult upper_barrier_check(const Problem& problem, const ScalarField& z, double mu, double c, double eps,
                                  double ordering_tol = 0.0);

/// f'(0) = -c mu / ln(1 + mu).
double boundary_barrier_slope(double mu, double c);

/// A priori range of solutions used to size the strip barriers: the lower
/// end from a height barrier, the upper end sup phi when constants are
/// supersolutions.  Falls back to the range of the supplied field.
struct HeightEnvelope {
  double lower = 0.0;
  double upper = 0.0;
  std::string lower_source;  // "height_barrier" or "solution"
  std::string upper_source;  // "maximum_principle" or "solution"
  double depth = 0.0;        // required -w(eps)
  nlohmann::json to_json() const;
};
HeightEnvelope height_envelope(const Problem& problem, const ScalarField& z);

struct BoundarySearch {
  HeightEnvelope envelope;
  std::optional<BarrierResult> lower;
  std::optional<BarrierResult> upper;
  std::vector<BarrierCertificate> attempts;
};
/// mu over 10^j (j = 0..8), c over 0.01 * 2^k (k = 0..16).  Parameters are
/// chosen from the problem alone: the first pair whose strip reaches the
/// envelope depth and for which both barriers satisfy the strict
/// differential inequality.  z only enters the ordering checks, so a field
/// that is not a solution cannot steer the choice.
BoundarySearch search_boundary_barrier(const Problem& problem, const ScalarField& z, double eps,
                                       double ordering_tol = 0.0);

/// Inward normal derivative of z at every boundary vertex, from the cells
/// touching it.
std::vector<double> inward_normal_derivative(const Problem& problem, const ScalarField& z);

// ---------------------------------------------------------------- comparison

struct ComparisonResult {
  bool ordered = true;
  std::string direction;     // "z1<=z2" or "z2<=z1"
  double worst_violation = 0.0;
  int worst_vertex = -1;
  Vec worst_location;
  std::string note;
  nlohmann::json to_json() const;
};
/// Checks the ordering of two solutions implied by the ordering of their
/// boundary data.  Throws ParameterError on a mesh mismatch.
ComparisonResult comparison_check(const Problem& p1, const Problem& p2, const ScalarField& z1,
                                  const ScalarField& z2, double tol);

// ------------------------------------------------------- level-set curvature

struct MonotonicityRow {
  double eps;
  bool skipped = false;
  std::string note;
  bool analytic = false;
  int points = 0;
  double min_HK = kInf;
  double max_HK = -kInf;
};
struct MonotonicityProbe {
  double inf_HK;
  double tol;
  std::vector<MonotonicityRow> rows;
  bool monotone = false;     // min over probed depths of H_K >= inf_HK - tol
  nlohmann::json to_json() const;
};
/// Mean curvature of the cylinders over the parallel sets {d = eps} at t = 0.
MonotonicityProbe cylinder_monotonicity_probe(const Problem& problem, const std::vector<double>& depths,
                                              double tol = 1e-6);

/// Polylines of the level set {d = level} of a piecewise-linear field, with
/// the cell each point came from.
struct LevelCurve {
  std::vector<Vec> points;
  std::vector<int> cells;
  bool closed = false;
};
std::vector<LevelCurve> extract_level_curves(const DomainMesh& mesh, const std::vector<double>& values,
                                             double level);

}  // namespace ckg
