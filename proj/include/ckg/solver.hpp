#pragma once

#include "ckg/operator.hpp"

#include "json.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ckg {

/// The linear system is singular; `vertex` is the mesh vertex of the
/// offending column when it could be identified, -1 otherwise.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, int vertex) : std::runtime_error(what), vertex(vertex) {}
  int vertex;
};

/// Newton ran out of iterations or could not reduce the residual.
class NewtonStalled : public std::runtime_error {
 public:
  NewtonStalled(const std::string& what, ScalarField best, double best_norm, bool clamped)
      : std::runtime_error(what), best(std::move(best)), best_norm(best_norm), clamped(clamped) {}
  ScalarField best;
  double best_norm;
  bool clamped;
};

/// Sparse LU with iterative refinement; rhs and result are in the row order
/// of the system.
std::vector<double> linear_solve(const SparseSystem& system, const std::vector<double>& rhs);
std::vector<double> linear_solve(const Eigen::SparseMatrix<double>& A, const std::vector<double>& rhs,
                                 const std::vector<int>& vertices = {});

/// Discrete sigma-harmonic function with the given boundary values
/// (interior entries of `boundary` ignored).
ScalarField harmonic_extension(const DomainMesh& mesh, const ScalarField& boundary);

struct NewtonResult {
  ScalarField z;
  int iterations = 0;
  std::vector<double> residual_norms;  // before each step and at the end
  bool clamped = false;
};

/// Damped Newton for Q_tau[z] = 0 with z = tau * phi on the boundary.  The
/// boundary values of z_init are overwritten.  Each iteration is written to
/// `log` as one JSON line when given.
NewtonResult newton_solve(const Problem& problem, double tau, ScalarField z_init, std::ostream* log = nullptr);

enum class SolveStatus { converged, stalled, left_interval };
std::string to_string(SolveStatus s);

struct NewtonRecord {
  double tau;
  int iterations;
  std::vector<double> residual_norms;
  bool accepted;
};

struct SolveReport {
  std::vector<double> tau_path;
  std::vector<NewtonRecord> newton_history;
  std::vector<double> grad_sup_history;
  SolveStatus status = SolveStatus::stalled;
  bool clamped = false;
  double final_residual = 0.0;
  std::string message;

  nlohmann::json to_json() const;
};

struct ContinuationResult {
  ScalarField z;
  SolveReport report;
};

/// Continuation in tau from the trivial solution at tau = 0 to tau = 1 using
/// problem.options.  Each attempt starts from the previous solution plus the
/// harmonic lift of the boundary increment.
ContinuationResult continuity_solve(const Problem& problem, std::ostream* log = nullptr);

}  // namespace ckg
