#pragma once

#include "ckg/operator.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ckg {

/// Problem file violates the schema.  `pointer` is the JSON pointer of the
/// offending value ("" for the document root).
class SchemaError : public ParameterError {
 public:
  SchemaError(std::string pointer, const std::string& what)
      : ParameterError((pointer.empty() ? std::string("/") : pointer) + ": " + what), pointer(std::move(pointer)) {}
  std::string pointer;
};

struct BarrierSettings {
  std::optional<double> D;
  std::optional<double> B;
  double b_factor = 1.1;
  std::optional<double> mu;
  std::optional<double> c;
  double eps = 0.05;
  /// Ordering tolerance against a solution; h^2 when absent.
  std::optional<double> ordering_tol;
};

/// Hessian recovery turns the O(h^2) nodal error of a discrete solution into
/// O(1) pointwise noise near irregular stencils, so the default compares the
/// mean over interior vertices.
struct VerifySettings {
  double tolerance = 0.02;
  std::string norm = "mean";  // "max" or "mean"
};

struct ProbeSettings {
  std::vector<double> depths{0.05, 0.1, 0.15};
  double tol = 1e-6;
};

/// Analyses a problem file may request.
inline const std::vector<std::string> kKnownChecks{"hypotheses", "height_barrier", "boundary_barrier",
                                                   "monotonicity"};

struct ProblemFile {
  std::filesystem::path source;
  std::string name;
  Problem problem;
  std::vector<std::string> checks{"hypotheses"};
  BarrierSettings barrier;
  VerifySettings verify;
  ProbeSettings probe;

  bool requests(const std::string& check) const;
  double ordering_tol() const;
};

/// Validates and loads a problem file.  Relative mesh and CSV paths are
/// resolved against `base_dir`.  Throws SchemaError for schema violations
/// and ParameterError, MeshError or DomainError for inconsistent data.
ProblemFile parse_problem_file(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ProblemFile load_problem_file(const std::filesystem::path& path);

}  // namespace ckg
