#pragma once

#include "ckg/mesh.hpp"

#include <filesystem>
#include <functional>
#include <vector>

namespace ckg {

/// Per-vertex values bound to one mesh by its id.
struct ScalarField {
  std::uint64_t mesh_id = 0;
  std::vector<double> values;

  static ScalarField constant(const DomainMesh& mesh, double value);
  static ScalarField sample(const DomainMesh& mesh, const std::function<double(const Vec&)>& fn);

  double operator[](int v) const { return values[v]; }
  double& operator[](int v) { return values[v]; }
  int size() const { return static_cast<int>(values.size()); }

  /// Throws ParameterError when the field does not belong to `mesh` or holds
  /// non-finite values.
  void check(const DomainMesh& mesh, const char* what) const;
};

/// CSV with header "vertex,x,y,value"; y is written as 0 on 1D meshes.
void write_field_csv(const std::filesystem::path& path, const DomainMesh& mesh, const ScalarField& field);
/// Reads a field written by write_field_csv.  Rows may come in any order but
/// every vertex must appear exactly once.
ScalarField read_field_csv(const std::filesystem::path& path, const DomainMesh& mesh);

}  // namespace ckg
