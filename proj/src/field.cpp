#include "ckg/field.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ckg {

ScalarField ScalarField::constant(const DomainMesh& mesh, double value) {
  return {mesh.id(), std::vector<double>(mesh.vertex_count(), value)};
}

ScalarField ScalarField::sample(const DomainMesh& mesh, const std::function<double(const Vec&)>& fn) {
  ScalarField f{mesh.id(), std::vector<double>(mesh.vertex_count())};
  for (int v = 0; v < mesh.vertex_count(); ++v) f.values[v] = fn(mesh.vertex(v));
  return f;
}

void ScalarField::check(const DomainMesh& mesh, const char* what) const {
  if (mesh_id != mesh.id()) throw ParameterError(std::string(what) + " belongs to a different mesh");
  if (size() != mesh.vertex_count()) {
    throw ParameterError(std::string(what) + " has " + std::to_string(size()) + " values for " +
                         std::to_string(mesh.vertex_count()) + " vertices");
  }
  for (int v = 0; v < size(); ++v) {
    if (!std::isfinite(values[v])) {
      throw ParameterError(std::string(what) + " is not finite at vertex " + std::to_string(v));
    }
  }
}

void write_field_csv(const std::filesystem::path& path, const DomainMesh& mesh, const ScalarField& field) {
  field.check(mesh, "field");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "vertex,x,y,value\n" << std::setprecision(17);
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const Vec& x = mesh.vertex(v);
    out << v << ',' << x(0) << ',' << (x.size() > 1 ? x(1) : 0.0) << ',' << field[v] << '\n';
  }
}

ScalarField read_field_csv(const std::filesystem::path& path, const DomainMesh& mesh) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "vertex,x,y,value") throw ParameterError(path.string() + ": expected header vertex,x,y,value");
  ScalarField f{mesh.id(), std::vector<double>(mesh.vertex_count(), std::nan(""))};
  std::vector<bool> seen(mesh.vertex_count(), false);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell[4];
    for (auto& c : cell) std::getline(row, c, ',');
    try {
      const int v = std::stoi(cell[0]);
      if (v < 0 || v >= mesh.vertex_count() || seen[v]) throw std::out_of_range("vertex");
      seen[v] = true;
      f.values[v] = std::stod(cell[3]);
    } catch (const std::exception&) {
      throw ParameterError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
  }
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (!seen[v]) throw ParameterError(path.string() + ": missing vertex " + std::to_string(v));
  }
  f.check(mesh, path.string().c_str());
  return f;
}

}  // namespace ckg
