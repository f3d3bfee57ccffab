// Python module _core: problem files, solving and the analyses.  JSON reports
// cross the boundary as strings and are decoded by the ckgraph package.
#include "ckg/analysis.hpp"
#include "ckg/commands.hpp"
#include "ckg/solver.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace ckg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const std::vector<double>& v) {
  return Array(static_cast<py::ssize_t>(v.size()), v.data());
}

ScalarField to_field(const ProblemFile& pf, const Array& z) {
  const auto& mesh = *pf.problem.mesh;
  if (z.ndim() != 1 || z.shape(0) != mesh.vertex_count()) {
    throw ParameterError("expected " + std::to_string(mesh.vertex_count()) + " vertex values");
  }
  ScalarField f = ScalarField::constant(mesh, 0.0);
  std::copy(z.data(), z.data() + z.shape(0), f.values.begin());
  f.check(mesh, "z");
  return f;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Prescribed mean curvature Killing graphs";

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<MeshError>(m, "MeshError", PyExc_RuntimeError);
  py::register_exception<NewtonStalled>(m, "NewtonStalled", PyExc_RuntimeError);
  py::register_exception<SingularSystemError>(m, "SingularSystemError", PyExc_RuntimeError);

  py::class_<ProblemFile>(m, "Problem")
      .def_readonly("name", &ProblemFile::name)
      .def_property_readonly("checks", [](const ProblemFile& pf) { return pf.checks; })
      .def_property_readonly("dim", [](const ProblemFile& pf) { return pf.problem.mesh->dim(); })
      .def_property_readonly("vertex_count", [](const ProblemFile& pf) { return pf.problem.mesh->vertex_count(); })
      .def_property_readonly("mesh_size", [](const ProblemFile& pf) { return pf.problem.mesh->mesh_size(); })
      .def_property_readonly("vertices",
                             [](const ProblemFile& pf) {
                               const auto& mesh = *pf.problem.mesh;
                               Array out(std::vector<py::ssize_t>{mesh.vertex_count(), mesh.dim()});
                               auto a = out.mutable_unchecked<2>();
                               for (int v = 0; v < mesh.vertex_count(); ++v) {
                                 for (int d = 0; d < mesh.dim(); ++d) a(v, d) = mesh.vertex(v)(d);
                               }
                               return out;
                             })
      .def_property_readonly("boundary_vertices",
                             [](const ProblemFile& pf) { return pf.problem.mesh->boundary_vertices(); })
      .def_property_readonly("H", [](const ProblemFile& pf) { return to_array(pf.problem.H.values); })
      .def_property_readonly("phi", [](const ProblemFile& pf) { return to_array(pf.problem.phi); });

  m.def("load_problem", &load_problem_file, py::arg("path"));
  m.def(
      "parse_problem",
      [](const std::string& doc, const std::filesystem::path& base_dir) {
        return parse_problem_file(nlohmann::json::parse(doc), base_dir);
      },
      py::arg("doc"), py::arg("base_dir"));

  m.def(
      "solve",
      [](const ProblemFile& pf) {
        ContinuationResult res;
        {
          py::gil_scoped_release release;
          res = continuity_solve(pf.problem);
        }
        return py::make_tuple(to_array(res.z.values), res.report.to_json().dump());
      },
      py::arg("problem"));
  m.def(
      "newton",
      [](const ProblemFile& pf, double tau, const Array& z0) {
        const auto r = newton_solve(pf.problem, tau, to_field(pf, z0));
        return py::make_tuple(to_array(r.z.values), r.iterations);
      },
      py::arg("problem"), py::arg("tau"), py::arg("z0"));
  m.def(
      "residual",
      [](const ProblemFile& pf, const Array& z, double tau) {
        return to_array(residual_Qtau(pf.problem, to_field(pf, z), tau));
      },
      py::arg("problem"), py::arg("z"), py::arg("tau") = 1.0);
  m.def(
      "jacobian",
      [](const ProblemFile& pf, const Array& z, double tau) {
        const auto J = jacobian_Qtau(pf.problem, to_field(pf, z), tau);
        std::vector<int> rows, cols;
        std::vector<double> vals;
        for (const auto& e : J.entries) {
          rows.push_back(pf.problem.mesh->interior_index(e.row_vertex));
          cols.push_back(pf.problem.mesh->interior_index(e.col_vertex));
          vals.push_back(e.value);
        }
        return py::make_tuple(rows, cols, to_array(vals), J.vertices);
      },
      py::arg("problem"), py::arg("z"), py::arg("tau") = 1.0);

  m.def("check", [](const ProblemFile& pf) { return check_hypotheses(pf.problem).to_json().dump(); },
        py::arg("problem"));
  m.def(
      "certify",
      [](const ProblemFile& pf, const Array& z) {
        bool valid = true;
        const auto doc = certify_solution(pf, to_field(pf, z), true, valid);
        return py::make_tuple(doc.dump(), valid);
      },
      py::arg("problem"), py::arg("z"));
  m.def(
      "verify",
      [](const ProblemFile& pf, const Array& z) {
        bool pass = true;
        const auto doc = verify_solution(pf, to_field(pf, z), pass);
        return py::make_tuple(doc.dump(), pass);
      },
      py::arg("problem"), py::arg("z"));
  m.def(
      "probe",
      [](const ProblemFile& pf, const std::vector<double>& depths) {
        return cylinder_monotonicity_probe(pf.problem, depths).to_json().dump();
      },
      py::arg("problem"), py::arg("depths"));
}
