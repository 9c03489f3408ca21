// Python bindings for the solver core.  Meshes cross the boundary as
// numpy arrays (copies); coefficient fields as python callables.
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "obstakl/adaptivity.hpp"
#include "obstakl/applications.hpp"
#include "obstakl/cli_io.hpp"
#include "obstakl/errors.hpp"
#include "obstakl/geometry.hpp"
#include "obstakl/mesh.hpp"
#include "obstakl/solver.hpp"

namespace py = pybind11;
using namespace obstakl;

namespace {

Eigen::MatrixXd vertex_matrix(const TriMesh& mesh) {
  Eigen::MatrixXd V(mesh.num_vertices(), 2);
  for (int i = 0; i < mesh.num_vertices(); ++i) V.row(i) = mesh.vertices[i];
  return V;
}

Eigen::MatrixXi triangle_matrix(const TriMesh& mesh) {
  Eigen::MatrixXi T(mesh.num_triangles(), 3);
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int k = 0; k < 3; ++k) T(t, k) = mesh.triangles[t][k];
  return T;
}

TriMesh mesh_from_arrays(const Eigen::MatrixXd& V, const Eigen::MatrixXi& T) {
  if (V.cols() != 2) throw InvalidInputError("vertices must be n x 2");
  if (T.cols() != 3) throw InvalidInputError("triangles must be m x 3");
  TriMesh mesh;
  mesh.vertices.reserve(V.rows());
  for (long i = 0; i < V.rows(); ++i) mesh.vertices.emplace_back(V(i, 0), V(i, 1));
  mesh.triangles.reserve(T.rows());
  for (long t = 0; t < T.rows(); ++t)
    mesh.triangles.push_back({T(t, 0), T(t, 1), T(t, 2)});
  mesh.build_topology();
  return mesh;
}

ScalarField as_field(const std::function<double(double, double)>& f) {
  return [f](const Vec2& p) { return f(p.x(), p.y()); };
}

struct PySolveResult {
  Eigen::VectorXd u;
  Eigen::VectorXd lam;
  PdasReport report;
};

PySolveResult solve_problem(const ObstacleProblem& prob, double tol,
                            int max_iter) {
  DofBasis V = make_basis(prob.mesh, ElementKind::P2Bubble);
  DofBasis Q = make_basis(prob.mesh, ElementKind::P0);
  PdasOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  PdasReport rep;
  MixedSolution sol = pdas_solve(prob, V, Q, nullptr, opt, &rep);
  return {sol.u, sol.lam, rep};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive mixed finite element solver for obstacle problems";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidInputError>(m, "InvalidInputError",
                                            PyExc_ValueError);
  py::register_exception<NonConvergenceError>(m, "NonConvergenceError",
                                              PyExc_RuntimeError);

  py::class_<TriMesh>(m, "Mesh")
      .def(py::init(&mesh_from_arrays), py::arg("vertices"),
           py::arg("triangles"))
      .def_property_readonly("vertices", &vertex_matrix)
      .def_property_readonly("triangles", &triangle_matrix)
      .def_property_readonly("num_vertices", &TriMesh::num_vertices)
      .def_property_readonly("num_triangles", &TriMesh::num_triangles)
      .def_property_readonly("quadratic",
                             [](const TriMesh& mesh) { return mesh.quadratic; })
      .def_property_readonly(
          "periodic",
          [](const TriMesh& mesh) { return mesh.periodic.has_value(); })
      .def("validate", &TriMesh::validate)
      .def("save", &save_mesh, py::arg("path"));

  py::class_<SignedDistanceField>(m, "SignedDistance")
      .def("__call__",
           [](const SignedDistanceField& f, double x, double y) {
             return f(Vec2(x, y));
           })
      .def("gradient", [](const SignedDistanceField& f, double x, double y) {
        Vec2 g = f.gradient(Vec2(x, y));
        return std::make_pair(g.x(), g.y());
      });

  m.def(
      "sdf_circle",
      [](double cx, double cy, double r) { return sdf_circle(Vec2(cx, cy), r); },
      py::arg("cx"), py::arg("cy"), py::arg("r"));
  m.def(
      "sdf_rectangle",
      [](double cx, double cy, double hx, double hy) {
        return sdf_rectangle(Vec2(cx, cy), Vec2(hx, hy));
      },
      py::arg("cx"), py::arg("cy"), py::arg("half_width"),
      py::arg("half_height"));
  m.def("sdf_union", &sdf_union);
  m.def("sdf_intersection", &sdf_intersection);
  m.def("sdf_difference", &sdf_difference);
  m.def("sdf_scale", &sdf_scale, py::arg("sdf"), py::arg("factor"));
  m.def("sdf_ipn80", []() { return sdf_ipn80(); });

  m.def("init_square_symmetric", &init_square_symmetric,
        py::arg("levels") = 0);
  m.def("init_rectangle", &init_rectangle, py::arg("width"), py::arg("height"),
        py::arg("nx"), py::arg("ny"));
  m.def("load_mesh", &load_mesh, py::arg("path"));
  m.def(
      "distmesh",
      [](const SignedDistanceField& sdf, double h0, double lx, double ly,
         double hx, double hy) {
        return distmesh_generate(sdf, h0, Vec2(lx, ly), Vec2(hx, hy));
      },
      py::arg("sdf"), py::arg("h0"), py::arg("xmin"), py::arg("ymin"),
      py::arg("xmax"), py::arg("ymax"));
  m.def(
      "refine",
      [](const TriMesh& mesh, const std::vector<int>& marked) {
        RefineResult r = rgb_refine(mesh, marked);
        return std::make_pair(std::move(r.mesh), std::move(r.parent));
      },
      py::arg("mesh"), py::arg("marked"));
  m.def("uniform_refine", &uniform_refine, py::arg("mesh"));
  m.def("laplacian_smooth", &laplacian_smooth, py::arg("mesh"),
        py::arg("sweeps") = 1);
  m.def("wrap_periodic", &wrap_periodic, py::arg("mesh"), py::arg("direction"),
        py::arg("period"));

  py::class_<ObstacleProblem>(m, "Problem")
      .def(py::init([](const TriMesh& mesh,
                       const std::function<double(double, double)>& diffusion,
                       const std::function<double(double, double)>& load,
                       const std::function<double(double, double)>& obstacle,
                       const std::function<double(double, double)>& boundary) {
             ObstacleProblem prob;
             prob.mesh = std::make_shared<const TriMesh>(mesh);
             prob.diffusion = as_field(diffusion);
             prob.load = as_field(load);
             prob.obstacle = as_field(obstacle);
             prob.boundary_value = as_field(boundary);
             return prob;
           }),
           py::arg("mesh"), py::arg("diffusion"), py::arg("load"),
           py::arg("obstacle"), py::arg("boundary"))
      .def_property_readonly(
          "mesh", [](const ObstacleProblem& p) { return *p.mesh; });

  m.def("membrane_problem",
        [](int initial_levels) {
          MembraneParams params;
          params.initial_levels = initial_levels;
          return build_membrane(params);
        },
        py::arg("initial_levels") = 3);
  m.def("torsion_problem",
        [](double twist_deg, double h0_mm) {
          TorsionParams params;
          params.twist_deg = twist_deg;
          params.h0_mm = h0_mm;
          return build_torsion(params).problem;
        },
        py::arg("twist_deg") = 8.0, py::arg("h0_mm") = 4.0);
  m.def("bearing_problem",
        [](double eccentricity) {
          BearingParams params;
          params.eccentricity = eccentricity;
          return build_bearing(params).problem;
        },
        py::arg("eccentricity") = 0.4);

  py::class_<PdasReport>(m, "SolveReport")
      .def_readonly("iterations", &PdasReport::iterations)
      .def_readonly("converged", &PdasReport::converged)
      .def_readonly("residuals", &PdasReport::residuals)
      .def_readonly("active_counts", &PdasReport::active_counts);

  py::class_<PySolveResult>(m, "SolveResult")
      .def_readonly("u", &PySolveResult::u)
      .def_readonly("lam", &PySolveResult::lam)
      .def_readonly("report", &PySolveResult::report);

  m.def("solve", &solve_problem, py::arg("problem"), py::arg("tol") = 1e-10,
        py::arg("max_iter") = 100);

  m.def(
      "indicators",
      [](const ObstacleProblem& prob, const Eigen::VectorXd& u,
         const Eigen::VectorXd& lam) {
        DofBasis V = make_basis(prob.mesh, ElementKind::P2Bubble);
        DofBasis Q = make_basis(prob.mesh, ElementKind::P0);
        MixedSolution sol{u, lam};
        return compute_indicators(prob, V, Q, sol).element();
      },
      py::arg("problem"), py::arg("u"), py::arg("lam"));
  m.def("mark_maximum", &mark_maximum, py::arg("eta"), py::arg("beta") = 0.5);

  py::class_<AdaptRecord>(m, "AdaptRecord")
      .def_readonly("level", &AdaptRecord::level)
      .def_readonly("num_dofs", &AdaptRecord::num_dofs)
      .def_readonly("num_elements", &AdaptRecord::num_elements)
      .def_readonly("eta_total", &AdaptRecord::eta_total)
      .def_readonly("eta_interior", &AdaptRecord::eta_interior)
      .def_readonly("eta_edge", &AdaptRecord::eta_edge)
      .def_readonly("eta_contact", &AdaptRecord::eta_contact)
      .def_readonly("pdas_iterations", &AdaptRecord::pdas_iterations)
      .def_readonly("active_elements", &AdaptRecord::active_elements)
      .def_readonly("seconds", &AdaptRecord::seconds);

  m.def(
      "adapt",
      [](const ObstacleProblem& prob, int levels, double beta, bool uniform) {
        AdaptOptions opt;
        opt.levels = levels;
        opt.beta = beta;
        opt.uniform = uniform;
        AdaptResult res = adapt_loop(prob, opt);
        return std::make_tuple(res.records, *res.problem.mesh, res.solution.u,
                               res.solution.lam);
      },
      py::arg("problem"), py::arg("levels") = 8, py::arg("beta") = 0.5,
      py::arg("uniform") = false);

  m.def(
      "export_vtk",
      [](const std::string& path, const TriMesh& mesh,
         const std::vector<std::pair<std::string, Eigen::VectorXd>>& point_data,
         const std::vector<std::pair<std::string, Eigen::VectorXd>>& cell_data) {
        VtkFields fields;
        fields.point_data = point_data;
        fields.cell_data = cell_data;
        export_vtk(path, mesh, fields);
      },
      py::arg("path"), py::arg("mesh"),
      py::arg("point_data") = std::vector<std::pair<std::string, Eigen::VectorXd>>{},
      py::arg("cell_data") = std::vector<std::pair<std::string, Eigen::VectorXd>>{});

  m.def("run_driver", [](const std::string& config_path,
                         const std::string& driver) {
    RunConfig cfg = load_config(config_path);
    cfg.driver = driver;
    return run_driver(cfg).records;
  });
}
