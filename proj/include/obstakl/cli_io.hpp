#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "obstakl/adaptivity.hpp"
#include "obstakl/applications.hpp"
#include "obstakl/mesh.hpp"

namespace obstakl {

// Constant-coefficient problem on a mesh loaded from a file; the escape
// hatch for geometries not wired into a named driver.
struct GenericParams {
  std::string mesh_file;
  double diffusion = 1.0;
  double load = 0.0;
  double obstacle = 0.0;
  double boundary_value = 0.0;
};

// Everything a driver run needs, combining config-file keys with command
// line overrides.
struct RunConfig {
  std::string driver;  // membrane | torsion | bearing | generic
  int levels = -1;     // -1 = per-driver default
  double beta = 0.5;
  double tol = 1e-10;
  int max_iter = 100;
  bool uniform = false;
  bool warm = true;
  int smooth_sweeps = -1;  // -1 = per-driver default
  int quadratic = -1;      // -1 default, 0 affine, 1 lifted
  bool timings = false;    // emit measured seconds instead of zeros
  bool write_vtk = true;   // formats = vtk,csv
  bool write_csv = true;
  std::string out_dir;  // empty = out_<driver>

  MembraneParams membrane;
  TorsionParams torsion;
  BearingParams bearing;
  GenericParams generic;
};

// INI-style config: [run], [membrane], [torsion], [bearing], [generic]
// sections with key = value lines, '#' or ';' comments.  Unknown sections
// or keys and malformed values throw ConfigError naming the line number.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Legacy-format VTK with the mesh and scalar fields, 17 significant
// digits.  Non-finite field values throw InvalidInputError.
struct VtkFields {
  std::vector<std::pair<std::string, Eigen::VectorXd>> point_data;
  std::vector<std::pair<std::string, Eigen::VectorXd>> cell_data;
};
void export_vtk(const std::string& path, const TriMesh& mesh,
                const VtkFields& fields);

// Reads back files written by export_vtk (round-trip checks).
struct VtkContents {
  TriMesh mesh;
  VtkFields fields;
};
VtkContents read_vtk(const std::string& path);

// Per-level convergence table, header
// N,eta_total,eta_int,eta_edge,eta_contact,pdas_iters,seconds.
void export_convergence(const std::string& path,
                        const std::vector<AdaptRecord>& records);

// Pressure profile along the bearing midline y = L/2: `samples` points
// (x, p) with the environment shift added back.
std::vector<std::pair<double, double>> extract_midline(
    const BearingSetup& setup, const DofBasis& V, const Eigen::VectorXd& u,
    int samples);

// Runs one driver end to end, writing level VTK files and the
// convergence table into config.out_dir.  Returns the adaptive history.
AdaptResult run_driver(const RunConfig& config);

}  // namespace obstakl
