#include "obstakl/cli_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <unordered_set>

#include "obstakl/errors.hpp"

namespace obstakl {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail_line(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& v, int line) {
  size_t pos = 0;
  double d = 0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty())
    fail_line(line, "expected a number, got '" + v + "'");
  return d;
}

int to_int(const std::string& v, int line) {
  size_t pos = 0;
  long n = 0;
  try {
    n = std::stol(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty())
    fail_line(line, "expected an integer, got '" + v + "'");
  return static_cast<int>(n);
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  fail_line(line, "expected true/false, got '" + v + "'");
}

// Plain decimal text for a double: 17 significant digits, no exponent,
// trailing zeros stripped.  Round-trips exactly.
std::string decimal_string(double v) {
  if (!std::isfinite(v))
    throw InvalidInputError("refusing to write a non-finite value");
  if (v == 0.0) return "0";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  std::string s(buf);
  size_t i = 0;
  bool neg = false;
  if (s[0] == '-') {
    neg = true;
    i = 1;
  }
  size_t epos = s.find('e');
  std::string digits;
  digits += s[i];
  digits += s.substr(i + 2, epos - (i + 2));
  int exp = std::stoi(s.substr(epos + 1));
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();

  std::string out;
  const int nd = static_cast<int>(digits.size());
  if (exp >= nd - 1) {
    out = digits + std::string(exp - nd + 1, '0');
  } else if (exp >= 0) {
    out = digits.substr(0, exp + 1) + "." + digits.substr(exp + 1);
  } else {
    out = "0." + std::string(-exp - 1, '0') + digits;
  }
  return neg ? "-" + out : out;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw InvalidInputError("write to '" + path + "' failed");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section = "run";
  int line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line = line.substr(0, cut);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail_line(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "run" && section != "membrane" && section != "torsion" &&
          section != "bearing" && section != "generic")
        fail_line(line_no, "unknown section [" + section + "]");
      continue;
    }

    size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail_line(line_no, "expected key = value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail_line(line_no, "empty key");
    if (value.empty()) fail_line(line_no, "empty value for '" + key + "'");

    if (section == "run") {
      if (key == "driver") {
        if (value != "membrane" && value != "torsion" && value != "bearing" &&
            value != "generic")
          fail_line(line_no, "unknown driver '" + value + "'");
        cfg.driver = value;
      } else if (key == "levels") {
        cfg.levels = to_int(value, line_no);
      } else if (key == "beta") {
        cfg.beta = to_double(value, line_no);
      } else if (key == "tol") {
        cfg.tol = to_double(value, line_no);
      } else if (key == "max_iter") {
        cfg.max_iter = to_int(value, line_no);
      } else if (key == "uniform") {
        cfg.uniform = to_bool(value, line_no);
      } else if (key == "warm_start") {
        cfg.warm = to_bool(value, line_no);
      } else if (key == "smooth_sweeps") {
        cfg.smooth_sweeps = to_int(value, line_no);
        if (cfg.smooth_sweeps < 0)
          fail_line(line_no, "smooth_sweeps must be >= 0");
      } else if (key == "quadratic") {
        cfg.quadratic = to_bool(value, line_no) ? 1 : 0;
      } else if (key == "timings") {
        cfg.timings = to_bool(value, line_no);
      } else if (key == "out") {
        cfg.out_dir = value;
      } else if (key == "formats") {
        cfg.write_vtk = false;
        cfg.write_csv = false;
        std::istringstream fs(value);
        std::string tok;
        while (std::getline(fs, tok, ',')) {
          tok = trim(tok);
          if (tok == "vtk")
            cfg.write_vtk = true;
          else if (tok == "csv")
            cfg.write_csv = true;
          else if (!tok.empty())
            fail_line(line_no, "unknown output format '" + tok + "'");
        }
      } else {
        fail_line(line_no, "unknown key '" + key + "' in [run]");
      }
    } else if (section == "membrane") {
      if (key == "initial_levels")
        cfg.membrane.initial_levels = to_int(value, line_no);
      else if (key == "tension")
        cfg.membrane.tension = to_double(value, line_no);
      else if (key == "load")
        cfg.membrane.load = to_double(value, line_no);
      else
        fail_line(line_no, "unknown key '" + key + "' in [membrane]");
    } else if (section == "torsion") {
      if (key == "shear_modulus_gpa")
        cfg.torsion.shear_modulus_gpa = to_double(value, line_no);
      else if (key == "yield_stress_gpa")
        cfg.torsion.yield_stress_gpa = to_double(value, line_no);
      else if (key == "twist_deg")
        cfg.torsion.twist_deg = to_double(value, line_no);
      else if (key == "length_mm")
        cfg.torsion.length_mm = to_double(value, line_no);
      else if (key == "h0_mm")
        cfg.torsion.h0_mm = to_double(value, line_no);
      else
        fail_line(line_no, "unknown key '" + key + "' in [torsion]");
    } else if (section == "bearing") {
      if (key == "radius_mm")
        cfg.bearing.radius_mm = to_double(value, line_no);
      else if (key == "length_mm")
        cfg.bearing.length_mm = to_double(value, line_no);
      else if (key == "clearance_um")
        cfg.bearing.clearance_um = to_double(value, line_no);
      else if (key == "viscosity_pas")
        cfg.bearing.viscosity_pas = to_double(value, line_no);
      else if (key == "eccentricity")
        cfg.bearing.eccentricity = to_double(value, line_no);
      else if (key == "p_env_kpa")
        cfg.bearing.p_env_kpa = to_double(value, line_no);
      else if (key == "p_cav_kpa")
        cfg.bearing.p_cav_kpa = to_double(value, line_no);
      else if (key == "surface_speed_ms")
        cfg.bearing.surface_speed_ms = to_double(value, line_no);
      else if (key == "nx")
        cfg.bearing.nx = to_int(value, line_no);
      else if (key == "ny")
        cfg.bearing.ny = to_int(value, line_no);
      else
        fail_line(line_no, "unknown key '" + key + "' in [bearing]");
    } else {  // generic
      if (key == "mesh")
        cfg.generic.mesh_file = value;
      else if (key == "diffusion")
        cfg.generic.diffusion = to_double(value, line_no);
      else if (key == "load")
        cfg.generic.load = to_double(value, line_no);
      else if (key == "obstacle")
        cfg.generic.obstacle = to_double(value, line_no);
      else if (key == "boundary_value")
        cfg.generic.boundary_value = to_double(value, line_no);
      else
        fail_line(line_no, "unknown key '" + key + "' in [generic]");
    }
  }

  if (!(cfg.beta > 0.0 && cfg.beta < 1.0))
    throw ConfigError("beta must lie strictly between 0 and 1, got " +
                      std::to_string(cfg.beta));
  if (cfg.levels != -1 && cfg.levels < 1)
    throw ConfigError("levels must be >= 1, got " + std::to_string(cfg.levels));
  if (!(cfg.tol > 0.0)) throw ConfigError("tol must be positive");
  if (cfg.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void export_vtk(const std::string& path, const TriMesh& mesh,
                const VtkFields& fields) {
  const int nv = mesh.num_vertices();
  const int nt = mesh.num_triangles();
  for (const auto& [name, values] : fields.point_data) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
      throw InvalidInputError("bad VTK field name '" + name + "'");
    if (values.size() != nv)
      throw InvalidInputError("point field '" + name + "' has " +
                              std::to_string(values.size()) + " values for " +
                              std::to_string(nv) + " points");
    if (!values.allFinite())
      throw InvalidInputError("point field '" + name +
                              "' contains NaN or Inf");
  }
  for (const auto& [name, values] : fields.cell_data) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
      throw InvalidInputError("bad VTK field name '" + name + "'");
    if (values.size() != nt)
      throw InvalidInputError("cell field '" + name + "' has " +
                              std::to_string(values.size()) + " values for " +
                              std::to_string(nt) + " cells");
    if (!values.allFinite())
      throw InvalidInputError("cell field '" + name + "' contains NaN or Inf");
  }

  std::string out;
  out.reserve(static_cast<size_t>(nv) * 48 + static_cast<size_t>(nt) * 24);
  out += "# vtk DataFile Version 3.0\n";
  out += "obstakl fields\n";
  out += "ASCII\n";
  out += "DATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(nv) + " double\n";
  for (const Vec2& p : mesh.vertices)
    out += g17(p.x()) + " " + g17(p.y()) + " 0\n";
  out += "CELLS " + std::to_string(nt) + " " + std::to_string(4 * nt) + "\n";
  for (const auto& t : mesh.triangles)
    out += "3 " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " +
           std::to_string(t[2]) + "\n";
  out += "CELL_TYPES " + std::to_string(nt) + "\n";
  for (int t = 0; t < nt; ++t) out += "5\n";
  if (!fields.point_data.empty()) {
    out += "POINT_DATA " + std::to_string(nv) + "\n";
    for (const auto& [name, values] : fields.point_data) {
      out += "SCALARS " + name + " double 1\n";
      out += "LOOKUP_TABLE default\n";
      for (long i = 0; i < values.size(); ++i) out += g17(values[i]) + "\n";
    }
  }
  if (!fields.cell_data.empty()) {
    out += "CELL_DATA " + std::to_string(nt) + "\n";
    for (const auto& [name, values] : fields.cell_data) {
      out += "SCALARS " + name + " double 1\n";
      out += "LOOKUP_TABLE default\n";
      for (long i = 0; i < values.size(); ++i) out += g17(values[i]) + "\n";
    }
  }
  write_file(path, out);
}

namespace {

class TokenReader {
 public:
  explicit TokenReader(std::string text) : in_(std::move(text)) {}

  std::string next() {
    std::string tok;
    if (!(in_ >> tok))
      throw InvalidInputError("VTK parse: unexpected end of file");
    return tok;
  }
  bool peek(std::string* tok) {
    std::streampos pos = in_.tellg();
    if (!(in_ >> *tok)) return false;
    in_.seekg(pos);
    return true;
  }
  void expect(const std::string& want) {
    std::string tok = next();
    if (tok != want)
      throw InvalidInputError("VTK parse: expected '" + want + "', got '" +
                              tok + "'");
  }
  long integer() {
    std::string tok = next();
    try {
      size_t pos;
      long v = std::stol(tok, &pos);
      if (pos == tok.size()) return v;
    } catch (const std::exception&) {
    }
    throw InvalidInputError("VTK parse: expected an integer, got '" + tok +
                            "'");
  }
  double real() {
    std::string tok = next();
    try {
      size_t pos;
      double v = std::stod(tok, &pos);
      if (pos == tok.size()) return v;
    } catch (const std::exception&) {
    }
    throw InvalidInputError("VTK parse: expected a number, got '" + tok + "'");
  }

 private:
  std::istringstream in_;
};

}  // namespace

VtkContents read_vtk(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();

  // Skip the two header lines (version comment and title).
  size_t p = text.find('\n');
  if (p != std::string::npos) p = text.find('\n', p + 1);
  if (p == std::string::npos)
    throw InvalidInputError("VTK parse: truncated header");
  TokenReader tok(text.substr(p + 1));

  tok.expect("ASCII");
  tok.expect("DATASET");
  tok.expect("UNSTRUCTURED_GRID");
  tok.expect("POINTS");
  const long nv = tok.integer();
  tok.expect("double");

  VtkContents out;
  out.mesh.vertices.resize(nv);
  for (long i = 0; i < nv; ++i) {
    double x = tok.real(), y = tok.real(), z = tok.real();
    if (z != 0.0) throw InvalidInputError("VTK parse: nonzero z coordinate");
    out.mesh.vertices[i] = Vec2(x, y);
  }

  tok.expect("CELLS");
  const long nt = tok.integer();
  tok.integer();  // total index count
  out.mesh.triangles.resize(nt);
  for (long t = 0; t < nt; ++t) {
    if (tok.integer() != 3)
      throw InvalidInputError("VTK parse: only triangles are supported");
    for (int k = 0; k < 3; ++k) {
      long idx = tok.integer();
      if (idx < 0 || idx >= nv)
        throw InvalidInputError("VTK parse: vertex index out of range");
      out.mesh.triangles[t][k] = static_cast<int>(idx);
    }
  }
  tok.expect("CELL_TYPES");
  if (tok.integer() != nt)
    throw InvalidInputError("VTK parse: CELL_TYPES count mismatch");
  for (long t = 0; t < nt; ++t)
    if (tok.integer() != 5)
      throw InvalidInputError("VTK parse: cell type is not a triangle");

  std::string section;
  while (tok.peek(&section)) {
    long expected = 0;
    std::vector<std::pair<std::string, Eigen::VectorXd>>* dst = nullptr;
    if (section == "POINT_DATA") {
      dst = &out.fields.point_data;
      expected = nv;
    } else if (section == "CELL_DATA") {
      dst = &out.fields.cell_data;
      expected = nt;
    } else {
      throw InvalidInputError("VTK parse: unexpected token '" + section + "'");
    }
    tok.next();
    if (tok.integer() != expected)
      throw InvalidInputError("VTK parse: data count mismatch in " + section);
    std::string ahead;
    while (tok.peek(&ahead) && ahead == "SCALARS") {
      tok.next();
      std::string name = tok.next();
      tok.expect("double");
      tok.expect("1");
      tok.expect("LOOKUP_TABLE");
      tok.expect("default");
      Eigen::VectorXd values(expected);
      for (long i = 0; i < expected; ++i) values[i] = tok.real();
      dst->emplace_back(std::move(name), std::move(values));
    }
  }

  out.mesh.build_topology();
  return out;
}

void export_convergence(const std::string& path,
                        const std::vector<AdaptRecord>& records) {
  if (records.empty())
    throw InvalidInputError("convergence table needs at least one record");
  std::string out = "N,eta_total,eta_int,eta_edge,eta_contact,pdas_iters,seconds\n";
  for (const AdaptRecord& r : records) {
    out += std::to_string(r.num_dofs) + "," + decimal_string(r.eta_total) +
           "," + decimal_string(r.eta_interior) + "," +
           decimal_string(r.eta_edge) + "," + decimal_string(r.eta_contact) +
           "," + std::to_string(r.pdas_iterations) + "," +
           decimal_string(r.seconds) + "\n";
  }
  write_file(path, out);
}

std::vector<std::pair<double, double>> extract_midline(
    const BearingSetup& setup, const DofBasis& V, const Eigen::VectorXd& u,
    int samples) {
  if (samples < 2)
    throw InvalidInputError("midline extraction needs at least 2 samples");
  if (V.mesh.get() != setup.problem.mesh.get())
    throw InvalidInputError("midline: basis mesh differs from setup mesh");
  if (u.size() != V.num_dofs)
    throw InvalidInputError("midline: coefficient vector length mismatch");

  const TriMesh& mesh = *V.mesh;
  const double R = setup.radius;
  const double L = setup.length;
  double diam = 0;
  {
    Vec2 lo = mesh.vertices[0], hi = mesh.vertices[0];
    for (const Vec2& v : mesh.vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    diam = (hi - lo).norm();
  }

  PointLocator locator(mesh);
  std::vector<std::pair<double, double>> out;
  out.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const double x =
        -kPi * R + 2.0 * kPi * R * static_cast<double>(i) / (samples - 1);
    const Vec2 p(x, 0.5 * L);
    PointLocator::Hit hit = locator.locate(p);
    const Vec2 mapped = map_point(mesh, hit.element, hit.ref).x;
    if ((mapped - p).norm() > 1e-8 * diam) {
      std::ostringstream os;
      os << "midline point (" << p.x() << ", " << p.y()
         << ") not found in the mesh";
      throw InvalidInputError(os.str());
    }
    out.emplace_back(x, eval_field(V, u, hit.element, hit.ref) + setup.p_env);
  }
  return out;
}

namespace {

// Corner-sampled view of the displacement field for visualization; edge
// and bubble contributions are dropped.  Periodic slave vertices repeat
// their master's value.
Eigen::VectorXd vertex_samples(const DofBasis& V, const Eigen::VectorXd& u) {
  const TriMesh& mesh = *V.mesh;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int k = 0; k < 3; ++k)
      out[mesh.triangles[t][k]] = u[V.element_dofs[t][k]];
  return out;
}

std::string level_path(const std::string& dir, int level) {
  return dir + "/level_" + std::to_string(level) + ".vtk";
}

}  // namespace

AdaptResult run_driver(const RunConfig& config) {
  RunConfig cfg = config;
  if (cfg.driver != "membrane" && cfg.driver != "torsion" &&
      cfg.driver != "bearing" && cfg.driver != "generic")
    throw ConfigError("unknown driver '" + cfg.driver + "'");

  if (cfg.levels == -1) cfg.levels = cfg.driver == "torsion" ? 6 : 8;
  if (cfg.smooth_sweeps == -1) cfg.smooth_sweeps = cfg.driver == "torsion" ? 1 : 0;
  if (cfg.quadratic == -1) cfg.quadratic = cfg.driver == "torsion" ? 1 : 0;
  if (cfg.out_dir.empty()) cfg.out_dir = "out_" + cfg.driver;
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + cfg.out_dir +
                      "': " + ec.message());

  AdaptOptions opt;
  opt.levels = cfg.levels;
  opt.beta = cfg.beta;
  opt.uniform = cfg.uniform;
  opt.warm = cfg.warm;
  opt.smooth_sweeps = cfg.smooth_sweeps;
  opt.pdas.tol = cfg.tol;
  opt.pdas.max_iter = cfg.max_iter;

  if (cfg.write_vtk) {
    const std::string dir = cfg.out_dir;
    opt.observer = [dir](int level, const ObstacleProblem& prob,
                         const DofBasis& V, const DofBasis&,
                         const MixedSolution& sol, const Indicators& ind) {
      VtkFields fields;
      fields.point_data.emplace_back("u", vertex_samples(V, sol.u));
      fields.cell_data.emplace_back("lambda", sol.lam);
      fields.cell_data.emplace_back("eta", ind.element());
      export_vtk(level_path(dir, level), *prob.mesh, fields);
    };
  }

  ObstacleProblem problem;
  TorsionSetup torsion;
  BearingSetup bearing;
  if (cfg.driver == "membrane") {
    problem = build_membrane(cfg.membrane);
  } else if (cfg.driver == "torsion") {
    torsion = build_torsion(cfg.torsion);
    problem = torsion.problem;
    opt.boundary_sdf = &torsion.sdf;
    opt.lift = cfg.quadratic == 1;
    if (!opt.lift) {
      // The built mesh is lifted; flatten it for an affine run.
      TriMesh flat = *problem.mesh;
      flat.edge_nodes.clear();
      flat.quadratic = false;
      problem.mesh = std::make_shared<const TriMesh>(std::move(flat));
    }
  } else if (cfg.driver == "bearing") {
    bearing = build_bearing(cfg.bearing);
    problem = bearing.problem;
    opt.gap = &bearing.gap;
  } else {
    if (cfg.generic.mesh_file.empty())
      throw ConfigError("the generic driver requires a mesh file");
    TriMesh mesh = load_mesh(cfg.generic.mesh_file);
    problem.mesh = std::make_shared<const TriMesh>(std::move(mesh));
    const GenericParams gp = cfg.generic;
    problem.diffusion = [gp](const Vec2&) { return gp.diffusion; };
    problem.load = [gp](const Vec2&) { return gp.load; };
    problem.obstacle = [gp](const Vec2&) { return gp.obstacle; };
    problem.boundary_value = [gp](const Vec2&) { return gp.boundary_value; };
  }

  AdaptResult result = adapt_loop(problem, opt);

  if (cfg.write_csv) {
    std::vector<AdaptRecord> records = result.records;
    if (!cfg.timings)
      for (AdaptRecord& r : records) r.seconds = 0.0;
    export_convergence(cfg.out_dir + "/convergence.csv", records);

    if (cfg.driver == "bearing") {
      BearingSetup final_setup = bearing;
      final_setup.problem = result.problem;
      const auto profile = extract_midline(final_setup, result.V,
                                           result.solution.u, 257);
      std::string out = "x,p\n";
      for (const auto& [x, p] : profile)
        out += decimal_string(x) + "," + decimal_string(p) + "\n";
      write_file(cfg.out_dir + "/midline.csv", out);
    }
  }
  return result;
}

}  // namespace obstakl
