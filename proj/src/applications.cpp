#include "obstakl/applications.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <utility>

#include "obstakl/errors.hpp"
#include "obstakl/mesh.hpp"

namespace obstakl {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) {
    std::ostringstream os;
    os << name << " must be positive, got " << v;
    throw InvalidInputError(os.str());
  }
}

}  // namespace

ObstacleProblem build_membrane(const MembraneParams& params) {
  if (params.initial_levels < 0)
    throw InvalidInputError("membrane initial_levels must be >= 0");
  require_positive(params.tension, "membrane tension");

  ObstacleProblem prob;
  prob.mesh = std::make_shared<const TriMesh>(
      init_square_symmetric(params.initial_levels));
  const double tension = params.tension;
  const double load = params.load;
  prob.diffusion = [tension](const Vec2&) { return tension; };
  prob.load = [load](const Vec2&) { return load; };
  prob.obstacle = [](const Vec2& p) {
    return std::sin(kPi * p.x()) * std::sin(kPi * p.y()) - 0.5;
  };
  prob.boundary_value = [](const Vec2&) { return 0.0; };
  return prob;
}

TorsionSetup build_torsion(const TorsionParams& params) {
  require_positive(params.shear_modulus_gpa, "torsion shear_modulus_gpa");
  require_positive(params.yield_stress_gpa, "torsion yield_stress_gpa");
  require_positive(params.length_mm, "torsion length_mm");
  require_positive(params.h0_mm, "torsion h0_mm");
  if (params.twist_deg < 0.0)
    throw InvalidInputError("torsion twist_deg must be >= 0");

  TorsionSetup setup;
  // Cross-section in meters; the catalogue profile is in millimeters.
  setup.sdf = sdf_scale(sdf_ipn80(), 1e-3);
  const ProfileIPN80 profile;
  const double half_w = 0.5e-3 * profile.width;
  const double half_h = 0.5e-3 * profile.height;
  const double h0 = 1e-3 * params.h0_mm;

  TriMesh mesh = distmesh_generate(setup.sdf, h0, Vec2(-half_w, -half_h),
                                   Vec2(half_w, half_h));
  mesh = project_boundary_nodes(mesh, setup.sdf);
  mesh = lift_quadratic(mesh, &setup.sdf);

  const double G = 1e9 * params.shear_modulus_gpa;
  const double tau = 1e9 * params.yield_stress_gpa;
  setup.twist_rate = 2.0 * kPi * params.twist_deg / (180.0 * 1e-3 * params.length_mm);
  const double f = -2.0 * G * setup.twist_rate;
  const double slope = tau / std::sqrt(3.0);
  const SignedDistanceField sdf = setup.sdf;

  setup.problem.mesh = std::make_shared<const TriMesh>(std::move(mesh));
  setup.problem.diffusion = [](const Vec2&) { return 1.0; };
  setup.problem.load = [f](const Vec2&) { return f; };
  // Stress function bounded below by -tau/sqrt(3) times the distance to
  // the section boundary (zero on the boundary itself).
  setup.problem.obstacle = [sdf, slope](const Vec2& p) {
    return -slope * distance_to_boundary(sdf, p);
  };
  setup.problem.boundary_value = [](const Vec2&) { return 0.0; };
  return setup;
}

BearingSetup build_bearing(const BearingParams& params) {
  require_positive(params.radius_mm, "bearing radius_mm");
  require_positive(params.length_mm, "bearing length_mm");
  require_positive(params.clearance_um, "bearing clearance_um");
  require_positive(params.viscosity_pas, "bearing viscosity_pas");
  if (!(params.eccentricity >= 0.0 && params.eccentricity < 1.0))
    throw InvalidInputError("bearing eccentricity must lie in [0, 1)");
  if (params.nx < 2 || params.ny < 1)
    throw InvalidInputError("bearing grid must be at least 2 x 1 cells");
  if (!(params.p_cav_kpa < params.p_env_kpa))
    throw InvalidInputError(
        "bearing cavitation pressure must be below ambient pressure");

  BearingSetup setup;
  setup.radius = 1e-3 * params.radius_mm;
  setup.length = 1e-3 * params.length_mm;
  setup.p_env = 1e3 * params.p_env_kpa;
  setup.p_cav = 1e3 * params.p_cav_kpa;
  const double R = setup.radius;
  const double c = 1e-6 * params.clearance_um;
  const double mu = params.viscosity_pas;
  const double e = params.eccentricity;
  const double V = params.surface_speed_ms;

  // Unrolled circumference [-pi R, pi R] x [0, L], periodic in x.  The
  // maximum-gap line x = 0 sits in the cell interior pattern the same way
  // on both seam halves.
  const double period = 2.0 * kPi * R;
  TriMesh mesh = init_rectangle(period, setup.length, params.nx, params.ny);
  for (Vec2& v : mesh.vertices) v.x() -= kPi * R;
  mesh.build_topology();
  mesh = wrap_periodic(mesh, 0, period);

  setup.gap = [c, e, R](const Vec2& p) {
    return c * (1.0 + e * std::cos(p.x() / R));
  };
  const ScalarField gap = setup.gap;

  setup.problem.mesh = std::make_shared<const TriMesh>(std::move(mesh));
  setup.problem.diffusion = [gap, mu](const Vec2& p) {
    const double d = gap(p);
    return d * d * d / mu;
  };
  setup.problem.load = [V, c, e, R](const Vec2& p) {
    return 6.0 * V * c * e * std::sin(p.x() / R) / R;
  };
  const double q_cav = setup.p_cav - setup.p_env;
  setup.problem.obstacle = [q_cav](const Vec2&) { return q_cav; };
  setup.problem.boundary_value = [](const Vec2&) { return 0.0; };
  return setup;
}

Constraints enforce_constraints(const ObstacleProblem& problem,
                                const DofBasis& V) {
  if (V.mesh.get() != problem.mesh.get())
    throw InvalidInputError("constraints: basis mesh differs from problem mesh");
  if (V.kind != ElementKind::P2Bubble)
    throw InvalidInputError("constraints: displacement basis required");

  Constraints out;
  std::vector<double> vals;
  for (int dof = 0; dof < V.num_dofs; ++dof) {
    if (!V.on_boundary[dof]) continue;
    const Vec2& p = V.dof_points[dof];
    const double value = problem.boundary_value ? problem.boundary_value(p) : 0.0;
    const double g = problem.obstacle(p);
    const double tol =
        1e-12 * std::max({1.0, std::abs(value), std::abs(g)});
    if (g > value + tol) {
      std::ostringstream os;
      os << "obstacle exceeds the boundary value at dof " << dof << " ("
         << p.x() << ", " << p.y() << "): g = " << g << " > " << value;
      throw InvalidInputError(os.str());
    }
    out.fixed_dofs.push_back(dof);
    vals.push_back(value);
  }
  out.values = Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                                 static_cast<long>(vals.size()));
  return out;
}

}  // namespace obstakl
