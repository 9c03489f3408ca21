#pragma once

#include <Eigen/Dense>
#include <vector>

#include "obstakl/fem.hpp"
#include "obstakl/geometry.hpp"
#include "obstakl/problem.hpp"

namespace obstakl {

// Unit-square membrane pressed against the obstacle
// g = sin(pi x) sin(pi y) - 1/2 with unit tension, zero load, and zero
// boundary values.
struct MembraneParams {
  int initial_levels = 3;  // uniform refinements of the 4-triangle square
  double tension = 1.0;    // membrane tension G
  double load = 0.0;       // transverse load f
};
ObstacleProblem build_membrane(const MembraneParams& params = {});

// Elastoplastic torsion of an IPN 80 bar as an obstacle problem for the
// stress function: a = 1, f = -2 G theta with the twist rate
// theta = 2 pi gamma / (180 L), and obstacle -tau/sqrt(3) times the
// distance to the boundary.  Internally in SI units (meters, pascals).
struct TorsionParams {
  double shear_modulus_gpa = 79.3;
  double yield_stress_gpa = 0.240;
  double twist_deg = 8.0;    // gamma, total twist of the bar
  double length_mm = 400.0;  // bar length
  double h0_mm = 4.0;        // initial mesh spacing
};
struct TorsionSetup {
  ObstacleProblem problem;
  SignedDistanceField sdf;  // cross-section in meters
  double twist_rate = 0;    // theta, rad/m
};
TorsionSetup build_torsion(const TorsionParams& params = {});

// Journal bearing lubrication with cavitation.  Reynolds equation for the
// shifted pressure q = p - p_env on the periodic strip
// [-pi R, pi R] x [0, L] (meters): a = d^3/mu with film thickness
// d = c (1 + e cos(x/R)), load f = 6 V c e sin(x/R) / R, obstacle
// q >= p_cav - p_env, q = 0 at y = 0 and y = L.
struct BearingParams {
  double radius_mm = 25.4;
  double length_mm = 38.1;
  double clearance_um = 114.0;
  double viscosity_pas = 0.0307;
  double eccentricity = 0.4;
  double p_env_kpa = 172.0;
  double p_cav_kpa = 100.0;
  double surface_speed_ms = 5.320;
  int nx = 32;  // initial grid around the circumference
  int ny = 8;   // initial grid across the width
};
struct BearingSetup {
  ObstacleProblem problem;
  ScalarField gap;  // film thickness d(x), for the weighted estimator
  double p_env = 0;
  double p_cav = 0;
  double radius = 0;  // meters
  double length = 0;
};
BearingSetup build_bearing(const BearingParams& params = {});

// Boundary conditions as fixed displacement dofs.  Checks that the
// obstacle does not exceed the boundary value at boundary dof points;
// violations throw InvalidInputError naming the first offending dof.
struct Constraints {
  std::vector<int> fixed_dofs;
  Eigen::VectorXd values;
};
Constraints enforce_constraints(const ObstacleProblem& problem,
                                const DofBasis& V);

}  // namespace obstakl
