#include <doctest.h>

#include <cmath>
#include <memory>

#include "obstakl/applications.hpp"
#include "obstakl/errors.hpp"
#include "obstakl/fem.hpp"
#include "obstakl/mesh.hpp"
#include "obstakl/problem.hpp"
#include "obstakl/solver.hpp"
#include "oracles.hpp"

using namespace obstakl;

namespace {

std::shared_ptr<const TriMesh> shared(TriMesh m) {
  return std::make_shared<const TriMesh>(std::move(m));
}

struct Spaces {
  DofBasis V, Q;
};

Spaces spaces_of(const ObstacleProblem& prob) {
  return {make_basis(prob.mesh, ElementKind::P2Bubble),
          make_basis(prob.mesh, ElementKind::P0)};
}

// Elementwise mean of u - g for the complementarity checks.
Eigen::VectorXd gap_means(const ObstacleProblem& prob, const DofBasis& V,
                          const DofBasis& Q, const MixedSolution& sol) {
  MixedSystem sys = assemble_mixed(prob, V, Q);
  Eigen::VectorXd gap(sys.n_q);
  for (int k = 0; k < sys.n_q; ++k) {
    double mean_u = 0.0;
    for (int j = 0; j < 7; ++j)
      mean_u += sys.shape_means[k][j] * sol.u[V.element_dofs[k][j]];
    gap[k] = mean_u - sys.obstacle_mean[k];
  }
  return gap;
}

ObstacleProblem membrane_level(int levels) {
  MembraneParams mp;
  mp.initial_levels = levels;
  return build_membrane(mp);
}

}  // namespace

TEST_CASE("a far-away obstacle never activates") {
  auto mesh = shared(init_square_symmetric(2));
  ObstacleProblem prob;
  prob.mesh = mesh;
  prob.diffusion = [](const Vec2&) { return 1.0; };
  prob.load = [](const Vec2&) { return -1.0; };  // pushes the membrane down
  prob.obstacle = [](const Vec2&) { return -10.0; };
  auto [V, Q] = spaces_of(prob);

  PdasReport rep;
  MixedSolution sol = pdas_solve(prob, V, Q, nullptr, {}, &rep);
  CHECK(rep.converged);
  CHECK(sol.lam.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(!rep.active_counts.empty());
  CHECK(rep.active_counts.back() == 0);
  // Two passes at most: one solve with the empty guess, one to confirm.
  CHECK(rep.iterations <= 2);

  // With no contact the displacement solves the plain Poisson problem.
  MixedSolution again = pdas_solve(prob, V, Q);
  CHECK((again.u - sol.u).norm() == 0.0);
}

TEST_CASE("single-element stationarity conditions") {
  // One triangle, everything pinned: only the bubble and the multiplier
  // remain, and the solve reduces to a 2x2 hand computation.
  TriMesh one;
  one.vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  one.triangles = {{0, 1, 2}};
  one.build_topology();
  auto mesh = shared(std::move(one));
  ObstacleProblem prob;
  prob.mesh = mesh;
  prob.diffusion = [](const Vec2&) { return 1.0; };
  prob.load = [](const Vec2&) { return 4.0; };
  prob.obstacle = [](const Vec2&) { return -0.01; };
  auto [V, Q] = spaces_of(prob);
  MixedSystem sys = assemble_mixed(prob, V, Q);

  MixedSolution sol = pdas_solve(prob, V, Q);
  // All non-bubble dofs sit on the boundary of the single triangle.
  for (int i = 0; i < sys.n_u; ++i) {
    bool is_bubble = (i == V.element_dofs[0][6]);
    if (!is_bubble) CHECK(sol.u[i] == 0.0);
  }

  // Stationarity of the free rows: A_bb u_b - C_b lam = f_b.
  const int b = V.element_dofs[0][6];
  const double abb = sys.matrix.coeff(b, b);
  const double cb = sys.shape_means[0][6] * sys.area[0];  // integral of bubble
  double fb = sys.rhs[b];
  CHECK(abb * sol.u[b] - cb * sol.lam[0] ==
        doctest::Approx(fb).epsilon(1e-12));

  // Here the load presses downward nowhere (f > 0 lifts), so no contact.
  CHECK(sol.lam[0] == 0.0);
  CHECK(sol.u[b] == doctest::Approx(fb / abb).epsilon(1e-12));

  // Flip the load so the bubble would dive below the obstacle: the
  // constraint activates and the element mean pins to the obstacle mean.
  prob.load = [](const Vec2&) { return -4.0; };
  MixedSystem sys2 = assemble_mixed(prob, V, Q);
  MixedSolution pressed = pdas_solve(prob, V, Q);
  CHECK(pressed.lam[0] > 0.0);
  const double mean_u = sys2.shape_means[0][6] * pressed.u[b];
  CHECK(mean_u == doctest::Approx(-0.01).epsilon(1e-10));
  // Stationarity again, now with the multiplier engaged.
  CHECK(sys2.matrix.coeff(b, b) * pressed.u[b] - cb * pressed.lam[0] ==
        doctest::Approx(sys2.rhs[b]).epsilon(1e-12));
  // Closed form: the bubble stiffness on this triangle is 8.1, its
  // integral 0.225, and the load row -0.9, so u_b = -1/45 pins the mean
  // to -0.01 and lam = (8.1 u_b + 0.9) / -0.225 = 3.2.
  CHECK(abb == doctest::Approx(8.1).epsilon(1e-13));
  CHECK(pressed.u[b] == doctest::Approx(-1.0 / 45).epsilon(1e-10));
  CHECK(pressed.lam[0] == doctest::Approx(3.2).epsilon(1e-10));
}

TEST_CASE("membrane contact: convergence, invariants, complementarity") {
  ObstacleProblem prob = membrane_level(3);
  auto [V, Q] = spaces_of(prob);
  PdasReport rep;
  MixedSolution sol = pdas_solve(prob, V, Q, nullptr, {}, &rep);

  REQUIRE(rep.converged);
  CHECK(rep.residuals.back() < 1e-10);
  CHECK(rep.active_counts.back() > 0);  // the sine hump does touch

  const double lam_scale = std::max(1.0, sol.lam.cwiseAbs().maxCoeff());
  Eigen::VectorXd gap = gap_means(prob, V, Q, sol);
  const double gap_scale = std::max(1.0, gap.cwiseAbs().maxCoeff());

  for (int k = 0; k < sol.lam.size(); ++k) {
    // Sign condition.
    CHECK(sol.lam[k] >= -1e-9 * lam_scale);
    // Feasibility of the element means.
    CHECK(gap[k] >= -1e-8 * gap_scale);
    // Complementarity: one factor vanishes.
    CHECK(std::min(sol.lam[k] / lam_scale, std::abs(gap[k]) / gap_scale) <=
          1e-8);
    // Fixed-point form of the active-set rule at the solution.
    CHECK(std::abs(sol.lam[k] - std::max(0.0, sol.lam[k] - gap[k])) <=
          1e-8 * lam_scale);
  }
}

TEST_CASE("active-set solver matches projected Gauss-Seidel") {
  ObstacleProblem prob = membrane_level(2);
  auto [V, Q] = spaces_of(prob);
  MixedSolution fast = pdas_solve(prob, V, Q);
  MixedSolution slow = pgs_oracle(prob, V, Q);
  const double uscale = std::max(1.0, fast.u.cwiseAbs().maxCoeff());
  const double lscale = std::max(1.0, fast.lam.cwiseAbs().maxCoeff());
  CHECK((fast.u - slow.u).cwiseAbs().maxCoeff() <= 1e-7 * uscale);
  CHECK((fast.lam - slow.lam).cwiseAbs().maxCoeff() <= 1e-7 * lscale);
}

TEST_CASE("reference solver agrees with the plain solve when inactive") {
  auto mesh = shared(init_square_symmetric(2));
  ObstacleProblem prob;
  prob.mesh = mesh;
  prob.diffusion = [](const Vec2&) { return 2.0; };
  prob.load = [](const Vec2&) { return 1.0; };
  prob.obstacle = [](const Vec2&) { return -100.0; };
  auto [V, Q] = spaces_of(prob);
  MixedSolution ref = pgs_oracle(prob, V, Q);
  MixedSolution sol = pdas_solve(prob, V, Q);
  CHECK(ref.lam.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((ref.u - sol.u).cwiseAbs().maxCoeff() <=
        1e-9 * std::max(1.0, sol.u.cwiseAbs().maxCoeff()));
}

TEST_CASE("identical runs produce identical iteration histories") {
  ObstacleProblem prob = membrane_level(3);
  auto [V, Q] = spaces_of(prob);
  PdasReport r1, r2;
  MixedSolution s1 = pdas_solve(prob, V, Q, nullptr, {}, &r1);
  MixedSolution s2 = pdas_solve(prob, V, Q, nullptr, {}, &r2);
  CHECK(r1.iterations == r2.iterations);
  REQUIRE(r1.residuals.size() == r2.residuals.size());
  for (size_t i = 0; i < r1.residuals.size(); ++i)
    CHECK(r1.residuals[i] == r2.residuals[i]);  // bit identical
  CHECK(r1.active_counts == r2.active_counts);
  CHECK((s1.u - s2.u).norm() == 0.0);
  CHECK((s1.lam - s2.lam).norm() == 0.0);
}

TEST_CASE("iteration cap raises with the report filled") {
  ObstacleProblem prob = membrane_level(2);
  auto [V, Q] = spaces_of(prob);
  PdasOptions opts;
  opts.max_iter = 1;  // cannot settle the active set in one pass
  PdasReport rep;
  CHECK_THROWS_AS(pdas_solve(prob, V, Q, nullptr, opts, &rep),
                  NonConvergenceError);
  CHECK(rep.iterations == 1);
  CHECK(!rep.converged);
  CHECK(rep.residuals.size() == 1);
}

TEST_CASE("warm start: same spaces reproduce vertex and midside samples") {
  ObstacleProblem prob = membrane_level(2);
  auto [V, Q] = spaces_of(prob);
  MixedSolution sol = pdas_solve(prob, V, Q);
  TransferReport tr;
  MixedSolution moved = warm_start(sol, V, Q, V, Q, &tr);
  // Point samples of the same field at the same nodes: exact for the
  // P2 part; bubbles reproduce the centroid values.
  CHECK((moved.u - sol.u).cwiseAbs().maxCoeff() <= 1e-11);
  CHECK((moved.lam - sol.lam).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("warm start transfers exactly onto a nested refinement") {
  ObstacleProblem coarse = membrane_level(2);
  auto [cV, cQ] = spaces_of(coarse);
  MixedSolution csol = pdas_solve(coarse, cV, cQ);

  auto fine_mesh = shared(uniform_refine(*coarse.mesh));
  DofBasis fV = make_basis(fine_mesh, ElementKind::P2Bubble);
  DofBasis fQ = make_basis(fine_mesh, ElementKind::P0);
  TransferReport tr;
  MixedSolution warm = warm_start(csol, cV, cQ, fV, fQ, &tr);
  REQUIRE(warm.u.size() == fV.num_dofs);
  REQUIRE(warm.lam.size() == fQ.num_dofs);

  // Every new vertex/midside dof samples the coarse field exactly.
  PointLocator loc(*coarse.mesh);
  for (int i = 0; i < fV.num_dofs; ++i) {
    bool is_bubble = false;
    for (const auto& ed : fV.element_dofs)
      if (ed[6] == i) is_bubble = true;
    if (is_bubble) continue;
    const auto hit = loc.locate(fV.dof_points[i]);
    const double expect = eval_field(cV, csol.u, hit.element, hit.ref);
    CHECK(warm.u[i] == doctest::Approx(expect).epsilon(1e-11));
  }

  // Multipliers stay nonnegative under transfer.
  CHECK(warm.lam.minCoeff() >= 0.0);

  // Warm-started iteration reaches the same fixed point as cold.
  ObstacleProblem fine = coarse;
  fine.mesh = fine_mesh;
  PdasReport rw, rc;
  MixedSolution hot = pdas_solve(fine, fV, fQ, &warm, {}, &rw);
  MixedSolution cold = pdas_solve(fine, fV, fQ, nullptr, {}, &rc);
  const double us = std::max(1.0, cold.u.cwiseAbs().maxCoeff());
  CHECK((hot.u - cold.u).cwiseAbs().maxCoeff() <= 1e-8 * us);
  CHECK(rw.converged);
  CHECK(rc.converged);
}
