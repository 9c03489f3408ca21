#include "obstakl/solver.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "obstakl/applications.hpp"
#include "obstakl/elements.hpp"
#include "obstakl/errors.hpp"

namespace obstakl {

MixedSolution pdas_solve(const ObstacleProblem& problem, const DofBasis& V,
                         const DofBasis& Q, const MixedSolution* initial,
                         const PdasOptions& options, PdasReport* report) {
  const MixedSystem sys = assemble_mixed(problem, V, Q);
  const Constraints bc = enforce_constraints(problem, V);
  const int nu = sys.n_u, nq = sys.n_q, n = nu + nq;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (initial) {
    if (initial->u.size() != nu || initial->lam.size() != nq)
      throw InvalidInputError("pdas_solve: initial guess has the wrong size");
    x.head(nu) = initial->u;
    x.tail(nq) = initial->lam;
  }

  PdasReport local;
  PdasReport& rep = report ? *report : local;
  rep = PdasReport{};

  // Guess for element K: active when lam exceeds the element mean of u-g.
  std::vector<char> active(nq);
  auto guess_active = [&](const Eigen::VectorXd& state) {
    int count = 0;
    for (int k = 0; k < nq; ++k) {
      double mean_u = 0.0;
      for (int i = 0; i < 7; ++i)
        mean_u += sys.shape_means[k][i] * state[V.element_dofs[k][i]];
      active[k] =
          state[nu + k] - (mean_u - sys.obstacle_mean[k]) > 0.0 ? 1 : 0;
      count += active[k];
    }
    return count;
  };

  std::map<std::vector<char>, int> history;
  std::vector<int> fixed;
  bool converged = false;

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const int n_active = guess_active(x);

    const auto [where, inserted] = history.emplace(active, iter);
    if (!inserted && where->second < iter - 1) {
      rep.iterations = iter - 1;
      throw NonConvergenceError(
          "active set solve: cycling detected (iteration " +
          std::to_string(iter) + " repeats iteration " +
          std::to_string(where->second) + ")");
    }
    where->second = iter;

    fixed.assign(bc.fixed_dofs.begin(), bc.fixed_dofs.end());
    Eigen::VectorXd values(n);
    int nfix = static_cast<int>(fixed.size());
    values.head(nfix) = bc.values;
    for (int k = 0; k < nq; ++k)
      if (!active[k]) {
        fixed.push_back(nu + k);
        values[nfix++] = 0.0;
      }
    values.conservativeResize(nfix);

    const CondensedSystem cond = condense(sys.matrix, sys.rhs, fixed, values);
    const Eigen::VectorXd xr = solve_linear(cond.matrix, cond.rhs);
    const Eigen::VectorXd x_new = expand(cond, xr, fixed, values, n);

    const double denom = x_new.norm();
    const double res =
        denom > 0.0 ? (x_new - x).norm() / denom : (x_new - x).norm();
    x = x_new;

    rep.iterations = iter;
    rep.residuals.push_back(res);
    rep.active_counts.push_back(n_active);

    if (res <= options.tol) {
      converged = true;
      break;
    }
  }

  rep.converged = converged;
  if (!converged)
    throw NonConvergenceError(
        "active set solve: no convergence in " +
        std::to_string(options.max_iter) + " iterations (last residual " +
        std::to_string(rep.residuals.empty() ? 0.0 : rep.residuals.back()) +
        ")");

  MixedSolution sol;
  sol.u = x.head(nu);
  sol.lam = x.tail(nq);
  return sol;
}

MixedSolution pgs_oracle(const ObstacleProblem& problem, const DofBasis& V,
                         const DofBasis& Q, double tol, long max_sweeps) {
  const MixedSystem sys = assemble_mixed(problem, V, Q);
  const Constraints bc = enforce_constraints(problem, V);
  const int nu = sys.n_u, nq = sys.n_q;

  // Condense the Dirichlet dofs out of the full saddle matrix, then read
  // off the blocks: free indices keep their order, displacements first.
  const CondensedSystem cond =
      condense(sys.matrix, sys.rhs, bc.fixed_dofs, bc.values);
  const int nfree = static_cast<int>(cond.free_to_full.size());
  const int nuf = nfree - nq;

  Eigen::SparseMatrix<double> A(nuf, nuf);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(nuf, nq);
  {
    std::vector<Eigen::Triplet<double>> trip;
    for (int col = 0; col < cond.matrix.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(cond.matrix, col);
           it; ++it) {
        const int r = static_cast<int>(it.row());
        if (r < nuf && col < nuf)
          trip.emplace_back(r, col, it.value());
        else if (r < nuf && col >= nuf)
          C(r, col - nuf) = -it.value();
      }
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
  }
  const Eigen::VectorXd f = cond.rhs.head(nuf);
  const Eigen::VectorXd g = -cond.rhs.tail(nq);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw NonConvergenceError("pgs oracle: displacement block is singular");

  // Dual complementarity system  w = S lam + q >= 0, lam >= 0, lam' w = 0.
  const Eigen::MatrixXd AinvC = lu.solve(C);
  const Eigen::MatrixXd S = C.transpose() * AinvC;
  const Eigen::VectorXd q = C.transpose() * lu.solve(f) - g;

  Eigen::VectorXd lam = Eigen::VectorXd::Zero(nq);
  bool done = false;
  for (long sweep = 0; sweep < max_sweeps && !done; ++sweep) {
    double delta = 0.0;
    for (int k = 0; k < nq; ++k) {
      const double w = q[k] + S.row(k).dot(lam);
      const double next = std::max(0.0, lam[k] - w / S(k, k));
      delta = std::max(delta, std::abs(next - lam[k]));
      lam[k] = next;
    }
    done = delta <= tol * (1.0 + lam.cwiseAbs().maxCoeff());
  }
  if (!done)
    throw NonConvergenceError("pgs oracle: sweep limit reached");

  const Eigen::VectorXd uf = lu.solve(f + C * lam);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(nu + nq);
  for (int i = 0; i < nuf; ++i) full[cond.free_to_full[i]] = uf[i];
  for (size_t k = 0; k < bc.fixed_dofs.size(); ++k)
    full[bc.fixed_dofs[k]] = bc.values[k];

  MixedSolution sol;
  sol.u = full.head(nu);
  sol.lam = lam;
  return sol;
}

MixedSolution warm_start(const MixedSolution& coarse, const DofBasis& coarseV,
                         const DofBasis& coarseQ, const DofBasis& fineV,
                         const DofBasis& fineQ, TransferReport* report) {
  if (coarseV.kind != ElementKind::P2Bubble ||
      fineV.kind != ElementKind::P2Bubble)
    throw InvalidInputError("warm_start expects P2-bubble displacement spaces");
  const TriMesh& fine_mesh = *fineV.mesh;
  PointLocator locate(*coarseV.mesh);
  TransferReport local;
  TransferReport& rep = report ? *report : local;
  rep = TransferReport{};

  auto eval_coarse = [&](const Vec2& p) {
    const auto hit = locate.locate(p);
    if (hit.fallback) ++rep.fallback_points;
    return eval_field(coarseV, coarse.u, hit.element, hit.ref);
  };

  MixedSolution fine;
  fine.u = Eigen::VectorXd::Zero(fineV.num_dofs);
  fine.lam = Eigen::VectorXd::Zero(fineQ.num_dofs);

  // Vertex and midside dofs are nodal: sample the coarse field.
  std::vector<char> done(fineV.num_dofs, 0);
  for (int t = 0; t < fine_mesh.num_triangles(); ++t)
    for (int i = 0; i < 6; ++i) {
      const int dof = fineV.element_dofs[t][i];
      if (done[dof]) continue;
      done[dof] = 1;
      fine.u[dof] = eval_coarse(fineV.dof_points[dof]);
    }

  // Bubble coefficients make the new field match at element centroids,
  // where the quadratic part contributes -1/9 per vertex and 4/9 per edge.
  const Vec2 ref_c(1.0 / 3.0, 1.0 / 3.0);
  const auto phi_c = P2Bubble::values(ref_c);
  for (int t = 0; t < fine_mesh.num_triangles(); ++t) {
    const Vec2 c = map_point(fine_mesh, t, ref_c).x;
    double p2_part = 0.0;
    for (int i = 0; i < 6; ++i)
      p2_part += fine.u[fineV.element_dofs[t][i]] * phi_c[i];
    fine.u[fineV.element_dofs[t][6]] = eval_coarse(c) - p2_part;
  }

  // Multipliers transfer by element value at the new centroid, kept
  // nonnegative.
  for (int t = 0; t < fine_mesh.num_triangles(); ++t) {
    const auto hit = locate.locate(map_point(fine_mesh, t, ref_c).x);
    if (hit.fallback) ++rep.fallback_points;
    fine.lam[t] = std::max(0.0, coarse.lam[hit.element]);
  }
  return fine;
}

}  // namespace obstakl
