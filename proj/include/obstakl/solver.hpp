#pragma once

#include <Eigen/Dense>
#include <vector>

#include "obstakl/fem.hpp"
#include "obstakl/problem.hpp"

namespace obstakl {

struct MixedSolution {
  Eigen::VectorXd u;    // displacement coefficients
  Eigen::VectorXd lam;  // one multiplier per element
};

struct PdasOptions {
  double tol = 1e-10;
  int max_iter = 100;
};

struct PdasReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> residuals;   // per iteration
  std::vector<int> active_counts;  // per iteration
};

// Primal-dual active set iteration for the mixed obstacle problem.  Each
// pass fixes the multiplier to zero off the active set, pins boundary
// displacement dofs, solves the remaining saddle system, and re-guesses
// the active set A = {K : lam_K > mean_K(u - g)}.  Convergence is the
// relative l2 change of the stacked (u, lam) vector falling below tol.
// Throws NonConvergenceError on the iteration cap or on a cycling active
// set; `report` (optional) is filled either way.
MixedSolution pdas_solve(const ObstacleProblem& problem, const DofBasis& V,
                         const DofBasis& Q,
                         const MixedSolution* initial = nullptr,
                         const PdasOptions& options = {},
                         PdasReport* report = nullptr);

// Brute-force reference solver: eliminates the displacement block and
// runs projected Gauss-Seidel on the dense multiplier complementarity
// system.  Intended for small meshes in tests.
MixedSolution pgs_oracle(const ObstacleProblem& problem, const DofBasis& V,
                         const DofBasis& Q, double tol = 1e-12,
                         long max_sweeps = 1000000);

struct TransferReport {
  int fallback_points = 0;  // locator walks that fell back to a scan
};

// Transfer of a solution to a new pair of spaces by point evaluation:
// vertex and midside values are samples of the old displacement field,
// bubble coefficients match the old field at centroids, and multipliers
// are old element values at new centroids clamped to be nonnegative.
MixedSolution warm_start(const MixedSolution& coarse, const DofBasis& coarseV,
                         const DofBasis& coarseQ, const DofBasis& fineV,
                         const DofBasis& fineQ,
                         TransferReport* report = nullptr);

}  // namespace obstakl
