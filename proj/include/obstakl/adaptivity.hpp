#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "obstakl/fem.hpp"
#include "obstakl/problem.hpp"
#include "obstakl/solver.hpp"

namespace obstakl {

// Squared elementwise contributions of the residual error estimator.
struct Indicators {
  Eigen::VectorXd interior_sq;  // h_K^2 ||div(a grad u) + lam + f||^2
  Eigen::VectorXd edge_sq;      // h_K/2 ||[a grad u . n]||^2 on dK \ dOmega
  Eigen::VectorXd contact_sq;   // ||(g-u)+||_H1^2 + ((g-u)+, lam)

  Eigen::VectorXd element() const;  // sqrt of the row sums
  double total() const;
  double interior() const;
  double edge() const;
  double contact() const;
};

// Estimator of the Theorem-type residual bound.  The flux a grad u is
// recovered elementwise as a discontinuous cubic before taking its
// divergence, so the interior residual is meaningful for non-constant
// coefficients and curved elements.
Indicators compute_indicators(const ObstacleProblem& problem,
                              const DofBasis& V, const DofBasis& Q,
                              const MixedSolution& sol);

// Gap-weighted variant for thin-film problems: the interior term carries
// h_K^2 / d_K^3 and the edge term h_K / (2 d_K^3) with the flux d^3/mu
// grad u inside the jump, where d_K is the element mean of `gap`.  The
// contact term is unchanged.  Nonpositive d_K throws InvalidInputError.
Indicators compute_indicators_weighted(const ObstacleProblem& problem,
                                       const DofBasis& V, const DofBasis& Q,
                                       const MixedSolution& sol,
                                       const ScalarField& gap);

// Mesh-weighted surrogate for the H^-1 norm of an elementwise-constant
// functional: sqrt(sum_K h_K^2 ||v||_{0,K}^2).
double dual_norm_surrogate(const TriMesh& mesh,
                           const Eigen::VectorXd& element_values);

// Elements whose indicator is at least beta times the largest one.
std::vector<int> mark_maximum(const Eigen::VectorXd& eta, double beta = 0.5);

struct AdaptOptions {
  int levels = 8;
  double beta = 0.5;
  bool uniform = false;  // refine everything instead of marking
  PdasOptions pdas;
  bool warm = true;  // transfer solutions between levels
  // Optional per-level mesh conditioning.
  int smooth_sweeps = 0;
  const SignedDistanceField* boundary_sdf = nullptr;  // projection target
  bool lift = false;                                  // curved boundary
  // Weighted estimator (thin film); unweighted when absent.
  const ScalarField* gap = nullptr;
  // Validate conformity and area nesting after every refinement.
  bool check_refinement = false;
  // Called after each level is solved and estimated (before refinement),
  // e.g. to export per-level fields.
  std::function<void(int level, const ObstacleProblem&, const DofBasis& V,
                     const DofBasis& Q, const MixedSolution&,
                     const Indicators&)>
      observer;
};

struct AdaptRecord {
  int level = 0;
  int num_dofs = 0;
  int num_elements = 0;
  double eta_total = 0, eta_interior = 0, eta_edge = 0, eta_contact = 0;
  int pdas_iterations = 0;
  int active_elements = 0;
  double seconds = 0;
};

struct AdaptResult {
  std::vector<AdaptRecord> records;
  ObstacleProblem problem;  // rebased on the final mesh
  DofBasis V, Q;
  MixedSolution solution;
  Indicators indicators;
};

// Solve-estimate-mark-refine loop.  The problem's coefficient fields are
// reused across levels; the mesh is refined in place (with optional
// smoothing, boundary projection, and quadratic lifting applied after
// each refinement).
AdaptResult adapt_loop(const ObstacleProblem& problem,
                       const AdaptOptions& options = {});

}  // namespace obstakl
