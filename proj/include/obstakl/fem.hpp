#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "obstakl/mesh.hpp"
#include "obstakl/problem.hpp"

namespace obstakl {

enum class ElementKind { P2Bubble, P0 };

// Global numbering for a finite element space.  For the bubble-enriched
// quadratic space the dofs are vertex values, facet (midside) values, and
// one bubble coefficient per triangle; periodic partner entities share a
// dof.  For the piecewise-constant space there is one dof per triangle.
struct DofBasis {
  std::shared_ptr<const TriMesh> mesh;
  ElementKind kind = ElementKind::P2Bubble;
  int num_dofs = 0;
  std::vector<std::array<int, 7>> element_dofs;  // first dofs_per_element() used
  std::vector<char> on_boundary;                 // per dof
  std::vector<Vec2> dof_points;                  // representative locations

  int dofs_per_element() const {
    return kind == ElementKind::P2Bubble ? 7 : 1;
  }
};

DofBasis make_basis(std::shared_ptr<const TriMesh> mesh, ElementKind kind);

// Geometry mapping data at one reference point of one element.
struct MappedPoint {
  Vec2 x;
  Eigen::Matrix2d jac;
  Eigen::Matrix2d jac_inv;
  double det = 0.0;
};
MappedPoint map_point(const TriMesh& mesh, int tri, const Vec2& ref);

// Inverse of the geometry map: reference coordinates of physical point p
// in element tri (Newton iteration on curved elements).
Vec2 inverse_map(const TriMesh& mesh, int tri, const Vec2& p);

// Element search by neighbour walking with a nearest-centroid fallback.
class PointLocator {
 public:
  explicit PointLocator(const TriMesh& mesh);

  struct Hit {
    int element = -1;
    Vec2 ref = Vec2::Zero();  // clamped into the reference triangle
    bool fallback = false;    // walk failed, nearest centroid used
  };
  Hit locate(const Vec2& p) const;

 private:
  const TriMesh* mesh_;
  mutable int hint_ = 0;
};

// Value of a P2-bubble field at a reference point of an element.
double eval_field(const DofBasis& basis, const Eigen::VectorXd& coeffs,
                  int tri, const Vec2& ref);
// Physical gradient of a P2-bubble field.
Vec2 eval_field_gradient(const DofBasis& basis, const Eigen::VectorXd& coeffs,
                         int tri, const Vec2& ref);

// Block system of the mixed formulation,
//   [ A  B ] [u  ]   [ f ]
//   [ B' 0 ] [lam] = [ -g ],
// where A is the weighted stiffness of the displacement space, B couples
// displacements to the elementwise-constant multiplier with a minus sign,
// f carries the load, and g the elementwise obstacle averages times area.
struct MixedSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  int n_u = 0;
  int n_q = 0;
  // Per-element data reused by the active-set loop: mean value of each
  // displacement shape function (integral / area), obstacle mean, area.
  std::vector<std::array<double, 7>> shape_means;
  std::vector<double> obstacle_mean;
  std::vector<double> area;
};

// Assembles with a degree-6 rule; throws InvalidInputError when the
// diffusion coefficient is not strictly positive at a quadrature point
// (the message names the element).
MixedSystem assemble_mixed(const ObstacleProblem& problem,
                           const DofBasis& displacement,
                           const DofBasis& multiplier);

// Elementwise L2 projection (mean value) of a scalar field.
Eigen::VectorXd project_p0(const TriMesh& mesh, const ScalarField& f);

// Reduced system after pinning fixed dofs to given values.
struct CondensedSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  std::vector<int> free_to_full;  // reduced index -> original index
};
// Duplicate indices in `fixed` throw InvalidInputError.
CondensedSystem condense(const Eigen::SparseMatrix<double>& matrix,
                         const Eigen::VectorXd& rhs,
                         const std::vector<int>& fixed,
                         const Eigen::VectorXd& fixed_values);
// Scatter a reduced solution back, filling fixed entries.
Eigen::VectorXd expand(const CondensedSystem& sys,
                       const Eigen::VectorXd& reduced,
                       const std::vector<int>& fixed,
                       const Eigen::VectorXd& fixed_values, int n_full);

// Sparse LU with one step of iterative refinement.  Throws
// NonConvergenceError unless ||Ax-b|| <= 1e-10 (||b|| + ||A|| ||x||).
Eigen::VectorXd solve_linear(const Eigen::SparseMatrix<double>& A,
                             const Eigen::VectorXd& b);

}  // namespace obstakl
