#include "obstakl/fem.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "obstakl/elements.hpp"
#include "obstakl/errors.hpp"
#include "obstakl/quadrature.hpp"

namespace obstakl {

DofBasis make_basis(std::shared_ptr<const TriMesh> mesh, ElementKind kind) {
  if (!mesh) throw InvalidInputError("make_basis: null mesh");
  const TriMesh& m = *mesh;
  DofBasis b;
  b.mesh = std::move(mesh);
  b.kind = kind;

  const int nt = m.num_triangles();
  if (kind == ElementKind::P0) {
    b.num_dofs = nt;
    b.element_dofs.resize(nt);
    b.on_boundary.assign(nt, 0);
    b.dof_points.resize(nt);
    for (int t = 0; t < nt; ++t) {
      b.element_dofs[t] = {t, 0, 0, 0, 0, 0, 0};
      b.dof_points[t] = m.centroid(t);
    }
    return b;
  }

  const int nv = m.num_vertices(), nf = m.num_facets();
  auto vrep = [&](int v) {
    return m.periodic ? m.periodic->vertex_master[v] : v;
  };
  auto frep = [&](int f) {
    return m.periodic ? m.periodic->facet_master[f] : f;
  };

  // Dofs are numbered vertex classes, then facet classes, then bubbles.
  std::vector<int> vdof(nv, -1), fdof(nf, -1);
  int count = 0;
  for (int v = 0; v < nv; ++v)
    if (vrep(v) == v) vdof[v] = count++;
  for (int v = 0; v < nv; ++v)
    if (vdof[v] == -1) vdof[v] = vdof[vrep(v)];
  const int n_vertex = count;
  count = 0;
  for (int f = 0; f < nf; ++f)
    if (frep(f) == f) fdof[f] = n_vertex + count++;
  for (int f = 0; f < nf; ++f)
    if (fdof[f] == -1) fdof[f] = fdof[frep(f)];
  const int n_facet = count;

  b.num_dofs = n_vertex + n_facet + nt;
  b.element_dofs.resize(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& tr = m.triangles[t];
    const auto& tf = m.tri_facets[t];
    b.element_dofs[t] = {vdof[tr[0]],      vdof[tr[1]],      vdof[tr[2]],
                         fdof[tf[0]],      fdof[tf[1]],      fdof[tf[2]],
                         n_vertex + n_facet + t};
  }

  b.on_boundary.assign(b.num_dofs, 0);
  const auto vb = m.boundary_vertices();
  for (int v = 0; v < nv; ++v)
    if (vb[v]) b.on_boundary[vdof[v]] = 1;
  for (int f = 0; f < nf; ++f)
    if (m.facet_boundary[f]) b.on_boundary[fdof[f]] = 1;

  b.dof_points.assign(b.num_dofs, Vec2::Zero());
  for (int v = 0; v < nv; ++v) b.dof_points[vdof[v]] = m.vertices[vrep(v)];
  for (int f = 0; f < nf; ++f) {
    const int r = frep(f);
    b.dof_points[fdof[f]] =
        m.quadratic ? m.edge_nodes[r]
                    : Vec2(0.5 * (m.vertices[m.facets[r][0]] +
                                  m.vertices[m.facets[r][1]]));
  }
  for (int t = 0; t < nt; ++t)
    b.dof_points[n_vertex + n_facet + t] = m.centroid(t);
  return b;
}

MappedPoint map_point(const TriMesh& mesh, int tri, const Vec2& ref) {
  MappedPoint mp;
  const auto& t = mesh.triangles[tri];
  if (!mesh.quadratic) {
    const Vec2 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]],
               &c = mesh.vertices[t[2]];
    mp.jac.col(0) = b - a;
    mp.jac.col(1) = c - a;
    mp.x = a + mp.jac * ref;
  } else {
    const auto& tf = mesh.tri_facets[tri];
    const Vec2 nodes[6] = {mesh.vertices[t[0]],   mesh.vertices[t[1]],
                           mesh.vertices[t[2]],   mesh.edge_nodes[tf[0]],
                           mesh.edge_nodes[tf[1]], mesh.edge_nodes[tf[2]]};
    const auto vals = P2Geometry::values(ref);
    const auto grads = P2Geometry::gradients(ref);
    mp.x = Vec2::Zero();
    mp.jac = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 6; ++i) {
      mp.x += vals[i] * nodes[i];
      mp.jac += nodes[i] * grads[i].transpose();
    }
  }
  mp.det = mp.jac.determinant();
  mp.jac_inv = mp.jac.inverse();
  return mp;
}

Vec2 inverse_map(const TriMesh& mesh, int tri, const Vec2& p) {
  const auto& t = mesh.triangles[tri];
  const Vec2 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]],
             &c = mesh.vertices[t[2]];
  Eigen::Matrix2d J;
  J.col(0) = b - a;
  J.col(1) = c - a;
  Vec2 ref = J.inverse() * (p - a);
  if (!mesh.quadratic) return ref;

  const double scale = std::max(J.norm(), 1e-30);
  for (int it = 0; it < 12; ++it) {
    const MappedPoint mp = map_point(mesh, tri, ref);
    const Vec2 gap = mp.x - p;
    if (gap.norm() <= 1e-14 * scale) break;
    ref -= mp.jac_inv * gap;
  }
  return ref;
}

PointLocator::PointLocator(const TriMesh& mesh) : mesh_(&mesh) {}

PointLocator::Hit PointLocator::locate(const Vec2& p) const {
  const TriMesh& m = *mesh_;
  const int nt = m.num_triangles();
  Hit hit;

  int t = hint_ < nt ? hint_ : 0;
  for (int step = 0; step < 2 * nt + 4; ++step) {
    const auto& tr = m.triangles[t];
    const Vec2 &a = m.vertices[tr[0]], &b = m.vertices[tr[1]],
               &c = m.vertices[tr[2]];
    Eigen::Matrix2d J;
    J.col(0) = b - a;
    J.col(1) = c - a;
    const Vec2 r = J.inverse() * (p - a);
    const double bar[3] = {1.0 - r.x() - r.y(), r.x(), r.y()};
    int worst = 0;
    for (int i = 1; i < 3; ++i)
      if (bar[i] < bar[worst]) worst = i;
    if (bar[worst] >= -1e-12) {
      hit.element = t;
      break;
    }
    // Cross the edge opposite the most negative coordinate: local facets
    // (0,1),(1,2),(2,0) are opposite vertices 2,0,1.
    const int f = m.tri_facets[t][(worst + 1) % 3];
    const int n0 = m.facet_tris[f][0], n1 = m.facet_tris[f][1];
    const int next = (n0 == t) ? n1 : n0;
    if (next < 0) break;
    t = next;
  }

  if (hit.element < 0) {
    hit.fallback = true;
    double best = std::numeric_limits<double>::max();
    for (int i = 0; i < nt; ++i) {
      const double d = (m.centroid(i) - p).squaredNorm();
      if (d < best) {
        best = d;
        hit.element = i;
      }
    }
  }

  Vec2 ref = inverse_map(m, hit.element, p);
  ref = ref.cwiseMax(0.0);
  if (ref.sum() > 1.0) ref /= ref.sum();
  hit.ref = ref;
  hint_ = hit.element;
  return hit;
}

double eval_field(const DofBasis& basis, const Eigen::VectorXd& coeffs,
                  int tri, const Vec2& ref) {
  if (basis.kind == ElementKind::P0) return coeffs[basis.element_dofs[tri][0]];
  const auto vals = P2Bubble::values(ref);
  double s = 0.0;
  for (int i = 0; i < 7; ++i) s += coeffs[basis.element_dofs[tri][i]] * vals[i];
  return s;
}

Vec2 eval_field_gradient(const DofBasis& basis, const Eigen::VectorXd& coeffs,
                         int tri, const Vec2& ref) {
  if (basis.kind == ElementKind::P0) return Vec2::Zero();
  const auto grads = P2Bubble::gradients(ref);
  const MappedPoint mp = map_point(*basis.mesh, tri, ref);
  Vec2 g = Vec2::Zero();
  for (int i = 0; i < 7; ++i)
    g += coeffs[basis.element_dofs[tri][i]] * grads[i];
  return mp.jac_inv.transpose() * g;
}

MixedSystem assemble_mixed(const ObstacleProblem& problem,
                           const DofBasis& displacement,
                           const DofBasis& multiplier) {
  if (displacement.kind != ElementKind::P2Bubble ||
      multiplier.kind != ElementKind::P0)
    throw InvalidInputError("assemble_mixed expects a P2-bubble / P0 pair");
  const TriMesh& m = *problem.mesh;
  if (displacement.mesh.get() != problem.mesh.get() ||
      multiplier.mesh.get() != problem.mesh.get())
    throw InvalidInputError("assemble_mixed: bases built on a different mesh");

  const int nt = m.num_triangles();
  const int nu = displacement.num_dofs, nq = multiplier.num_dofs;
  const QuadratureRule& rule = triangle_rule(6);
  const int nqp = static_cast<int>(rule.points.size());

  // Reference basis tables.
  std::vector<std::array<double, 7>> vals(nqp);
  std::vector<std::array<Vec2, 7>> grads(nqp);
  for (int q = 0; q < nqp; ++q) {
    vals[q] = P2Bubble::values(rule.points[q]);
    grads[q] = P2Bubble::gradients(rule.points[q]);
  }

  MixedSystem sys;
  sys.n_u = nu;
  sys.n_q = nq;
  sys.rhs = Eigen::VectorXd::Zero(nu + nq);
  sys.shape_means.resize(nt);
  sys.obstacle_mean.resize(nt);
  sys.area.resize(nt);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(nt) * 63);

  for (int t = 0; t < nt; ++t) {
    Eigen::Matrix<double, 7, 7> K = Eigen::Matrix<double, 7, 7>::Zero();
    Eigen::Matrix<double, 7, 1> c = Eigen::Matrix<double, 7, 1>::Zero();
    Eigen::Matrix<double, 7, 1> fv = Eigen::Matrix<double, 7, 1>::Zero();
    double g_int = 0.0, area = 0.0;

    for (int q = 0; q < nqp; ++q) {
      const MappedPoint mp = map_point(m, t, rule.points[q]);
      if (!(mp.det > 0.0))
        throw InvalidInputError("assemble_mixed: element " + std::to_string(t) +
                                " has a non-positive Jacobian");
      const double w = rule.weights[q] * mp.det;
      const double a = problem.diffusion(mp.x);
      if (!(a > 0.0))
        throw InvalidInputError(
            "assemble_mixed: diffusion coefficient is not positive on element " +
            std::to_string(t));
      const double f = problem.load(mp.x);
      const double g = problem.obstacle(mp.x);

      Vec2 gp[7];
      for (int i = 0; i < 7; ++i)
        gp[i] = mp.jac_inv.transpose() * grads[q][i];
      for (int i = 0; i < 7; ++i) {
        for (int j = 0; j <= i; ++j) K(i, j) += w * a * gp[i].dot(gp[j]);
        c(i) += w * vals[q][i];
        fv(i) += w * f * vals[q][i];
      }
      g_int += w * g;
      area += w;
    }
    for (int i = 0; i < 7; ++i)
      for (int j = i + 1; j < 7; ++j) K(i, j) = K(j, i);

    const auto& dofs = displacement.element_dofs[t];
    const int ldof = nu + multiplier.element_dofs[t][0];
    for (int i = 0; i < 7; ++i) {
      for (int j = 0; j < 7; ++j)
        trip.emplace_back(dofs[i], dofs[j], K(i, j));
      trip.emplace_back(dofs[i], ldof, -c(i));
      trip.emplace_back(ldof, dofs[i], -c(i));
      sys.rhs[dofs[i]] += fv(i);
    }
    sys.rhs[ldof] -= g_int;

    for (int i = 0; i < 7; ++i) sys.shape_means[t][i] = c(i) / area;
    sys.obstacle_mean[t] = g_int / area;
    sys.area[t] = area;
  }

  sys.matrix.resize(nu + nq, nu + nq);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  sys.matrix.makeCompressed();
  return sys;
}

Eigen::VectorXd project_p0(const TriMesh& mesh, const ScalarField& f) {
  const QuadratureRule& rule = triangle_rule(6);
  Eigen::VectorXd out(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    double num = 0.0, den = 0.0;
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const MappedPoint mp = map_point(mesh, t, rule.points[q]);
      const double w = rule.weights[q] * mp.det;
      num += w * f(mp.x);
      den += w;
    }
    out[t] = num / den;
  }
  return out;
}

CondensedSystem condense(const Eigen::SparseMatrix<double>& matrix,
                         const Eigen::VectorXd& rhs,
                         const std::vector<int>& fixed,
                         const Eigen::VectorXd& fixed_values) {
  const int n = static_cast<int>(matrix.rows());
  if (static_cast<int>(fixed.size()) != fixed_values.size())
    throw InvalidInputError("condense: fixed indices and values differ in size");

  std::vector<char> is_fixed(n, 0);
  std::vector<double> value(n, 0.0);
  for (size_t k = 0; k < fixed.size(); ++k) {
    const int i = fixed[k];
    if (i < 0 || i >= n)
      throw InvalidInputError("condense: fixed dof " + std::to_string(i) +
                              " out of range");
    if (is_fixed[i])
      throw InvalidInputError("condense: dof " + std::to_string(i) +
                              " fixed twice");
    is_fixed[i] = 1;
    value[i] = fixed_values[k];
  }

  CondensedSystem out;
  std::vector<int> full_to_free(n, -1);
  for (int i = 0; i < n; ++i)
    if (!is_fixed[i]) {
      full_to_free[i] = static_cast<int>(out.free_to_full.size());
      out.free_to_full.push_back(i);
    }
  const int nfree = static_cast<int>(out.free_to_full.size());

  out.rhs.resize(nfree);
  for (int i = 0; i < nfree; ++i) out.rhs[i] = rhs[out.free_to_full[i]];

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(matrix.nonZeros());
  for (int col = 0; col < matrix.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, col); it; ++it) {
      const int r = static_cast<int>(it.row()), c = col;
      if (is_fixed[r]) continue;
      if (is_fixed[c])
        out.rhs[full_to_free[r]] -= it.value() * value[c];
      else
        trip.emplace_back(full_to_free[r], full_to_free[c], it.value());
    }
  out.matrix.resize(nfree, nfree);
  out.matrix.setFromTriplets(trip.begin(), trip.end());
  out.matrix.makeCompressed();
  return out;
}

Eigen::VectorXd expand(const CondensedSystem& sys,
                       const Eigen::VectorXd& reduced,
                       const std::vector<int>& fixed,
                       const Eigen::VectorXd& fixed_values, int n_full) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n_full);
  for (size_t i = 0; i < sys.free_to_full.size(); ++i)
    full[sys.free_to_full[i]] = reduced[i];
  for (size_t k = 0; k < fixed.size(); ++k) full[fixed[k]] = fixed_values[k];
  return full;
}

Eigen::VectorXd solve_linear(const Eigen::SparseMatrix<double>& A,
                             const Eigen::VectorXd& b) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success)
    throw NonConvergenceError("linear solve: factorization failed (" +
                              lu.lastErrorMessage() + ")");

  Eigen::VectorXd x = lu.solve(b);
  x += lu.solve(b - A * x);  // one refinement pass

  // Row-sum norm of A for the backward-error bound.
  Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(A.rows());
  for (int col = 0; col < A.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it)
      rowsum[it.row()] += std::abs(it.value());
  const double norm_a = rowsum.maxCoeff();
  const double bound =
      1e-10 * (b.norm() + norm_a * x.cwiseAbs().maxCoeff());
  const double res = (A * x - b).norm();
  if (!(res <= bound) || !x.allFinite())
    throw NonConvergenceError(
        "linear solve: residual " + std::to_string(res) +
        " exceeds the backward-error bound " + std::to_string(bound));
  return x;
}

}  // namespace obstakl
