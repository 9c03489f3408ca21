#include "obstakl/adaptivity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "obstakl/elements.hpp"
#include "obstakl/errors.hpp"
#include "obstakl/quadrature.hpp"

namespace obstakl {

Eigen::VectorXd Indicators::element() const {
  return (interior_sq + edge_sq + contact_sq).cwiseSqrt();
}
double Indicators::total() const {
  return std::sqrt(interior_sq.sum() + edge_sq.sum() + contact_sq.sum());
}
double Indicators::interior() const { return std::sqrt(interior_sq.sum()); }
double Indicators::edge() const { return std::sqrt(edge_sq.sum()); }
double Indicators::contact() const { return std::sqrt(contact_sq.sum()); }

namespace {

// 1D quadratic curve through the facet's two endpoints and midside node.
struct EdgeCurve {
  Vec2 a, mid, b;
  Vec2 at(double t) const {
    return (1 - t) * (1 - 2 * t) * a + 4 * t * (1 - t) * mid +
           t * (2 * t - 1) * b;
  }
  Vec2 tangent(double t) const {
    return (4 * t - 3) * a + (4 - 8 * t) * mid + (4 * t - 1) * b;
  }
};

EdgeCurve facet_curve(const TriMesh& m, int f) {
  const Vec2 a = m.vertices[m.facets[f][0]], b = m.vertices[m.facets[f][1]];
  const Vec2 mid = m.quadratic ? m.edge_nodes[f] : Vec2(0.5 * (a + b));
  return {a, mid, b};
}

// Reference coordinates of the point at edge parameter t (measured from
// global endpoint `from`) on the given local edge of a triangle.
Vec2 edge_ref_point(const TriMesh& m, int tri, int local_edge, int from,
                    double t) {
  static const Vec2 corner[3] = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  const double s = (m.triangles[tri][local_edge] == from) ? t : 1.0 - t;
  return corner[local_edge] +
         s * (corner[(local_edge + 1) % 3] - corner[local_edge]);
}

int local_edge_of(const TriMesh& m, int tri, int facet) {
  for (int e = 0; e < 3; ++e)
    if (m.tri_facets[tri][e] == facet) return e;
  throw InvalidInputError("facet not incident to triangle");
}

struct EdgeSide {
  int tri;
  int local_edge;
  int from;     // global vertex where the shared parameter starts
  Vec2 offset;  // added to curve points to get this side's coordinates
};

// Core of the estimator; inv_d3 (optional, per element) carries the
// thin-film weight 1/d_K^3 and switches the edge jump to the full flux.
Indicators estimate(const ObstacleProblem& problem, const DofBasis& V,
                    const DofBasis& Q, const MixedSolution& sol,
                    const Eigen::VectorXd* inv_d3) {
  const TriMesh& m = *problem.mesh;
  const int nt = m.num_triangles();
  if (sol.u.size() != V.num_dofs || sol.lam.size() != Q.num_dofs)
    throw InvalidInputError("indicator evaluation: solution size mismatch");

  Indicators ind;
  ind.interior_sq = Eigen::VectorXd::Zero(nt);
  ind.edge_sq = Eigen::VectorXd::Zero(nt);
  ind.contact_sq = Eigen::VectorXd::Zero(nt);

  const QuadratureRule& rule = triangle_rule(6);
  const int nqp = static_cast<int>(rule.points.size());
  std::vector<std::array<double, 10>> mono(nqp);
  std::vector<std::array<Vec2, 10>> mono_grad(nqp);
  std::vector<std::array<Vec2, 7>> shape_grad(nqp);
  std::vector<std::array<double, 7>> shape_val(nqp);
  for (int q = 0; q < nqp; ++q) {
    mono[q] = CubicMonomials::values(rule.points[q]);
    mono_grad[q] = CubicMonomials::gradients(rule.points[q]);
    shape_grad[q] = P2Bubble::gradients(rule.points[q]);
    shape_val[q] = P2Bubble::values(rule.points[q]);
  }

  std::vector<double> h(nt);
  for (int t = 0; t < nt; ++t) h[t] = m.longest_edge(t);

  // Interior residual with an elementwise cubic recovery of the flux
  // a grad u, so the divergence survives the second derivative.
  for (int t = 0; t < nt; ++t) {
    Eigen::Matrix<double, 10, 10> M;
    Eigen::Matrix<double, 10, 2> rhs;
    M.setZero();
    rhs.setZero();

    struct QpData {
      double w;
      Vec2 x;
      Eigen::Matrix2d jac_inv;
    };
    std::array<QpData, 16> qp;

    for (int q = 0; q < nqp; ++q) {
      const MappedPoint mp = map_point(m, t, rule.points[q]);
      const double w = rule.weights[q] * mp.det;
      qp[q] = {w, mp.x, mp.jac_inv};

      Vec2 du = Vec2::Zero();
      for (int i = 0; i < 7; ++i)
        du += sol.u[V.element_dofs[t][i]] * shape_grad[q][i];
      const Vec2 flux = problem.diffusion(mp.x) * (mp.jac_inv.transpose() * du);

      for (int i = 0; i < 10; ++i) {
        for (int j = 0; j <= i; ++j) M(i, j) += w * mono[q][i] * mono[q][j];
        rhs.row(i) += w * mono[q][i] * flux.transpose();
      }
    }
    for (int i = 0; i < 10; ++i)
      for (int j = i + 1; j < 10; ++j) M(i, j) = M(j, i);
    const Eigen::Matrix<double, 10, 2> coef = M.ldlt().solve(rhs);

    double acc = 0.0;
    for (int q = 0; q < nqp; ++q) {
      double div = 0.0;
      for (int i = 0; i < 10; ++i) {
        const Vec2 g = qp[q].jac_inv.transpose() * mono_grad[q][i];
        div += coef(i, 0) * g.x() + coef(i, 1) * g.y();
      }
      const double r = div + sol.lam[t] + problem.load(qp[q].x);
      acc += qp[q].w * r * r;
    }
    const double weight = inv_d3 ? (*inv_d3)[t] : 1.0;
    ind.interior_sq[t] = h[t] * h[t] * weight * acc;
  }

  // Jump terms on interior facets, including wrapped periodic pairs.
  std::vector<int> slave_of(m.num_facets(), -1);
  if (m.periodic)
    for (int f = 0; f < m.num_facets(); ++f)
      if (m.periodic->facet_master[f] != f)
        slave_of[m.periodic->facet_master[f]] = f;

  const EdgeRule& erule = edge_rule();
  for (int f = 0; f < m.num_facets(); ++f) {
    if (m.facet_boundary[f]) continue;
    if (m.periodic && m.periodic->facet_master[f] != f) continue;  // slave

    EdgeSide s1{m.facet_tris[f][0], 0, m.facets[f][0], Vec2::Zero()};
    s1.local_edge = local_edge_of(m, s1.tri, f);
    EdgeSide s2;
    if (m.facet_tris[f][1] != -1) {
      s2 = {m.facet_tris[f][1], 0, m.facets[f][0], Vec2::Zero()};
      s2.local_edge = local_edge_of(m, s2.tri, f);
    } else {
      const int fs = slave_of[f];
      if (fs < 0) continue;  // isolated facet (defensive)
      s2.tri = m.facet_tris[fs][0];
      s2.local_edge = local_edge_of(m, s2.tri, fs);
      // Slave endpoint whose master is the parameter origin.
      const auto& vm = m.periodic->vertex_master;
      s2.from = (vm[m.facets[fs][0]] == m.facets[f][0]) ? m.facets[fs][0]
                                                        : m.facets[fs][1];
      s2.offset = -m.periodic->offset;  // slave = master - offset
    }

    const EdgeCurve curve = facet_curve(m, f);
    double acc = 0.0;
    for (size_t q = 0; q < erule.points.size(); ++q) {
      const double t = erule.points[q];
      const Vec2 tan = curve.tangent(t);
      const Vec2 n = Vec2(tan.y(), -tan.x()).normalized();

      auto side_flux = [&](const EdgeSide& s) {
        const Vec2 ref = edge_ref_point(m, s.tri, s.local_edge, s.from, t);
        const Vec2 grad = eval_field_gradient(V, sol.u, s.tri, ref);
        if (!inv_d3) return grad.dot(n);  // plain gradient jump
        const Vec2 x = curve.at(t) + s.offset;
        return problem.diffusion(x) * grad.dot(n);
      };

      const double jump = side_flux(s1) - side_flux(s2);
      acc += erule.weights[q] * tan.norm() * jump * jump;
    }

    for (const EdgeSide& s : {s1, s2}) {
      const double weight = inv_d3 ? (*inv_d3)[s.tri] : 1.0;
      ind.edge_sq[s.tri] += 0.5 * h[s.tri] * weight * acc;
    }
  }

  // Contact term: H1 norm of the violation (g-u)+ plus its pairing with
  // the multiplier; the obstacle gradient is a central difference.
  for (int t = 0; t < nt; ++t) {
    const double step = 1e-6 * h[t];
    double norm_h1 = 0.0, pair = 0.0;
    for (int q = 0; q < nqp; ++q) {
      const MappedPoint mp = map_point(m, t, rule.points[q]);
      const double w = rule.weights[q] * mp.det;

      double u = 0.0;
      Vec2 du = Vec2::Zero();
      for (int i = 0; i < 7; ++i) {
        u += sol.u[V.element_dofs[t][i]] * shape_val[q][i];
        du += sol.u[V.element_dofs[t][i]] * shape_grad[q][i];
      }
      const double v = problem.obstacle(mp.x) - u;
      if (v <= 0.0) continue;

      const Vec2 grad_g(
          (problem.obstacle(mp.x + Vec2(step, 0)) -
           problem.obstacle(mp.x - Vec2(step, 0))) /
              (2 * step),
          (problem.obstacle(mp.x + Vec2(0, step)) -
           problem.obstacle(mp.x - Vec2(0, step))) /
              (2 * step));
      const Vec2 dv = grad_g - mp.jac_inv.transpose() * du;
      norm_h1 += w * (v * v + dv.squaredNorm());
      pair += w * v;
    }
    ind.contact_sq[t] = norm_h1 + sol.lam[t] * pair;
  }

  return ind;
}

}  // namespace

Indicators compute_indicators(const ObstacleProblem& problem,
                              const DofBasis& V, const DofBasis& Q,
                              const MixedSolution& sol) {
  return estimate(problem, V, Q, sol, nullptr);
}

Indicators compute_indicators_weighted(const ObstacleProblem& problem,
                                       const DofBasis& V, const DofBasis& Q,
                                       const MixedSolution& sol,
                                       const ScalarField& gap) {
  const Eigen::VectorXd d = project_p0(*problem.mesh, gap);
  Eigen::VectorXd inv_d3(d.size());
  for (int t = 0; t < d.size(); ++t) {
    if (!(d[t] > 0.0))
      throw InvalidInputError("weighted indicators: film thickness mean of "
                              "element " +
                              std::to_string(t) + " is not positive");
    inv_d3[t] = 1.0 / (d[t] * d[t] * d[t]);
  }
  return estimate(problem, V, Q, sol, &inv_d3);
}

double dual_norm_surrogate(const TriMesh& mesh,
                           const Eigen::VectorXd& element_values) {
  if (element_values.size() != mesh.num_triangles())
    throw InvalidInputError("dual norm surrogate: one value per element");
  const QuadratureRule& rule = triangle_rule(2);
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    double area = 0.0;
    for (size_t q = 0; q < rule.points.size(); ++q)
      area += rule.weights[q] * map_point(mesh, t, rule.points[q]).det;
    const double h = mesh.longest_edge(t);
    sum += h * h * element_values[t] * element_values[t] * area;
  }
  return std::sqrt(sum);
}

std::vector<int> mark_maximum(const Eigen::VectorXd& eta, double beta) {
  if (!(beta > 0.0 && beta < 1.0))
    throw InvalidInputError("marking fraction must satisfy 0 < beta < 1");
  if (eta.size() == 0) return {};
  const double cut = beta * eta.maxCoeff();
  std::vector<int> marked;
  for (int t = 0; t < eta.size(); ++t)
    if (eta[t] >= cut) marked.push_back(t);
  return marked;
}

namespace {

void check_refinement(const TriMesh& before, const RefineResult& rr) {
  rr.mesh.validate();
  const int nt_old = before.num_triangles();
  std::vector<double> child_area(nt_old, 0.0);
  for (int c = 0; c < rr.mesh.num_triangles(); ++c)
    child_area[rr.parent[c]] += rr.mesh.signed_area(c);
  for (int t = 0; t < nt_old; ++t) {
    const double a = before.signed_area(t);
    if (std::abs(child_area[t] - a) > 1e-12 * std::abs(a))
      throw InvalidInputError("refinement lost area on parent " +
                              std::to_string(t));
  }
}

}  // namespace

AdaptResult adapt_loop(const ObstacleProblem& problem,
                       const AdaptOptions& options) {
  if (options.levels < 1)
    throw InvalidInputError("adapt_loop needs at least one level");

  ObstacleProblem prob = problem;
  AdaptResult out;
  MixedSolution prev;
  DofBasis prevV, prevQ;
  bool have_prev = false;

  for (int level = 0; level < options.levels; ++level) {
    const auto t0 = std::chrono::steady_clock::now();

    DofBasis V = make_basis(prob.mesh, ElementKind::P2Bubble);
    DofBasis Q = make_basis(prob.mesh, ElementKind::P0);

    MixedSolution init;
    const MixedSolution* initial = nullptr;
    if (options.warm && have_prev) {
      init = warm_start(prev, prevV, prevQ, V, Q);
      initial = &init;
    }

    PdasReport rep;
    MixedSolution sol;
    try {
      sol = pdas_solve(prob, V, Q, initial, options.pdas, &rep);
    } catch (const NonConvergenceError& e) {
      throw NonConvergenceError("adaptive level " + std::to_string(level) +
                                ": " + e.what());
    }

    Indicators ind = options.gap
                         ? compute_indicators_weighted(prob, V, Q, sol,
                                                       *options.gap)
                         : compute_indicators(prob, V, Q, sol);

    AdaptRecord rec;
    rec.level = level;
    rec.num_dofs = V.num_dofs + Q.num_dofs;
    rec.num_elements = prob.mesh->num_triangles();
    rec.eta_total = ind.total();
    rec.eta_interior = ind.interior();
    rec.eta_edge = ind.edge();
    rec.eta_contact = ind.contact();
    rec.pdas_iterations = rep.iterations;
    rec.active_elements =
        rep.active_counts.empty() ? 0 : rep.active_counts.back();
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    out.records.push_back(rec);

    if (options.observer) options.observer(level, prob, V, Q, sol, ind);

    if (level + 1 == options.levels) {
      out.problem = prob;
      out.V = std::move(V);
      out.Q = std::move(Q);
      out.solution = std::move(sol);
      out.indicators = std::move(ind);
      break;
    }

    std::vector<int> marks;
    if (options.uniform) {
      marks.resize(prob.mesh->num_triangles());
      for (size_t t = 0; t < marks.size(); ++t) marks[t] = static_cast<int>(t);
    } else {
      marks = mark_maximum(ind.element(), options.beta);
    }

    RefineResult rr = rgb_refine(*prob.mesh, marks);
    if (options.check_refinement) check_refinement(*prob.mesh, rr);

    TriMesh next = std::move(rr.mesh);
    if (options.boundary_sdf)
      next = project_boundary_nodes(next, *options.boundary_sdf);
    if (options.smooth_sweeps > 0)
      next = laplacian_smooth(next, options.smooth_sweeps);
    if (options.lift) next = lift_quadratic(next, options.boundary_sdf);

    prob.mesh = std::make_shared<const TriMesh>(std::move(next));
    prev = std::move(sol);
    prevV = std::move(V);
    prevQ = std::move(Q);
    have_prev = true;
  }
  return out;
}

}  // namespace obstakl
