#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "obstakl/errors.hpp"
#include "obstakl/mesh.hpp"

namespace obstakl {

namespace {

// > 0 when p lies strictly inside the circumcircle of the ccw triangle
// (a, b, c).
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const double ax = a.x() - p.x(), ay = a.y() - p.y();
  const double bx = b.x() - p.x(), by = b.y() - p.y();
  const double cx = c.x() - p.x(), cy = c.y() - p.y();
  const double a2 = ax * ax + ay * ay;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) +
         a2 * (bx * cy - by * cx);
}

}  // namespace

std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw InvalidInputError("triangulation needs at least 3 points");

  Vec2 lo = points[0], hi = points[0];
  for (const Vec2& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec2 mid = 0.5 * (lo + hi);
  const double span = std::max((hi - lo).norm(), 1e-30);

  std::vector<Vec2> pts = points;
  pts.push_back(mid + Vec2(-40.0 * span, -20.0 * span));
  pts.push_back(mid + Vec2(40.0 * span, -20.0 * span));
  pts.push_back(mid + Vec2(0.0, 40.0 * span));

  std::vector<std::array<int, 3>> tris = {{n, n + 1, n + 2}};
  const double eps = 1e-12 * span * span * span * span;

  std::vector<std::array<int, 3>> next;
  std::vector<std::array<int, 2>> cavity;
  for (int i = 0; i < n; ++i) {
    next.clear();
    cavity.clear();
    for (const auto& t : tris) {
      if (incircle(pts[t[0]], pts[t[1]], pts[t[2]], pts[i]) > eps) {
        cavity.push_back({t[0], t[1]});
        cavity.push_back({t[1], t[2]});
        cavity.push_back({t[2], t[0]});
      } else {
        next.push_back(t);
      }
    }
    // Cavity boundary: directed edges whose reverse is absent.
    for (const auto& e : cavity) {
      bool paired = false;
      for (const auto& r : cavity)
        if (r[0] == e[1] && r[1] == e[0]) {
          paired = true;
          break;
        }
      if (!paired) next.push_back({e[0], e[1], i});
    }
    tris.swap(next);
  }

  std::vector<std::array<int, 3>> out;
  for (const auto& t : tris)
    if (t[0] < n && t[1] < n && t[2] < n) out.push_back(t);
  return out;
}

namespace {

double max_gap(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, (a[i] - b[i]).norm());
  return m;
}

}  // namespace

TriMesh distmesh_generate(const SignedDistanceField& sdf, double h0,
                          const Vec2& bbox_lo, const Vec2& bbox_hi,
                          const std::vector<Vec2>& fixed_points,
                          const DistmeshOptions& options) {
  if (h0 <= 0) throw InvalidInputError("mesh size h0 must be positive");
  const double geps = 1e-3 * h0;

  // Hexagonal seed grid clipped to the region.
  std::vector<Vec2> pts = fixed_points;
  const double dy = h0 * std::sqrt(3.0) / 2.0;
  int row = 0;
  for (double y = bbox_lo.y(); y <= bbox_hi.y() + 1e-12 * h0; y += dy, ++row)
    for (double x = bbox_lo.x() + (row % 2 ? h0 / 2 : 0.0);
         x <= bbox_hi.x() + 1e-12 * h0; x += h0) {
      const Vec2 p(x, y);
      if (sdf.eval(p) >= geps) continue;
      bool dup = false;
      for (const Vec2& q : fixed_points)
        if ((p - q).norm() < 1e-9 * h0) {
          dup = true;
          break;
        }
      if (!dup) pts.push_back(p);
    }
  if (pts.size() < 3)
    throw InvalidInputError("mesh size too coarse for the region");

  const int nfix = static_cast<int>(fixed_points.size());
  std::vector<Vec2> snapshot(pts.size(),
                             Vec2::Constant(std::numeric_limits<double>::max()));
  std::vector<std::array<int, 3>> tris;
  std::vector<std::array<int, 2>> bars;
  std::vector<Vec2> force(pts.size());
  bool converged = false;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    if (max_gap(pts, snapshot) > options.retriangulation_tol * h0) {
      snapshot = pts;
      tris.clear();
      for (const auto& t : delaunay(pts)) {
        const Vec2 c = (pts[t[0]] + pts[t[1]] + pts[t[2]]) / 3.0;
        if (sdf.eval(c) < -geps) tris.push_back(t);
      }
      std::vector<int64_t> keys;
      keys.reserve(tris.size() * 3);
      for (const auto& t : tris)
        for (int e = 0; e < 3; ++e) {
          const int a = std::min(t[e], t[(e + 1) % 3]);
          const int b = std::max(t[e], t[(e + 1) % 3]);
          keys.push_back((static_cast<int64_t>(a) << 32) | b);
        }
      std::sort(keys.begin(), keys.end());
      keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
      bars.clear();
      for (int64_t k : keys)
        bars.push_back({static_cast<int>(k >> 32),
                        static_cast<int>(k & 0xffffffff)});
    }

    // Repulsive bar forces toward the common equilibrium length.
    double sum_sq = 0.0;
    std::vector<double> len(bars.size());
    for (size_t b = 0; b < bars.size(); ++b) {
      len[b] = (pts[bars[b][0]] - pts[bars[b][1]]).norm();
      sum_sq += len[b] * len[b];
    }
    const double L0 =
        options.force_scale * std::sqrt(sum_sq / static_cast<double>(bars.size()));

    std::fill(force.begin(), force.end(), Vec2::Zero());
    for (size_t b = 0; b < bars.size(); ++b) {
      const double f = std::max(L0 - len[b], 0.0);
      if (f == 0.0 || len[b] == 0.0) continue;
      const Vec2 dir = (pts[bars[b][0]] - pts[bars[b][1]]) / len[b];
      force[bars[b][0]] += f * dir;
      force[bars[b][1]] -= f * dir;
    }
    for (int i = 0; i < nfix; ++i) force[i] = Vec2::Zero();

    double interior_move = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
      const Vec2 step = options.time_step * force[i];
      pts[i] += step;
      const double d = sdf.eval(pts[i]);
      if (d > 0.0) {
        const Vec2 g = sdf.gradient(pts[i], std::sqrt(1e-16) * h0);
        const double g2 = std::max(g.squaredNorm(), 1e-20);
        pts[i] -= d * g / g2;
      } else if (d < -geps) {
        interior_move = std::max(interior_move, step.norm());
      }
    }

    if (interior_move / h0 < options.move_tol) {
      converged = true;
      break;
    }
  }

  // Final triangulation, pruning points that end up unused.
  tris.clear();
  for (const auto& t : delaunay(pts)) {
    const Vec2 c = (pts[t[0]] + pts[t[1]] + pts[t[2]]) / 3.0;
    if (sdf.eval(c) < -geps) tris.push_back(t);
  }

  std::vector<int> remap(pts.size(), -1);
  TriMesh mesh;
  for (auto& t : tris) {
    for (int& v : t) {
      if (remap[v] == -1) {
        remap[v] = mesh.num_vertices();
        mesh.vertices.push_back(pts[v]);
      }
      v = remap[v];
    }
    const double area = 0.5 * ((mesh.vertices[t[1]] - mesh.vertices[t[0]]).x() *
                                   (mesh.vertices[t[2]] - mesh.vertices[t[0]]).y() -
                               (mesh.vertices[t[1]] - mesh.vertices[t[0]]).y() *
                                   (mesh.vertices[t[2]] - mesh.vertices[t[0]]).x());
    if (std::abs(area) < 1e-12 * h0 * h0) continue;
    if (area < 0) std::swap(t[1], t[2]);
    mesh.triangles.push_back(t);
  }
  mesh.build_topology();

  // Pull boundary vertices onto the zero level set.
  const auto on_bdry = mesh.boundary_vertices();
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (on_bdry[v]) {
      Vec2 p = mesh.vertices[v];
      for (int k = 0; k < 20 && std::abs(sdf.eval(p)) > geps; ++k) {
        const Vec2 g = sdf.gradient(p, std::sqrt(1e-16) * h0);
        p -= sdf.eval(p) * g / std::max(g.squaredNorm(), 1e-20);
      }
      mesh.vertices[v] = p;
    }

  mesh.generator_warning = !converged;
  return mesh;
}

}  // namespace obstakl
