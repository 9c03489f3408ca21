#include "obstakl/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "obstakl/errors.hpp"

namespace obstakl {

namespace {

int64_t facet_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<int64_t>(a) << 32) | static_cast<uint32_t>(b);
}

double tri_signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) -
                (b.y() - a.y()) * (c.x() - a.x()));
}

// Wrapped flags: facets/vertices that take part in a periodic pairing.
std::vector<char> wrapped_facets(const TriMesh& m) {
  std::vector<char> w(m.num_facets(), 0);
  if (!m.periodic) return w;
  const auto& fm = m.periodic->facet_master;
  for (int f = 0; f < m.num_facets(); ++f) {
    if (fm[f] != f) {
      w[f] = 1;
      w[fm[f]] = 1;
    }
  }
  return w;
}

}  // namespace

void TriMesh::build_topology() {
  const int nt = num_triangles();
  facets.clear();
  tri_facets.assign(nt, {-1, -1, -1});
  std::unordered_map<int64_t, int> index;
  index.reserve(nt * 2);

  for (int t = 0; t < nt; ++t) {
    const auto& tr = triangles[t];
    for (int e = 0; e < 3; ++e) {
      const int a = tr[e], b = tr[(e + 1) % 3];
      const int64_t key = facet_key(a, b);
      auto it = index.find(key);
      int f;
      if (it == index.end()) {
        f = static_cast<int>(facets.size());
        index.emplace(key, f);
        facets.push_back({std::min(a, b), std::max(a, b)});
      } else {
        f = it->second;
      }
      tri_facets[t][e] = f;
    }
  }

  const int nf = num_facets();
  facet_tris.assign(nf, {-1, -1});
  for (int t = 0; t < nt; ++t)
    for (int f : tri_facets[t]) {
      if (facet_tris[f][0] == -1)
        facet_tris[f][0] = t;
      else
        facet_tris[f][1] = t;
    }

  facet_boundary.assign(nf, 0);
  const auto wrapped = wrapped_facets(*this);
  for (int f = 0; f < nf; ++f)
    facet_boundary[f] = (facet_tris[f][1] == -1 && !wrapped[f]) ? 1 : 0;
}

double TriMesh::signed_area(int tri) const {
  const auto& t = triangles[tri];
  return tri_signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
}

Vec2 TriMesh::centroid(int tri) const {
  const auto& t = triangles[tri];
  return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

double TriMesh::longest_edge(int tri) const {
  const auto& t = triangles[tri];
  double h = 0.0;
  for (int e = 0; e < 3; ++e)
    h = std::max(h, (vertices[t[e]] - vertices[t[(e + 1) % 3]]).norm());
  return h;
}

std::vector<char> TriMesh::boundary_vertices() const {
  std::vector<char> flag(num_vertices(), 0);
  for (int f = 0; f < num_facets(); ++f)
    if (facet_boundary[f]) {
      flag[facets[f][0]] = 1;
      flag[facets[f][1]] = 1;
    }
  return flag;
}

void TriMesh::validate() const {
  const int nv = num_vertices(), nt = num_triangles();
  for (int t = 0; t < nt; ++t) {
    for (int v : triangles[t])
      if (v < 0 || v >= nv)
        throw InvalidInputError("triangle " + std::to_string(t) +
                                " references vertex " + std::to_string(v));
    if (signed_area(t) <= 0.0)
      throw InvalidInputError("triangle " + std::to_string(t) +
                              " is degenerate or clockwise");
  }
  if (static_cast<int>(tri_facets.size()) != nt)
    throw InvalidInputError("topology arrays are stale; call build_topology");

  const auto wrapped = wrapped_facets(*this);
  for (int f = 0; f < num_facets(); ++f) {
    const bool shared = facet_tris[f][1] != -1;
    if (shared && (facet_boundary[f] || wrapped[f]))
      throw InvalidInputError("facet " + std::to_string(f) +
                              " is shared but flagged boundary or periodic");
    if (!shared && !facet_boundary[f] && !wrapped[f])
      throw InvalidInputError("facet " + std::to_string(f) +
                              " has one neighbour but is not on the boundary");
  }

  if (periodic) {
    const auto& pm = *periodic;
    const double tol = 1e-9 * std::abs(pm.period);
    for (int v = 0; v < nv; ++v) {
      const int m = pm.vertex_master[v];
      if (m == v) continue;
      const Vec2 gap = vertices[m] - vertices[v] - pm.offset;
      if (gap.norm() > tol)
        throw InvalidInputError("periodic pair " + std::to_string(v) + "->" +
                                std::to_string(m) + " violates the offset");
    }
  }

  if (quadratic && static_cast<int>(edge_nodes.size()) != num_facets())
    throw InvalidInputError("quadratic mesh without one midside node per facet");
}

TriMesh init_square_symmetric(int levels) {
  TriMesh m;
  m.vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1),
                Vec2(0.5, 0.5)};
  m.triangles = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  m.build_topology();
  for (int i = 0; i < levels; ++i) m = uniform_refine(m);
  return m;
}

TriMesh init_rectangle(double w, double h, int nx, int ny) {
  if (nx < 1 || ny < 1 || w <= 0 || h <= 0)
    throw InvalidInputError("rectangle grid needs positive size and counts");
  TriMesh m;
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices.push_back(Vec2(w * i / nx, h * j / ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      // Alternate the diagonal so the grid has no preferred direction.
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1),
                d = vid(i, j + 1);
      if ((i + j) % 2 == 0) {
        m.triangles.push_back({a, b, c});
        m.triangles.push_back({a, c, d});
      } else {
        m.triangles.push_back({a, b, d});
        m.triangles.push_back({b, c, d});
      }
    }
  m.build_topology();
  return m;
}

RefineResult rgb_refine(const TriMesh& mesh, const std::vector<int>& marked) {
  const int nt = mesh.num_triangles(), nf = mesh.num_facets();
  for (int t : marked)
    if (t < 0 || t >= nt)
      throw InvalidInputError("marked triangle " + std::to_string(t) +
                              " out of range");

  // Facet classes: periodic partners split together.
  std::vector<int> fclass(nf);
  for (int f = 0; f < nf; ++f)
    fclass[f] = mesh.periodic ? mesh.periodic->facet_master[f] : f;

  std::vector<char> split(nf, 0);
  auto mark_facet = [&](int f) {
    if (!split[fclass[f]]) {
      split[fclass[f]] = 1;
      return true;
    }
    return false;
  };
  auto is_split = [&](int f) { return split[fclass[f]] != 0; };

  for (int t : marked)
    for (int f : mesh.tri_facets[t]) mark_facet(f);

  // Longest-edge closure: a triangle with any split edge also splits its
  // longest edge.  Ties go to the smallest local index.
  auto longest_local = [&](int t) {
    const auto& tr = mesh.triangles[t];
    int best = 0;
    double len = -1.0;
    for (int e = 0; e < 3; ++e) {
      const double L =
          (mesh.vertices[tr[e]] - mesh.vertices[tr[(e + 1) % 3]]).norm();
      if (L > len) {  // exact ties keep the smallest local index
        len = L;
        best = e;
      }
    }
    return best;
  };
  std::vector<int> longest(nt);
  for (int t = 0; t < nt; ++t) longest[t] = longest_local(t);

  bool changed = true;
  while (changed) {
    changed = false;
    for (int t = 0; t < nt; ++t) {
      const auto& tf = mesh.tri_facets[t];
      if (is_split(tf[0]) || is_split(tf[1]) || is_split(tf[2]))
        if (mark_facet(tf[longest[t]])) changed = true;
    }
  }

  // One new vertex per split facet, at the chord midpoint even when the
  // input mesh carries curved midside nodes: children then tile their
  // parent exactly, and the caller's boundary projection and lifting
  // steps restore the curvature afterwards.
  RefineResult out;
  TriMesh& ref = out.mesh;
  ref.vertices = mesh.vertices;
  std::vector<int> midpoint(nf, -1);
  for (int f = 0; f < nf; ++f) {
    if (!is_split(f)) continue;
    midpoint[f] = static_cast<int>(ref.vertices.size());
    ref.vertices.push_back(0.5 * (mesh.vertices[mesh.facets[f][0]] +
                                  mesh.vertices[mesh.facets[f][1]]));
  }

  auto emit = [&](int parent, int a, int b, int c) {
    ref.triangles.push_back({a, b, c});
    out.parent.push_back(parent);
  };

  for (int t = 0; t < nt; ++t) {
    const auto& tr = mesh.triangles[t];
    const auto& tf = mesh.tri_facets[t];
    int nsplit = 0;
    for (int e = 0; e < 3; ++e) nsplit += is_split(tf[e]) ? 1 : 0;

    if (nsplit == 0) {
      emit(t, tr[0], tr[1], tr[2]);
      continue;
    }

    // Rotate so the longest edge is local edge 0 (always split by closure).
    const int k = longest[t];
    const int v0 = tr[k], v1 = tr[(k + 1) % 3], v2 = tr[(k + 2) % 3];
    const int m0 = midpoint[tf[k]];
    const int m1 = midpoint[tf[(k + 1) % 3]];
    const int m2 = midpoint[tf[(k + 2) % 3]];

    if (nsplit == 3) {  // red
      emit(t, v0, m0, m2);
      emit(t, m0, v1, m1);
      emit(t, m2, m1, v2);
      emit(t, m0, m1, m2);
    } else if (nsplit == 1) {  // green
      emit(t, v0, m0, v2);
      emit(t, m0, v1, v2);
    } else if (m1 != -1) {  // blue, second split on edge (v1, v2)
      emit(t, v0, m0, v2);
      emit(t, m0, v1, m1);
      emit(t, m0, m1, v2);
    } else {  // blue, second split on edge (v2, v0)
      emit(t, m0, v1, v2);
      emit(t, m0, v2, m2);
      emit(t, v0, m0, m2);
    }
  }

  ref.build_topology();
  if (mesh.periodic)
    ref = wrap_periodic(ref, mesh.periodic->direction, mesh.periodic->period);
  return out;
}

TriMesh uniform_refine(const TriMesh& mesh) {
  std::vector<int> all(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) all[t] = t;
  return rgb_refine(mesh, all).mesh;
}

TriMesh laplacian_smooth(const TriMesh& mesh, int sweeps) {
  if (mesh.quadratic)
    throw InvalidInputError("smoothing expects a straight-edged mesh");
  TriMesh m = mesh;
  const int nv = m.num_vertices();

  std::vector<char> fixed = m.boundary_vertices();
  if (m.periodic) {
    const auto& vm = m.periodic->vertex_master;
    for (int v = 0; v < nv; ++v)
      if (vm[v] != v) {
        fixed[v] = 1;
        fixed[vm[v]] = 1;
      }
  }

  std::vector<std::vector<int>> nbr(nv), cells(nv);
  for (const auto& f : m.facets) {
    nbr[f[0]].push_back(f[1]);
    nbr[f[1]].push_back(f[0]);
  }
  for (int t = 0; t < m.num_triangles(); ++t)
    for (int v : m.triangles[t]) cells[v].push_back(t);

  for (int s = 0; s < sweeps; ++s)
    for (int v = 0; v < nv; ++v) {
      if (fixed[v] || nbr[v].empty()) continue;
      Vec2 mean = Vec2::Zero();
      for (int w : nbr[v]) mean += m.vertices[w];
      mean /= static_cast<double>(nbr[v].size());

      const Vec2 old = m.vertices[v];
      m.vertices[v] = mean;
      for (int t : cells[v])
        if (m.signed_area(t) <= 0.0) {
          m.vertices[v] = old;  // the move would invert this triangle
          break;
        }
    }
  return m;
}

namespace {

// Newton iteration toward the zero level set along the field gradient.
// Where min/max seams kink the field, the finite-difference gradient
// averages two branches, so Newton stalls a fraction of the stencil
// width away from the boundary, and the blended direction can even run
// tangent to the level set.  The field is still continuous there and the
// boundary is within O(|d|) of the stalled point, so a short radial scan
// for a sign change followed by bisection finishes the job.  The scan
// radius is capped: a point that cannot be fixed locally is left alone
// rather than dragged to some distant piece of the boundary.
Vec2 project_point(const SignedDistanceField& sdf, Vec2 p, double tol,
                   int max_steps) {
  for (int i = 0; i < max_steps; ++i) {
    const double d = sdf.eval(p);
    if (std::abs(d) <= tol) return p;
    const Vec2 g = sdf.gradient(p);
    const double g2 = g.squaredNorm();
    if (g2 < 1e-20) return p;  // flat spot; leave the point alone
    p -= d * g / g2;
  }

  const double d0 = sdf.eval(p);
  if (std::abs(d0) <= tol) return p;

  constexpr double kPi = 3.14159265358979323846;
  const double rho_max = 1e6 * tol;
  double rho = std::max(2.0 * std::abs(d0), 8.0 * tol);
  for (; rho <= rho_max; rho *= 2.0) {
    for (int k = 0; k < 16; ++k) {
      const double a = 2.0 * kPi * k / 16.0;
      const Vec2 q = p + rho * Vec2(std::cos(a), std::sin(a));
      const double dq = sdf.eval(q);
      if (dq == 0.0) return q;
      if ((dq > 0.0) == (d0 > 0.0)) continue;

      Vec2 lo = p, hi = q;
      double dlo = d0;
      for (int i = 0; i < 200; ++i) {
        const Vec2 mid = 0.5 * (lo + hi);
        const double dm = sdf.eval(mid);
        if (std::abs(dm) <= tol) return mid;
        if ((dm > 0.0) == (dlo > 0.0)) {
          lo = mid;
          dlo = dm;
        } else {
          hi = mid;
        }
        if ((hi - lo).norm() <= 1e-18 * (1.0 + p.norm())) break;
      }
      return 0.5 * (lo + hi);
    }
  }
  return p;
}

}  // namespace

TriMesh project_boundary_nodes(const TriMesh& mesh,
                               const SignedDistanceField& sdf, int max_steps,
                               double tol_rel) {
  TriMesh m = mesh;
  Vec2 lo = m.vertices[0], hi = m.vertices[0];
  for (const Vec2& v : m.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double tol = tol_rel * (hi - lo).norm();

  const auto on_bdry = m.boundary_vertices();
  for (int v = 0; v < m.num_vertices(); ++v)
    if (on_bdry[v]) m.vertices[v] = project_point(sdf, m.vertices[v], tol,
                                                  max_steps);
  if (m.quadratic)
    for (int f = 0; f < m.num_facets(); ++f)
      if (m.facet_boundary[f])
        m.edge_nodes[f] = project_point(sdf, m.edge_nodes[f], tol, max_steps);
  return m;
}

TriMesh lift_quadratic(const TriMesh& mesh, const SignedDistanceField* sdf) {
  TriMesh m = mesh;
  m.quadratic = false;
  m.edge_nodes.clear();
  // Settle the vertices first so interior midside nodes are exact midpoints
  // of the final positions; the second pass then curves boundary midsides.
  if (sdf) m = project_boundary_nodes(m, *sdf);
  m.edge_nodes.resize(m.num_facets());
  for (int f = 0; f < m.num_facets(); ++f)
    m.edge_nodes[f] =
        0.5 * (m.vertices[m.facets[f][0]] + m.vertices[m.facets[f][1]]);
  m.quadratic = true;
  if (sdf) m = project_boundary_nodes(m, *sdf);
  return m;
}

TriMesh wrap_periodic(const TriMesh& mesh, int direction, double period) {
  if (direction != 0 && direction != 1)
    throw InvalidInputError("periodic direction must be 0 or 1");
  if (period <= 0) throw InvalidInputError("period must be positive");

  TriMesh m = mesh;
  m.periodic.reset();
  m.build_topology();  // plain boundary flags for seam detection

  const int nv = m.num_vertices();
  double cmin = m.vertices[0][direction], cmax = cmin;
  for (const Vec2& v : m.vertices) {
    cmin = std::min(cmin, v[direction]);
    cmax = std::max(cmax, v[direction]);
  }
  const double tol = 1e-9 * period;
  if (std::abs((cmax - cmin) - period) > tol)
    throw InvalidInputError("mesh extent does not match the period");

  const auto on_bdry = m.boundary_vertices();
  std::vector<int> low, high;
  for (int v = 0; v < nv; ++v) {
    if (!on_bdry[v]) continue;
    if (std::abs(m.vertices[v][direction] - cmin) <= tol) low.push_back(v);
    if (std::abs(m.vertices[v][direction] - cmax) <= tol) high.push_back(v);
  }

  PeriodicMap pm;
  pm.direction = direction;
  pm.period = period;
  pm.offset = Vec2::Zero();
  pm.offset[direction] = -period;  // master side is the low side
  pm.vertex_master.resize(nv);
  for (int v = 0; v < nv; ++v) pm.vertex_master[v] = v;

  const int other = 1 - direction;
  std::vector<int> unmatched;
  for (int r : high) {
    int found = -1;
    for (int l : low)
      if (std::abs(m.vertices[l][other] - m.vertices[r][other]) <= tol) {
        found = l;
        break;
      }
    if (found == -1)
      unmatched.push_back(r);
    else
      pm.vertex_master[r] = found;
  }
  std::vector<char> used(nv, 0);
  for (int r : high) used[pm.vertex_master[r]] = 1;
  for (int l : low)
    if (!used[l]) unmatched.push_back(l);
  if (!unmatched.empty()) {
    std::string msg = "periodic wrap: unmatched seam vertices";
    for (int v : unmatched) msg += " " + std::to_string(v);
    throw InvalidInputError(msg);
  }

  // Pair seam facets through their paired endpoints.
  std::unordered_map<int64_t, int> by_key;
  for (int f = 0; f < m.num_facets(); ++f)
    by_key.emplace(facet_key(m.facets[f][0], m.facets[f][1]), f);

  pm.facet_master.resize(m.num_facets());
  for (int f = 0; f < m.num_facets(); ++f) pm.facet_master[f] = f;
  for (int f = 0; f < m.num_facets(); ++f) {
    const int a = m.facets[f][0], b = m.facets[f][1];
    const int ma = pm.vertex_master[a], mb = pm.vertex_master[b];
    if (ma == a && mb == b) continue;  // not a high-side facet
    if (ma == a || mb == b) continue;  // touches the seam at one end only
    auto it = by_key.find(facet_key(ma, mb));
    if (it == by_key.end())
      throw InvalidInputError("periodic wrap: facet " + std::to_string(f) +
                              " has no partner across the seam");
    pm.facet_master[f] = it->second;
  }

  m.periodic = pm;
  m.build_topology();  // seam facets stop being boundary
  m.validate();
  return m;
}

std::string write_mesh_text(const TriMesh& mesh) {
  std::ostringstream os;
  char buf[80];
  os << mesh.num_vertices() << "\n";
  for (const Vec2& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x(), v.y());
    os << buf;
  }
  os << mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles)
    os << t[0] << " " << t[1] << " " << t[2] << "\n";
  return os.str();
}

TriMesh read_mesh_text(const std::string& text) {
  std::istringstream is(text);
  int nv = 0;
  if (!(is >> nv) || nv < 3)
    throw ConfigError("mesh text: bad vertex count");
  TriMesh m;
  m.vertices.resize(nv);
  for (auto& v : m.vertices)
    if (!(is >> v.x() >> v.y()))
      throw ConfigError("mesh text: truncated vertex list");
  int nt = 0;
  if (!(is >> nt) || nt < 1)
    throw ConfigError("mesh text: bad triangle count");
  m.triangles.resize(nt);
  for (auto& t : m.triangles) {
    if (!(is >> t[0] >> t[1] >> t[2]))
      throw ConfigError("mesh text: truncated triangle list");
    for (int v : t)
      if (v < 0 || v >= nv)
        throw ConfigError("mesh text: vertex index out of range");
  }
  m.build_topology();
  return m;
}

void save_mesh(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << write_mesh_text(mesh);
}

TriMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return read_mesh_text(ss.str());
}

}  // namespace obstakl
