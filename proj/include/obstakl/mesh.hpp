#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "obstakl/geometry.hpp"

namespace obstakl {

// Identification of two mesh sides for a periodic direction.  Slave
// entities map onto masters; coordinates satisfy
// master = slave + offset within a 1e-9 relative tolerance.
struct PeriodicMap {
  int direction = 0;  // 0 = x, 1 = y
  double period = 0.0;
  Vec2 offset = Vec2::Zero();     // master position - slave position
  std::vector<int> vertex_master;  // size nv; self where not paired
  std::vector<int> facet_master;   // size nf; self where not paired
};

// Conforming triangle mesh.  Triangles are counterclockwise.  Facets are
// the unique edges, each stored with ascending vertex indices; topology
// arrays are rebuilt by build_topology() after any structural change.
struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;

  // Derived connectivity.
  std::vector<std::array<int, 2>> facets;
  std::vector<std::array<int, 3>> tri_facets;   // local edges (0,1),(1,2),(2,0)
  std::vector<std::array<int, 2>> facet_tris;   // incident triangles, -1 if none
  std::vector<char> facet_boundary;             // 1 = on the domain boundary

  // Midside nodes, one per facet, present on quadratic (curved) meshes.
  std::vector<Vec2> edge_nodes;
  bool quadratic = false;

  std::optional<PeriodicMap> periodic;

  // Set by the mesh generator when it stopped on the iteration cap.
  bool generator_warning = false;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_facets() const { return static_cast<int>(facets.size()); }

  void build_topology();

  double signed_area(int tri) const;
  Vec2 centroid(int tri) const;
  double longest_edge(int tri) const;
  std::vector<char> boundary_vertices() const;

  // Checks orientation, facet sharing (no hanging nodes), and the periodic
  // pairing tolerance; throws InvalidInputError on violation.
  void validate() const;
};

// Unit square split into four triangles around the center point, then
// uniformly refined `levels` times (4^(levels+1) triangles).
TriMesh init_square_symmetric(int levels = 0);

// Structured nx-by-ny grid of the rectangle [0,w]x[0,h], each cell split
// into two triangles.
TriMesh init_rectangle(double w, double h, int nx, int ny);

// Red-green-blue refinement of the marked triangles with longest-edge
// closure; `parent` maps each output triangle to its source triangle.
// Periodic identifications are rebuilt on the refined mesh, and marks
// propagate across paired facets.
struct RefineResult {
  TriMesh mesh;
  std::vector<int> parent;
};
RefineResult rgb_refine(const TriMesh& mesh, const std::vector<int>& marked);

TriMesh uniform_refine(const TriMesh& mesh);

// Moves each interior vertex to the mean of its neighbours, `sweeps`
// times; a move that would invert an incident triangle is skipped.
// Boundary and periodic-seam vertices stay put.
TriMesh laplacian_smooth(const TriMesh& mesh, int sweeps = 1);

// Newton projection of boundary vertices (and boundary midside nodes on
// quadratic meshes) onto the zero level set: at most `max_steps` steps or
// until |sdf| <= tol_rel * mesh diameter.
TriMesh project_boundary_nodes(const TriMesh& mesh,
                               const SignedDistanceField& sdf,
                               int max_steps = 5, double tol_rel = 1e-10);

// Adds midside nodes, projecting boundary ones onto the zero level set
// when an sdf is given.
TriMesh lift_quadratic(const TriMesh& mesh,
                       const SignedDistanceField* sdf = nullptr);

// Identifies the two mesh sides orthogonal to `direction` that are
// `period` apart.  Every seam vertex must have a partner within a 1e-9
// relative tolerance, else InvalidInputError lists the unmatched ones.
TriMesh wrap_periodic(const TriMesh& mesh, int direction, double period);

// Plain text form: vertex count, one "x y" line per vertex, triangle
// count, one "i j k" line per triangle.
std::string write_mesh_text(const TriMesh& mesh);
TriMesh read_mesh_text(const std::string& text);
void save_mesh(const TriMesh& mesh, const std::string& path);
TriMesh load_mesh(const std::string& path);

// Uniform-size force-equilibrium mesh generator on the region sdf < 0.
// Starts from a hexagonal point grid of spacing h0 clipped to the region,
// relaxes bar forces (F = max(L0 - L, 0)) with Delaunay retriangulation,
// and finally projects boundary vertices to within 1e-3 * h0 of the zero
// level set.  Reaching max_iter before the move tolerance sets
// generator_warning instead of failing.
struct DistmeshOptions {
  int max_iter = 200;
  double time_step = 0.2;
  double force_scale = 1.2;
  double retriangulation_tol = 0.1;  // relative to h0
  double move_tol = 1e-3;           // relative to h0
};
TriMesh distmesh_generate(const SignedDistanceField& sdf, double h0,
                          const Vec2& bbox_lo, const Vec2& bbox_hi,
                          const std::vector<Vec2>& fixed_points = {},
                          const DistmeshOptions& options = {});

// Delaunay triangulation of a point set (Bowyer-Watson).
std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& points);

}  // namespace obstakl
