#include "obstakl/geometry.hpp"

#include <cmath>
#include <utility>

#include "obstakl/errors.hpp"

namespace obstakl {

Vec2 SignedDistanceField::gradient(const Vec2& p, double step) const {
  Vec2 g;
  for (int d = 0; d < 2; ++d) {
    Vec2 lo = p, hi = p;
    lo[d] -= step;
    hi[d] += step;
    g[d] = (eval(hi) - eval(lo)) / (2.0 * step);
  }
  return g;
}

SignedDistanceField sdf_circle(const Vec2& center, double radius) {
  if (!(radius > 0.0)) throw InvalidInputError("circle radius must be positive");
  return {[center, radius](const Vec2& p) {
    return (p - center).norm() - radius;
  }};
}

SignedDistanceField sdf_rectangle(const Vec2& center, const Vec2& half_width) {
  if (!(half_width.x() > 0.0 && half_width.y() > 0.0))
    throw InvalidInputError("rectangle half widths must be positive");
  return {[center, half_width](const Vec2& p) {
    const Vec2 d = (p - center).cwiseAbs() - half_width;
    const Vec2 outside = d.cwiseMax(0.0);
    return outside.norm() + std::min(std::max(d.x(), d.y()), 0.0);
  }};
}

SignedDistanceField sdf_halfplane(const Vec2& point, const Vec2& normal) {
  const Vec2 n = normal.normalized();
  return {[point, n](const Vec2& p) { return (p - point).dot(n); }};
}

SignedDistanceField sdf_union(SignedDistanceField a, SignedDistanceField b) {
  return {[a = std::move(a), b = std::move(b)](const Vec2& p) {
    return std::min(a.eval(p), b.eval(p));
  }};
}

SignedDistanceField sdf_intersection(SignedDistanceField a,
                                     SignedDistanceField b) {
  return {[a = std::move(a), b = std::move(b)](const Vec2& p) {
    return std::max(a.eval(p), b.eval(p));
  }};
}

SignedDistanceField sdf_difference(SignedDistanceField a,
                                   SignedDistanceField b) {
  return {[a = std::move(a), b = std::move(b)](const Vec2& p) {
    return std::max(a.eval(p), -b.eval(p));
  }};
}

SignedDistanceField sdf_scale(SignedDistanceField f, double s) {
  if (!(s > 0.0)) throw InvalidInputError("scale factor must be positive");
  return {[f = std::move(f), s](const Vec2& p) {
    return s * f.eval(Vec2(p / s));
  }};
}

namespace {

// Quarter-plane description of the IPN section; evaluated in folded
// coordinates (|x|, |y|) so both symmetries hold exactly.
//
// Pieces that merely tile the section meet along internal faces.  If two
// pieces stop at exactly the same face, the combined min/max field develops
// spurious near-zero ridges along that face even though it lies strictly
// inside the material (or, for the subtracted toe sliver, strictly outside).
// Such ridges attract mesh generation and trap boundary projection, so every
// internal scaffolding face is pushed into the neighbouring piece by an
// overlap margin larger than the piece's own diameter-to-arc distance.  The
// shifted walls are then never the binding constraint near the outline, the
// fillet arcs alone decide the field there, and the margin lies inside
// material another piece already claims (or inside air the subtraction only
// re-removes), so the outline itself is unchanged.
struct IpnQuadrant {
  static constexpr double kSeamOverlap = 2.0;

  double web_x;      // web face
  double flange_x;   // flange tip face
  double top_y;      // flange outer face
  double m;          // inner-face slope
  double line_c;     // inner face: y = m * x + line_c
  double line_norm;  // sqrt(1 + m^2)
  Vec2 root_center;  // root fillet circle
  double root_r;
  Vec2 toe_center;  // toe fillet circle
  double toe_r;

  // Signed distance to the inner-face line, negative above (flange side).
  double line_dist(const Vec2& p) const {
    return (m * p.x() + line_c - p.y()) / line_norm;
  }

  double operator()(Vec2 p) const {
    p = p.cwiseAbs();

    // Web and flange slabs.
    const double web = std::max(p.x() - web_x, p.y() - top_y);
    const double flange = std::max({p.y() - top_y, p.x() - flange_x,
                                    line_dist(p)});
    double d = std::min(web, flange);

    // Root fillet adds the material between the concave corner walls and
    // the tangent arc.  The web-face and inner-face walls overlap into the
    // web and flange slabs.
    const double root = std::max(
        {web_x - p.x() - kSeamOverlap, -line_dist(p) - kSeamOverlap,
         p.x() - root_center.x(), root_center.y() - p.y(),
         root_r - (p - root_center).norm()});
    d = std::min(d, root);

    // Toe fillet removes the sliver between the convex corner and its arc.
    // Its inner-face and tip-face walls overlap into the surrounding air.
    const double toe = std::max(
        {toe_center.x() - p.x(), p.x() - flange_x - kSeamOverlap,
         line_dist(p) - kSeamOverlap, p.y() - toe_center.y(),
         toe_r - (p - toe_center).norm()});
    d = std::max(d, -toe);

    return d;
  }
};

}  // namespace

SignedDistanceField sdf_ipn80(const ProfileIPN80& profile) {
  IpnQuadrant q;
  q.web_x = 0.5 * profile.web_thickness;
  q.flange_x = 0.5 * profile.width;
  q.top_y = 0.5 * profile.height;
  q.m = profile.flange_slope;

  // Nominal flange thickness applies a quarter of the width from the web
  // axis; the inner face rises toward the tip.
  const double x_ref = 0.25 * profile.width;
  q.line_c = q.top_y - profile.flange_thickness - q.m * x_ref;
  q.line_norm = std::hypot(1.0, q.m);

  const double cx1 = q.web_x + profile.root_radius;
  q.root_center =
      Vec2(cx1, q.m * cx1 + q.line_c - profile.root_radius * q.line_norm);
  q.root_r = profile.root_radius;

  const double cx2 = q.flange_x - profile.toe_radius;
  q.toe_center =
      Vec2(cx2, q.m * cx2 + q.line_c + profile.toe_radius * q.line_norm);
  q.toe_r = profile.toe_radius;

  return {[q](const Vec2& p) { return q(p); }};
}

double distance_to_boundary(const SignedDistanceField& f, const Vec2& p) {
  return std::max(-f.eval(p), 0.0);
}

std::vector<double> distance_to_boundary(const SignedDistanceField& f,
                                         const std::vector<Vec2>& points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const Vec2& p : points) out.push_back(distance_to_boundary(f, p));
  return out;
}

}  // namespace obstakl
