#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace obstakl {

using Vec2 = Eigen::Vector2d;

// Signed distance to a closed region: negative inside, positive outside,
// zero on the boundary.  Combinators built from min/max are only lower
// bounds on the true distance away from the zero level set, which is all
// the mesh generator needs.
struct SignedDistanceField {
  std::function<double(const Vec2&)> eval;

  double operator()(const Vec2& p) const { return eval(p); }

  // Central finite-difference gradient; near-unit length for exact fields.
  Vec2 gradient(const Vec2& p, double step = 1e-6) const;
};

SignedDistanceField sdf_circle(const Vec2& center, double radius);

// Axis-aligned rectangle given by its center and half widths (exact
// distance, including the corner regions).
SignedDistanceField sdf_rectangle(const Vec2& center, const Vec2& half_width);

// Half plane {p : (p - point) . normal <= 0}; the normal points outward.
SignedDistanceField sdf_halfplane(const Vec2& point, const Vec2& normal);

SignedDistanceField sdf_union(SignedDistanceField a, SignedDistanceField b);
SignedDistanceField sdf_intersection(SignedDistanceField a,
                                     SignedDistanceField b);
// a minus b.
SignedDistanceField sdf_difference(SignedDistanceField a,
                                   SignedDistanceField b);

// Uniformly scale the region by s > 0 about the origin (used to convert
// between unit systems while keeping the field a distance).
SignedDistanceField sdf_scale(SignedDistanceField f, double s);

// Cross-section of an IPN 80 hot-rolled beam, dimensions in millimetres,
// centered at the origin with the web along y.  The inner flange faces
// slope at 14 %, with the nominal flange thickness measured at a quarter
// of the total width from the web axis.  Root fillets (radius r1) are
// added where web and flange meet; toe fillets (radius r2) round the
// flange tips.
struct ProfileIPN80 {
  double height = 80.0;
  double width = 42.0;
  double web_thickness = 3.9;
  double flange_thickness = 5.9;
  double root_radius = 3.9;
  double toe_radius = 2.3;
  double flange_slope = 0.14;
};

SignedDistanceField sdf_ipn80(const ProfileIPN80& profile = {});

// Distance to the boundary from inside: max(-sdf(p), 0), so exterior
// points clamp to zero.
double distance_to_boundary(const SignedDistanceField& f, const Vec2& p);
std::vector<double> distance_to_boundary(const SignedDistanceField& f,
                                         const std::vector<Vec2>& points);

}  // namespace obstakl
