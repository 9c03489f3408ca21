#include "obstakl/quadrature.hpp"

#include <string>

#include "obstakl/errors.hpp"

namespace obstakl {

namespace {

QuadratureRule centroid_rule() {
  return {1, {Vec2(1.0 / 3.0, 1.0 / 3.0)}, {0.5}};
}

QuadratureRule three_point() {
  // Midpoint-family rule, exact to degree 2.
  const double a = 1.0 / 6.0, b = 2.0 / 3.0;
  return {2,
          {Vec2(a, a), Vec2(b, a), Vec2(a, b)},
          {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0}};
}

void add_symmetric3(QuadratureRule& r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  r.points.insert(r.points.end(), {Vec2(a, a), Vec2(b, a), Vec2(a, b)});
  r.weights.insert(r.weights.end(), {w, w, w});
}

void add_symmetric6(QuadratureRule& r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  r.points.insert(r.points.end(), {Vec2(b, c), Vec2(c, a), Vec2(a, b),
                                   Vec2(c, b), Vec2(a, c), Vec2(b, a)});
  r.weights.insert(r.weights.end(), 6, w);
}

QuadratureRule six_point() {
  // Two symmetric orbits, exact to degree 4 (the classical degree-3
  // four-point rule has a negative weight and is skipped).
  QuadratureRule r{4, {}, {}};
  add_symmetric3(r, 0.445948490915965, 0.111690794839005);
  add_symmetric3(r, 0.091576213509771, 0.054975871827661);
  return r;
}

QuadratureRule seven_point() {
  QuadratureRule r{5, {}, {}};
  r.points.push_back(Vec2(1.0 / 3.0, 1.0 / 3.0));
  r.weights.push_back(9.0 / 80.0);
  add_symmetric3(r, 0.470142064105115, 0.066197076394253);
  add_symmetric3(r, 0.101286507323456, 0.062969590272414);
  return r;
}

QuadratureRule twelve_point() {
  QuadratureRule r{6, {}, {}};
  add_symmetric3(r, 0.063089014491502, 0.025422453185104);
  add_symmetric3(r, 0.249286745170910, 0.058393137863190);
  add_symmetric6(r, 0.310352451033785, 0.636502499121399, 0.041425537809187);
  return r;
}

}  // namespace

const QuadratureRule& triangle_rule(int degree) {
  static const QuadratureRule r1 = centroid_rule();
  static const QuadratureRule r2 = three_point();
  static const QuadratureRule r4 = six_point();
  static const QuadratureRule r5 = seven_point();
  static const QuadratureRule r6 = twelve_point();
  if (degree <= 1) return r1;
  if (degree == 2) return r2;
  if (degree <= 4) return r4;
  if (degree == 5) return r5;
  if (degree == 6) return r6;
  throw InvalidInputError("no triangle quadrature rule of degree " +
                          std::to_string(degree));
}

const EdgeRule& edge_rule() {
  static const EdgeRule r = [] {
    // 4-point Gauss-Legendre mapped from [-1,1] to [0,1].
    const double x1 = 0.339981043584856, x2 = 0.861136311594053;
    const double w1 = 0.652145154862546, w2 = 0.347854845137454;
    EdgeRule e;
    e.points = {0.5 - 0.5 * x2, 0.5 - 0.5 * x1, 0.5 + 0.5 * x1,
                0.5 + 0.5 * x2};
    e.weights = {0.5 * w2, 0.5 * w1, 0.5 * w1, 0.5 * w2};
    return e;
  }();
  return r;
}

}  // namespace obstakl
