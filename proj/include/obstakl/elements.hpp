#pragma once

#include <array>

#include "obstakl/geometry.hpp"

namespace obstakl {

// Reference-element bases on the unit triangle with barycentric
// coordinates l1 = 1-x-y, l2 = x, l3 = y.
//
// Displacement space: quadratic Lagrange enriched with the cubic bubble
// 27*l1*l2*l3 (unit value at the centroid).  Local ordering: three vertex
// functions, three edge functions on edges (0,1), (1,2), (2,0), bubble.
struct P2Bubble {
  static constexpr int ndof = 7;

  static std::array<double, ndof> values(const Vec2& r) {
    const double l1 = 1.0 - r.x() - r.y(), l2 = r.x(), l3 = r.y();
    return {l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1),
            4 * l1 * l2,       4 * l2 * l3,       4 * l3 * l1,
            27 * l1 * l2 * l3};
  }

  static std::array<Vec2, ndof> gradients(const Vec2& r) {
    const double l1 = 1.0 - r.x() - r.y(), l2 = r.x(), l3 = r.y();
    const Vec2 g1(-1, -1), g2(1, 0), g3(0, 1);
    return {g1 * (4 * l1 - 1),
            g2 * (4 * l2 - 1),
            g3 * (4 * l3 - 1),
            4 * (g1 * l2 + g2 * l1),
            4 * (g2 * l3 + g3 * l2),
            4 * (g3 * l1 + g1 * l3),
            27 * (g1 * l2 * l3 + g2 * l1 * l3 + g3 * l1 * l2)};
  }
};

// Quadratic geometry basis: the first six P2Bubble functions.
struct P2Geometry {
  static constexpr int ndof = 6;

  static std::array<double, ndof> values(const Vec2& r) {
    const auto v = P2Bubble::values(r);
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }

  static std::array<Vec2, ndof> gradients(const Vec2& r) {
    const auto g = P2Bubble::gradients(r);
    return {g[0], g[1], g[2], g[3], g[4], g[5]};
  }
};

// Monomials of degree <= 3 in reference coordinates, for discontinuous
// local projections: 1, x, y, x^2, xy, y^2, x^3, x^2 y, x y^2, y^3.
struct CubicMonomials {
  static constexpr int ndof = 10;

  static std::array<double, ndof> values(const Vec2& r) {
    const double x = r.x(), y = r.y();
    return {1,     x,     y,         x * x,     x * y,
            y * y, x * x * x, x * x * y, x * y * y, y * y * y};
  }

  static std::array<Vec2, ndof> gradients(const Vec2& r) {
    const double x = r.x(), y = r.y();
    return {Vec2(0, 0),
            Vec2(1, 0),
            Vec2(0, 1),
            Vec2(2 * x, 0),
            Vec2(y, x),
            Vec2(0, 2 * y),
            Vec2(3 * x * x, 0),
            Vec2(2 * x * y, x * x),
            Vec2(y * y, 2 * x * y),
            Vec2(0, 3 * y * y)};
  }
};

}  // namespace obstakl
