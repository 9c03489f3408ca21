// Independent reference machinery for the tests: a Duffy-transform tensor
// quadrature (exact far beyond the library's degree-6 rules), analytic
// second derivatives of the displacement basis, and frozen reference
// constants computed outside this code base.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "obstakl/elements.hpp"
#include "obstakl/geometry.hpp"
#include "obstakl/mesh.hpp"

namespace oracle {

using obstakl::Vec2;

// u(1/2,1/2) for -Lap u = 1 on (0,1)^2, u = 0 on the boundary; double
// sine series summed in 30-digit arithmetic.
inline constexpr double kPoissonCenter = 0.073671353281513816;

// 2 pi 8 / (180 * 0.4), twist rate of the reference torsion setup.
inline constexpr double kTwistRate = 0.6981317007977318;

struct QuadPoint {
  Vec2 ref;  // reference-triangle coordinates
  double w;  // weight on the reference triangle (sums to 1/2)
};

// Gauss-Legendre nodes/weights on [0,1], n = 8 (exact to degree 15).
inline const std::array<std::pair<double, double>, 8>& gauss01() {
  static const std::array<std::pair<double, double>, 8> table = {{
      {0.019855071751231884, 0.050614268145188130},
      {0.101666761293186630, 0.111190517226687235},
      {0.237233795041835507, 0.156853322938943644},
      {0.408282678752175098, 0.181341891689180991},
      {0.591717321247824902, 0.181341891689180991},
      {0.762766204958164493, 0.156853322938943644},
      {0.898333238706813370, 0.111190517226687235},
      {0.980144928248768116, 0.050614268145188130},
  }};
  return table;
}

// Duffy-transform tensor rule on the reference triangle
// {(x,y): x,y >= 0, x+y <= 1}: x = s, y = t(1-s), jacobian (1-s).
// With 8x8 Gauss points this integrates all polynomials of total degree
// <= 14 exactly -- far above the degree-8 requirement.
inline std::vector<QuadPoint> duffy_rule() {
  std::vector<QuadPoint> pts;
  pts.reserve(64);
  for (const auto& [s, ws] : gauss01())
    for (const auto& [t, wt] : gauss01())
      pts.push_back({Vec2(s, t * (1.0 - s)), ws * wt * (1.0 - s)});
  return pts;
}

// Reference Hessians of the 7 displacement shape functions (P2 plus the
// 27 l1 l2 l3 bubble) at barycentric-derived reference point (x,y).
// Order matches the basis: vertices (0,0),(1,0),(0,1), edges
// (0,1),(1,2),(2,0), bubble.  Returns (dxx, dxy, dyy) per function.
inline std::array<Eigen::Vector3d, 7> ref_hessians(const Vec2& p) {
  const double x = p.x(), y = p.y();
  std::array<Eigen::Vector3d, 7> H;
  // l1 = 1-x-y, l2 = x, l3 = y
  H[0] = Eigen::Vector3d(4, 4, 4);    // l1(2l1-1)
  H[1] = Eigen::Vector3d(4, 0, 0);    // l2(2l2-1)
  H[2] = Eigen::Vector3d(0, 0, 4);    // l3(2l3-1)
  H[3] = Eigen::Vector3d(-8, -4, 0);  // 4 l1 l2
  H[4] = Eigen::Vector3d(0, 4, 0);    // 4 l2 l3
  H[5] = Eigen::Vector3d(0, -4, -8);  // 4 l3 l1
  // bubble = 27 x y (1-x-y)
  H[6] = Eigen::Vector3d(-54.0 * y, 27.0 * (1.0 - 2.0 * x - 2.0 * y),
                         -54.0 * x);
  return H;
}

// Minimum interior angle over all triangles, in degrees.
inline double min_angle_deg(const obstakl::TriMesh& mesh) {
  double worst = 180.0;
  for (const auto& t : mesh.triangles) {
    const Vec2 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]],
               c = mesh.vertices[t[2]];
    const Vec2 e[3] = {b - a, c - b, a - c};
    for (int k = 0; k < 3; ++k) {
      const Vec2 u = -e[(k + 2) % 3], v = e[k];
      const double ang =
          std::acos(u.dot(v) / (u.norm() * v.norm())) * 180.0 / M_PI;
      worst = std::min(worst, ang);
    }
  }
  return worst;
}

// Triangle quality 2 r_in / r_circ, minimum over the mesh.
inline double min_quality(const obstakl::TriMesh& mesh) {
  double worst = 1.0;
  for (const auto& t : mesh.triangles) {
    const Vec2 p0 = mesh.vertices[t[0]], p1 = mesh.vertices[t[1]],
               p2 = mesh.vertices[t[2]];
    const double a = (p1 - p2).norm(), b = (p2 - p0).norm(),
                 c = (p0 - p1).norm();
    const double s = 0.5 * (a + b + c);
    const double area = 0.5 * std::abs((p1 - p0).x() * (p2 - p0).y() -
                                       (p1 - p0).y() * (p2 - p0).x());
    const double r_in = area / s;
    const double r_circ = a * b * c / (4.0 * area);
    worst = std::min(worst, 2.0 * r_in / r_circ);
  }
  return worst;
}

}  // namespace oracle
