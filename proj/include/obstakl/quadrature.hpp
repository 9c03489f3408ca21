#pragma once

#include <vector>

#include "obstakl/geometry.hpp"

namespace obstakl {

// Quadrature on the reference triangle (0,0)-(1,0)-(0,1); weights are
// positive and sum to the reference area 1/2.
struct QuadratureRule {
  int degree = 0;  // highest total polynomial degree integrated exactly
  std::vector<Vec2> points;
  std::vector<double> weights;
};

// Smallest positive-weight symmetric rule exact to at least `degree`
// (supported up to 6; requests above throw InvalidInputError).
const QuadratureRule& triangle_rule(int degree);

// Gauss-Legendre rule on [0,1]; weights sum to 1.
struct EdgeRule {
  std::vector<double> points;
  std::vector<double> weights;
};
const EdgeRule& edge_rule();  // 4 points, exact to degree 7

}  // namespace obstakl
