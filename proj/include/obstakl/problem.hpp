#pragma once

#include <functional>
#include <memory>

#include "obstakl/geometry.hpp"
#include "obstakl/mesh.hpp"

namespace obstakl {

using ScalarField = std::function<double(const Vec2&)>;

// Elliptic obstacle problem on a triangle mesh:
//   -div(a grad u) >= f,   u >= g,   complementarity in between,
// with u equal to boundary_value on the non-periodic boundary.
struct ObstacleProblem {
  std::shared_ptr<const TriMesh> mesh;
  ScalarField diffusion;  // a > 0
  ScalarField load;       // f
  ScalarField obstacle;   // g
  ScalarField boundary_value = [](const Vec2&) { return 0.0; };
};

}  // namespace obstakl
