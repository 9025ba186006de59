#pragma once

#include <array>
#include <vector>

#include "plap/geometry.hpp"

namespace plap::detail {

double orient2d(const Vec2& a, const Vec2& b, const Vec2& c);
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

/// Bowyer-Watson triangulation of a point set; triangles are counter-clockwise and
/// index into `points`. Duplicate points are not allowed.
std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& points);

}  // namespace plap::detail
