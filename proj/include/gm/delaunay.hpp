#pragma once

#include <array>

#include "gm/core.hpp"

namespace gm {

using Point2 = std::array<double, 2>;

struct DelaunayResult {
  std::vector<Edge> edges;
  bool collinear_fallback = false;  // all points collinear: path graph returned
};

// Delaunay edges of a planar point set by the empty-circumcircle definition:
// (a, b) is kept iff some third point c forms a triangle whose circumcircle
// contains no other point. Naive O(n^4); intended for n <= 60.
// Cocircular ties: when two crossing diagonals both qualify, the one incident
// to the lowest point index wins. Fewer than 3 points is an error; a fully
// collinear set degrades to the path graph along the line.
DelaunayResult delaunay(const std::vector<Point2>& points);

}  // namespace gm
