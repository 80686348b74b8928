#include "gm/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gm {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

struct Circle {
  double ox, oy, r2;
  bool ok;
};

Circle circumcircle(const Point2& a, const Point2& b, const Point2& c) {
  const double d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
  const double span = std::max({std::abs(a[0]), std::abs(a[1]), std::abs(b[0]),
                                std::abs(b[1]), std::abs(c[0]), std::abs(c[1]), 1.0});
  if (std::abs(d) < 1e-12 * span * span) return {0, 0, 0, false};  // collinear triple
  const double a2 = a[0] * a[0] + a[1] * a[1];
  const double b2 = b[0] * b[0] + b[1] * b[1];
  const double c2 = c[0] * c[0] + c[1] * c[1];
  Circle s;
  s.ox = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
  s.oy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
  const double dx = a[0] - s.ox, dy = a[1] - s.oy;
  s.r2 = dx * dx + dy * dy;
  s.ok = true;
  return s;
}

// Strict interior-of-segment crossing; shared endpoints do not count.
bool segments_cross(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double d1 = cross(a, b, c), d2 = cross(a, b, d);
  const double d3 = cross(c, d, a), d4 = cross(c, d, b);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

DelaunayResult delaunay(const std::vector<Point2>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw std::invalid_argument("delaunay: fewer than 3 points");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (points[i][0] == points[j][0] && points[i][1] == points[j][1])
        throw std::invalid_argument("delaunay: duplicate point");

  bool all_collinear = true;
  for (int k = 2; k < n && all_collinear; ++k)
    if (std::abs(cross(points[0], points[1], points[k])) > 1e-12) all_collinear = false;
  if (all_collinear) {
    // Path graph along the line, ordered by the dominant axis.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const double dx = std::abs(points[1][0] - points[0][0]);
    const double dy = std::abs(points[1][1] - points[0][1]);
    const int axis = dx >= dy ? 0 : 1;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (points[a][axis] != points[b][axis]) return points[a][axis] < points[b][axis];
      return points[a][1 - axis] < points[b][1 - axis];
    });
    DelaunayResult res;
    res.collinear_fallback = true;
    for (int k = 0; k + 1 < n; ++k) res.edges.push_back(make_edge(order[k], order[k + 1]));
    std::sort(res.edges.begin(), res.edges.end());
    return res;
  }

  // (a, b) is Delaunay iff some triangle (a, b, c) has an empty circumcircle.
  // Points exactly on the circle (within tolerance) do not block it.
  std::vector<Edge> candidates;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      bool keep = false;
      for (int c = 0; c < n && !keep; ++c) {
        if (c == a || c == b) continue;
        const Circle s = circumcircle(points[a], points[b], points[c]);
        if (!s.ok) continue;
        const double tol = 1e-9 * std::max(s.r2, 1.0);
        bool empty = true;
        for (int p = 0; p < n; ++p) {
          if (p == a || p == b || p == c) continue;
          const double dx = points[p][0] - s.ox, dy = points[p][1] - s.oy;
          if (dx * dx + dy * dy < s.r2 - tol) {
            empty = false;
            break;
          }
        }
        keep = empty;
      }
      if (keep) candidates.push_back({a, b});
    }
  }

  // Cocircular ties admit both crossing diagonals; the one incident to the
  // lowest point index survives.
  std::vector<bool> dead(candidates.size(), false);
  for (std::size_t x = 0; x < candidates.size(); ++x) {
    if (dead[x]) continue;
    for (std::size_t y = x + 1; y < candidates.size(); ++y) {
      if (dead[y]) continue;
      const Edge& e = candidates[x];
      const Edge& f = candidates[y];
      if (e.a == f.a || e.a == f.b || e.b == f.a || e.b == f.b) continue;
      if (segments_cross(points[e.a], points[e.b], points[f.a], points[f.b])) {
        // candidates are sorted by construction, so x has the lower index
        dead[y] = true;
      }
    }
  }
  DelaunayResult res;
  for (std::size_t x = 0; x < candidates.size(); ++x)
    if (!dead[x]) res.edges.push_back(candidates[x]);
  return res;
}

}  // namespace gm
