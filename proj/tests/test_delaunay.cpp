#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "gm/delaunay.hpp"

using namespace gm;

namespace {

double orient(const Point2& o, const Point2& a, const Point2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

bool proper_cross(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double d1 = orient(a, b, c), d2 = orient(a, b, d);
  const double d3 = orient(c, d, a), d4 = orient(c, d, b);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

// Reference predicate in extended precision: p strictly inside the
// circumcircle of (a, b, c), via the lifted determinant.
bool strictly_inside(const Point2& a, const Point2& b, const Point2& c, const Point2& p) {
  const long double ax = a[0] - p[0], ay = a[1] - p[1];
  const long double bx = b[0] - p[0], by = b[1] - p[1];
  const long double cx = c[0] - p[0], cy = c[1] - p[1];
  const long double det = (ax * ax + ay * ay) * (bx * cy - by * cx) -
                          (bx * bx + by * by) * (ax * cy - ay * cx) +
                          (cx * cx + cy * cy) * (ax * by - ay * bx);
  const long double o = static_cast<long double>(orient(a, b, c));
  return o > 0 ? det > 0 : det < 0;
}

// Empty-circumcircle edges from the definition, computed independently.
std::vector<Edge> reference_delaunay(const std::vector<Point2>& pts) {
  const int n = static_cast<int>(pts.size());
  std::vector<Edge> edges;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      bool keep = false;
      for (int c = 0; c < n && !keep; ++c) {
        if (c == a || c == b) continue;
        if (std::abs(orient(pts[a], pts[b], pts[c])) < 1e-9) continue;
        bool empty = true;
        for (int p = 0; p < n && empty; ++p) {
          if (p == a || p == b || p == c) continue;
          if (strictly_inside(pts[a], pts[b], pts[c], pts[p])) empty = false;
        }
        keep = empty;
      }
      if (keep) edges.push_back(make_edge(a, b));
    }
  return edges;
}

std::vector<int> hull_indices(const std::vector<Point2>& pts) {
  // Monotone chain keeping collinear boundary points, so consecutive pairs
  // are elementary boundary edges (present in every triangulation).
  std::vector<int> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (pts[i][0] != pts[j][0]) return pts[i][0] < pts[j][0];
    return pts[i][1] < pts[j][1];
  });
  std::vector<int> h;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t base = h.size();
    for (int idx : order) {
      while (h.size() >= base + 2 &&
             orient(pts[h[h.size() - 2]], pts[h.back()], pts[idx]) < 0)
        h.pop_back();
      h.push_back(idx);
    }
    h.pop_back();
    std::reverse(order.begin(), order.end());
  }
  return h;
}

bool connected(int n, const std::vector<Edge>& edges) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int comps = n;
  for (const Edge& e : edges) {
    const int ra = find(e.a), rb = find(e.b);
    if (ra != rb) {
      parent[ra] = rb;
      --comps;
    }
  }
  return comps == 1;
}

}  // namespace

TEST_CASE("a triangle keeps all three edges") {
  const DelaunayResult r = delaunay({{0.0, 0.0}, {4.0, 0.0}, {1.0, 3.0}});
  CHECK_FALSE(r.collinear_fallback);
  REQUIRE(r.edges.size() == 3);
  CHECK(r.edges[0] == make_edge(0, 1));
  CHECK(r.edges[1] == make_edge(0, 2));
  CHECK(r.edges[2] == make_edge(1, 2));
}

TEST_CASE("the unit square resolves its cocircular tie to one diagonal") {
  const std::vector<Point2> square = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  const DelaunayResult r = delaunay(square);
  const std::set<Edge> got(r.edges.begin(), r.edges.end());
  const std::set<Edge> want = {make_edge(0, 1), make_edge(0, 2), make_edge(0, 3),
                               make_edge(1, 2), make_edge(2, 3)};
  CHECK(got == want);

  // The same square far from the origin triangulates identically.
  std::vector<Point2> moved = square;
  for (auto& p : moved) {
    p[0] += 1000.0;
    p[1] += 2000.0;
  }
  const DelaunayResult rm = delaunay(moved);
  CHECK(std::set<Edge>(rm.edges.begin(), rm.edges.end()) == want);
}

TEST_CASE("random point sets match the extended-precision reference") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(0.0, 100.0);
    std::vector<Point2> pts(20);
    for (auto& p : pts) p = {coord(rng), coord(rng)};

    const DelaunayResult r = delaunay(pts);
    CHECK_FALSE(r.collinear_fallback);

    std::vector<Edge> want = reference_delaunay(pts);
    std::vector<Edge> got = r.edges;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    INFO("seed ", seed);
    CHECK(got == want);

    // Structural invariants: planar, connected, hull contained.
    for (std::size_t x = 0; x < got.size(); ++x)
      for (std::size_t y = x + 1; y < got.size(); ++y) {
        const Edge& e = got[x];
        const Edge& f = got[y];
        if (e.a == f.a || e.a == f.b || e.b == f.a || e.b == f.b) continue;
        CHECK_FALSE(proper_cross(pts[e.a], pts[e.b], pts[f.a], pts[f.b]));
      }
    CHECK(connected(20, got));
    const std::set<Edge> edge_set(got.begin(), got.end());
    const std::vector<int> hull = hull_indices(pts);
    for (std::size_t k = 0; k < hull.size(); ++k) {
      const Edge he = make_edge(hull[k], hull[(k + 1) % hull.size()]);
      CHECK(edge_set.count(he) == 1);
    }
  }
}

TEST_CASE("collinear inputs degrade to the path along the line") {
  SUBCASE("shuffled points on the x axis") {
    const DelaunayResult r = delaunay({{0.0, 0.0}, {2.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}});
    CHECK(r.collinear_fallback);
    const std::vector<Edge> want = {make_edge(0, 2), make_edge(1, 2), make_edge(1, 3)};
    CHECK(r.edges == want);
  }

  SUBCASE("vertical line of three") {
    const DelaunayResult r = delaunay({{0.0, 0.0}, {0.0, 2.0}, {0.0, 1.0}});
    CHECK(r.collinear_fallback);
    const std::vector<Edge> want = {make_edge(0, 2), make_edge(1, 2)};
    CHECK(r.edges == want);
  }
}

TEST_CASE("degenerate inputs are rejected") {
  CHECK_THROWS_AS(delaunay({{0.0, 0.0}, {1.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(delaunay({{0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("a three by three grid of cocircular squares stays planar") {
  std::vector<Point2> grid;
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) grid.push_back({static_cast<double>(x), static_cast<double>(y)});
  const DelaunayResult r = delaunay(grid);
  CHECK_FALSE(r.collinear_fallback);

  // Full triangulation of a 9-point set with 8 hull vertices: 3n - 3 - h = 16.
  CHECK(r.edges.size() == 16);
  for (std::size_t x = 0; x < r.edges.size(); ++x)
    for (std::size_t y = x + 1; y < r.edges.size(); ++y) {
      const Edge& e = r.edges[x];
      const Edge& f = r.edges[y];
      if (e.a == f.a || e.a == f.b || e.b == f.a || e.b == f.b) continue;
      CHECK_FALSE(proper_cross(grid[e.a], grid[e.b], grid[f.a], grid[f.b]));
    }
  CHECK(connected(9, r.edges));
  const std::set<Edge> edge_set(r.edges.begin(), r.edges.end());
  const std::vector<int> hull = hull_indices(grid);
  CHECK(hull.size() == 8);
  for (std::size_t k = 0; k < hull.size(); ++k)
    CHECK(edge_set.count(make_edge(hull[k], hull[(k + 1) % hull.size()])) == 1);
}
