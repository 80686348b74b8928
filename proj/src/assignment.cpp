#include "gm/assignment.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace gm {

// Potential-based Hungarian method on the negated weights (minimization form).
// Indices are 1-based internally; p[j] = row matched to column j.
std::vector<int> max_weight_assignment(const Vec& w, int n) {
  assert(static_cast<int>(w.size()) == n * n);
  if (n == 0) return {};
  for (double v : w)
    if (!std::isfinite(v)) throw std::invalid_argument("assignment: non-finite weight");

  const double kInf = std::numeric_limits<double>::infinity();
  auto cost = [&](int i, int j) { return -w[(i - 1) * n + (j - 1)]; };

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    minv.assign(n + 1, kInf);
    used.assign(n + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double assignment_value(const Vec& w, int n, const std::vector<int>& assignment) {
  assert(static_cast<int>(assignment.size()) == n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += w[i * n + assignment[i]];
  return s;
}

}  // namespace gm
