#include "gm/sinkhorn.hpp"

#include <cassert>
#include <cmath>

namespace gm {

double marginal_deviation(const Vec& z, int n) {
  assert(static_cast<int>(z.size()) == n * n);
  double dev = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = 0.0;
    for (int j = 0; j < n; ++j) r += z[i * n + j];
    dev = std::max(dev, std::abs(r - 1.0));
  }
  for (int j = 0; j < n; ++j) {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += z[i * n + j];
    dev = std::max(dev, std::abs(c - 1.0));
  }
  return dev;
}

SinkhornResult sinkhorn_normalize(const MatchingState& m, const SinkhornConfig& cfg) {
  const int n = m.n;
  if (static_cast<int>(m.z.size()) != n * n)
    throw std::invalid_argument("sinkhorn: state size != n^2");
  if (cfg.max_iters < 1) throw std::invalid_argument("sinkhorn: max_iters must be >= 1");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be > 0");
  for (double v : m.z) {
    if (!std::isfinite(v)) throw std::invalid_argument("sinkhorn: non-finite entry");
    if (v < 0.0) throw std::invalid_argument("sinkhorn: negative entry");
  }

  SinkhornResult res;
  res.state.n = n;
  res.state.z = m.z;
  Vec& z = res.state.z;
  if (n == 0) {
    res.converged = true;
    return res;
  }
  for (double& v : z) v += cfg.epsilon;

  for (int it = 0; it < cfg.max_iters; ++it) {
    for (int i = 0; i < n; ++i) {
      double r = 0.0;
      for (int j = 0; j < n; ++j) r += z[i * n + j];
      for (int j = 0; j < n; ++j) z[i * n + j] /= r;
    }
    for (int j = 0; j < n; ++j) {
      double c = 0.0;
      for (int i = 0; i < n; ++i) c += z[i * n + j];
      for (int i = 0; i < n; ++i) z[i * n + j] /= c;
    }
    res.iters = it + 1;
    if (!cfg.fixed_iters) {
      // Columns sum to 1 exactly after the column pass; only rows can drift.
      double dev = 0.0;
      for (int i = 0; i < n; ++i) {
        double r = 0.0;
        for (int j = 0; j < n; ++j) r += z[i * n + j];
        dev = std::max(dev, std::abs(r - 1.0));
      }
      if (dev <= cfg.tol) {
        res.converged = true;
        res.max_deviation = dev;
        return res;
      }
    }
  }
  res.max_deviation = marginal_deviation(z, n);
  res.converged = res.max_deviation <= cfg.tol;
  return res;
}

}  // namespace gm
