#include "gm/baselines.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "gm/assignment.hpp"

namespace gm {

const char* method_name(Method m) {
  switch (m) {
    case Method::Dpgm: return "dpgm";
    case Method::Sm: return "sm";
    case Method::Rrwm: return "rrwm";
    case Method::Gagm: return "gagm";
    case Method::Ipfp: return "ipfp";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "dpgm") return Method::Dpgm;
  if (name == "sm") return Method::Sm;
  if (name == "rrwm") return Method::Rrwm;
  if (name == "gagm") return Method::Gagm;
  if (name == "ipfp") return Method::Ipfp;
  throw std::invalid_argument("unknown method: " + name);
}

void BaselineConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("baseline: max_iters must be >= 1");
  if (!(tol >= 0.0)) throw std::invalid_argument("baseline: tol must be >= 0");
  if (!(rrwm_alpha >= 0.0 && rrwm_alpha <= 1.0))
    throw std::invalid_argument("baseline: rrwm_alpha in [0,1]");
  if (!(rrwm_beta > 0.0)) throw std::invalid_argument("baseline: rrwm_beta must be > 0");
  if (!(gagm_beta0 > 0.0) || !(gagm_growth > 1.0) || !(gagm_beta_max >= gagm_beta0))
    throw std::invalid_argument("baseline: bad gagm schedule");
  if (sinkhorn_iters < 1) throw std::invalid_argument("baseline: sinkhorn_iters must be >= 1");
}

namespace {

SinkhornConfig baseline_sinkhorn(const BaselineConfig& cfg) {
  SinkhornConfig sc;
  sc.max_iters = cfg.sinkhorn_iters;
  sc.tol = cfg.sinkhorn_tol;
  sc.epsilon = cfg.epsilon;
  return sc;
}

// y = M x = u .* x + P x
void full_matvec(const AffinityDecomposition& aff, const Vec& x, Vec& y) {
  aff.matvec(x, y);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += aff.u[k] * x[k];
}

}  // namespace

BaselineResult spectral_match(const AffinityDecomposition& aff, const BaselineConfig& cfg) {
  aff.validate();
  cfg.validate();
  const int n = aff.n;
  BaselineResult res;
  res.state = MatchingState::uniform(n);
  if (n == 0) {
    res.converged = true;
    return res;
  }
  // Start at the normalized uniform vector; M nonnegative keeps iterates
  // nonnegative, so the Perron eigenvector is reachable.
  Vec x(static_cast<std::size_t>(n) * n, 1.0 / n), y;
  for (int it = 0; it < cfg.max_iters; ++it) {
    full_matvec(aff, x, y);
    double norm = 0.0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm);
    res.iters = it + 1;
    if (norm == 0.0) {  // M annihilates x: degenerate instance, keep x
      res.converged = true;
      break;
    }
    double diff = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      y[k] /= norm;
      diff = std::max(diff, std::abs(y[k] - x[k]));
    }
    x.swap(y);
    if (diff < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  double norm = 0.0;
  for (double v : x) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& v : x) v /= norm;
  res.state.z = std::move(x);
  res.matching = discretize(res.state);
  return res;
}

BaselineResult rrwm(const AffinityDecomposition& aff, const BaselineConfig& cfg) {
  aff.validate();
  cfg.validate();
  const int n = aff.n;
  BaselineResult res;
  res.state = MatchingState::uniform(n);
  if (n == 0) {
    res.converged = true;
    return res;
  }
  const SinkhornConfig sc = baseline_sinkhorn(cfg);
  Vec x(static_cast<std::size_t>(n) * n, 1.0 / (static_cast<double>(n) * n)), y;
  for (int it = 0; it < cfg.max_iters; ++it) {
    res.iters = it + 1;
    full_matvec(aff, x, y);
    double s = 0.0;
    for (double v : y) s += v;
    if (s <= 0.0) {  // walk died: zero affinity row, keep current x
      res.converged = true;
      break;
    }
    for (double& v : y) v /= s;
    double mx = 0.0;
    for (double v : y) mx = std::max(mx, v);
    MatchingState q;
    q.n = n;
    q.z.resize(y.size());
    for (std::size_t k = 0; k < y.size(); ++k)
      q.z[k] = std::exp(cfg.rrwm_beta * (y[k] / mx));
    q = sinkhorn_normalize(q, sc).state;  // sums to n overall
    const double inv_n = 1.0 / n;
    double diff = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double next = (1.0 - cfg.rrwm_alpha) * y[k] + cfg.rrwm_alpha * (q.z[k] * inv_n);
      diff = std::max(diff, std::abs(next - x[k]));
      x[k] = next;
    }
    if (diff < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.state.z = std::move(x);
  res.matching = discretize(res.state);
  return res;
}

BaselineResult gagm(const AffinityDecomposition& aff, const BaselineConfig& cfg) {
  aff.validate();
  cfg.validate();
  const int n = aff.n;
  BaselineResult res;
  res.state = MatchingState::uniform(n);
  if (n == 0) {
    res.converged = true;
    return res;
  }
  const SinkhornConfig sc = baseline_sinkhorn(cfg);
  MatchingState z = MatchingState::uniform(n);
  Vec a;
  for (double beta = cfg.gagm_beta0; beta <= cfg.gagm_beta_max; beta *= cfg.gagm_growth) {
    aff.matvec(z.z, a);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = beta * (a[k] + aff.u[k]);
    MatchingState q;
    q.n = n;
    q.z.resize(a.size());
    // Per-row shifts: a row scaling is washed out by the next row
    // normalization, and every row keeps its peak at exp(0) even when the
    // rows drift far apart late in the anneal.
    for (int i = 0; i < n; ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) m = std::max(m, a[static_cast<std::size_t>(i) * n + j]);
      for (int j = 0; j < n; ++j) {
        const std::size_t k = static_cast<std::size_t>(i) * n + j;
        q.z[k] = std::exp(a[k] - m);
      }
    }
    z = sinkhorn_normalize(q, sc).state;
    res.iters += 1;
  }
  res.converged = true;  // schedule ran to completion
  res.state = std::move(z);
  res.matching = discretize(res.state);
  return res;
}

BaselineResult ipfp(const AffinityDecomposition& aff, const BaselineConfig& cfg,
                    const MatchingState& z0) {
  aff.validate();
  cfg.validate();
  if (z0.n != aff.n) throw std::invalid_argument("ipfp: size mismatch");
  const int n = aff.n;
  BaselineResult res;
  if (n == 0) {
    res.converged = true;
    res.state = z0;
    return res;
  }
  for (double v : z0.z)
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("ipfp: z0 must be finite and nonnegative");

  Vec z = z0.z, g, d(z.size()), pd;
  double fcur = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) fcur += aff.u[k] * z[k];
  fcur += aff.quad(z);
  res.objective_trace.push_back(fcur);

  // Seed the incumbent with z0's own rounding so an optimal start is a
  // fixed point: later candidates replace it only on strict improvement.
  const PermutationMatching p0 = discretize(z0);
  double best_val = qap_objective(aff, p0);
  std::vector<int> best_assign = p0.assignment;

  for (int it = 0; it < cfg.max_iters; ++it) {
    res.iters = it + 1;
    aff.matvec(z, g);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = aff.u[k] + 2.0 * g[k];
    MatchingState score;
    score.n = n;
    score.z = g;
    const PermutationMatching b = discretize(score);
    {
      const double candidate = qap_objective(aff, b);
      if (candidate > best_val) {
        best_val = candidate;
        best_assign = b.assignment;
      }
    }
    for (std::size_t k = 0; k < z.size(); ++k) d[k] = -z[k];
    for (int i = 0; i < n; ++i) d[i * n + b.assignment[i]] += 1.0;
    double gd = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) gd += g[k] * d[k];
    if (gd <= cfg.tol) {  // no ascent direction: discrete fixed point
      res.converged = true;
      break;
    }
    aff.matvec(d, pd);
    double dpd = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) dpd += d[k] * pd[k];
    // f(z + t d) = f(z) + t g.d + t^2 d^T P d; maximize over t in [0, 1].
    double t = 1.0;
    if (dpd < 0.0) t = std::min(1.0, -gd / (2.0 * dpd));
    for (std::size_t k = 0; k < z.size(); ++k) z[k] += t * d[k];
    // Track f incrementally: t (gd + t dpd) has both factors positive, so
    // the recorded trace is non-decreasing even in floating point.
    fcur += t * (gd + t * dpd);
    res.objective_trace.push_back(fcur);
  }

  res.matching = PermutationMatching{best_assign};
  res.state = MatchingState::from_permutation(best_assign);
  return res;
}

}  // namespace gm
