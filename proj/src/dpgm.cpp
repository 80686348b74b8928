#include "gm/dpgm.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace gm {

namespace {

// exp(y - max y) into out; throws if the exponents themselves are non-finite.
void exp_shifted(const Vec& y, Vec& out) {
  double shift = -std::numeric_limits<double>::infinity();
  for (double v : y) shift = std::max(shift, v);
  if (!std::isfinite(shift))
    throw std::runtime_error(
        "proximal step: non-finite exponent; increase lambda or decrease beta");
  out.resize(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) out[k] = std::exp(y[k] - shift);
}

SinkhornConfig step_sinkhorn(const SolverParams& cfg) {
  SinkhornConfig sc;
  sc.max_iters = cfg.sinkhorn_iters;
  sc.tol = cfg.sinkhorn_tol;
  sc.fixed_iters = false;
  return sc;
}

MatchingState step_with_beta(const MatchingState& z_t, const AffinityDecomposition& aff,
                             const SolverParams& cfg, double beta) {
  const double c1 = beta / (1.0 + cfg.lambda * beta);
  const double c2 = 1.0 / (1.0 + cfg.lambda * beta);
  Vec a = aff.matvec(z_t.z);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += aff.u[k];
  Vec y(a.size());
  for (std::size_t k = 0; k < a.size(); ++k)
    y[k] = c1 * a[k] + c2 * std::log(std::max(z_t.z[k], cfg.epsilon_log));
  MatchingState zt;
  zt.n = z_t.n;
  exp_shifted(y, zt.z);
  return sinkhorn_normalize(zt, step_sinkhorn(cfg)).state;
}

}  // namespace

MatchingState init_state(const AffinityDecomposition& aff, const SolverParams& cfg) {
  aff.validate();
  cfg.validate();
  bool has_unary = false;
  for (double v : aff.u)
    if (v != 0.0) {
      has_unary = true;
      break;
    }
  if (!has_unary) return MatchingState::uniform(aff.n);
  MatchingState m;
  m.n = aff.n;
  m.z = aff.u;
  SinkhornConfig sc = step_sinkhorn(cfg);
  sc.max_iters = std::max(cfg.sinkhorn_iters, 1000);  // init runs standalone
  return sinkhorn_normalize(m, sc).state;
}

MatchingState proximal_step(const MatchingState& z_t, const AffinityDecomposition& aff,
                            const SolverParams& cfg) {
  if (z_t.n != aff.n) throw std::invalid_argument("proximal_step: size mismatch");
  return step_with_beta(z_t, aff, cfg, cfg.beta_at(0));
}

// Algorithm-structured form: message passing, local update, combination with
// the log of the previous iterate, nonlinear transform, bi-stochastic
// projection. Written against the beta/(beta+1), 1/(beta+1) coefficients.
MatchingState message_passing_step(const MatchingState& z_t, const AffinityDecomposition& aff,
                                   const SolverParams& cfg) {
  if (z_t.n != aff.n) throw std::invalid_argument("message_passing_step: size mismatch");
  const double beta = cfg.beta_at(0);
  Vec x = aff.matvec(z_t.z);                       // message passing
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += aff.u[k];  // local update
  const double c1 = beta / (beta + 1.0);
  const double c2 = 1.0 / (beta + 1.0);
  Vec y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    y[k] = c1 * x[k] + c2 * std::log(std::max(z_t.z[k], cfg.epsilon_log));
  MatchingState zt;                                // nonlinear transform
  zt.n = z_t.n;
  exp_shifted(y, zt.z);
  return sinkhorn_normalize(zt, step_sinkhorn(cfg)).state;  // bi-stochastic op
}

DpgmResult dpgm_solve(const AffinityDecomposition& aff, const SolverParams& cfg) {
  DpgmResult res;
  MatchingState z = init_state(aff, cfg);
  res.trace.objective.reserve(cfg.max_iters);
  res.trace.delta_sq.reserve(cfg.max_iters);

  for (int t = 0; t < cfg.max_iters; ++t) {
    res.trace.objective.push_back(relaxed_objective(aff, z, cfg.lambda));
    MatchingState z_next = step_with_beta(z, aff, cfg, cfg.beta_at(t));
    double dsq = 0.0, dinf = 0.0;
    for (std::size_t k = 0; k < z.z.size(); ++k) {
      const double d = z_next.z[k] - z.z[k];
      dsq += d * d;
      dinf = std::max(dinf, std::abs(d));
    }
    res.trace.delta_sq.push_back(dsq);
    res.trace.iters_run = t + 1;
    z = std::move(z_next);
    if (dinf < cfg.tol) {
      res.trace.converged = true;
      break;
    }
  }

  res.z_final = std::move(z);
  res.matching = discretize(res.z_final);
  const double l_bound = static_cast<double>(aff.support_edges_g1()) *
                         static_cast<double>(aff.support_edges_g2());
  res.lipschitz_bound = l_bound;
  res.beta_hint = l_bound > 0.0 ? 2.0 / l_bound
                                : std::numeric_limits<double>::infinity();
  return res;
}

ConvergenceReport convergence_report(const SolverTrace& trace) {
  if (trace.iters_run < 1) throw std::invalid_argument("convergence_report: empty trace");
  assert(static_cast<int>(trace.delta_sq.size()) == trace.iters_run);
  ConvergenceReport rep;

  double run_sum = 0.0, prev_mean = std::numeric_limits<double>::infinity();
  rep.monotone = true;
  int next_pow = 1;
  for (int t = 1; t <= trace.iters_run; ++t) {
    run_sum += trace.delta_sq[t - 1];
    const double mean = run_sum / t;
    if (mean > prev_mean * (1.0 + 1e-12)) rep.monotone = false;
    prev_mean = mean;
    if (t == next_pow || t == trace.iters_run) {
      rep.horizons.push_back(t);
      rep.running_mean.push_back(mean);
      while (next_pow <= t) next_pow *= 2;
    }
  }

  // Least squares on log-log over horizons with positive mean.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t k = 0; k < rep.horizons.size(); ++k) {
    if (rep.running_mean[k] <= 0.0) continue;
    const double x = std::log(static_cast<double>(rep.horizons[k]));
    const double y = std::log(rep.running_mean[k]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++m;
  }
  const double denom = m * sxx - sx * sx;
  rep.slope = (m >= 2 && denom > 0.0) ? (m * sxy - sx * sy) / denom : 0.0;

  double min_obj = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trace.iters_run; ++t) min_obj = std::min(min_obj, trace.objective[t]);
  rep.c0 = trace.objective.empty() ? 0.0 : trace.objective[0] - min_obj;
  return rep;
}

}  // namespace gm
