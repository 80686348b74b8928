#pragma once

#include "gm/core.hpp"
#include "gm/sinkhorn.hpp"

namespace gm {

enum class Method { Dpgm, Sm, Rrwm, Gagm, Ipfp };

const char* method_name(Method m);
Method method_from_name(const std::string& name);  // throws on unknown name

struct BaselineConfig {
  int max_iters = 300;
  double tol = 1e-8;
  double rrwm_alpha = 0.2;   // jump weight
  double rrwm_beta = 30.0;   // reweighting exponent scale
  double gagm_beta0 = 0.5;
  double gagm_growth = 1.075;
  double gagm_beta_max = 200.0;
  int sinkhorn_iters = 30;
  double sinkhorn_tol = 1e-9;
  double epsilon = 1e-30;
  void validate() const;
};

struct BaselineResult {
  MatchingState state;
  PermutationMatching matching;
  int iters = 0;
  bool converged = false;
  Vec objective_trace;  // IPFP only: u^T z + z^T P z after each outer update
};

// Power iteration to the leading eigenvector of M = diag(u) + P, kept
// nonnegative and unit 2-norm, then discretized.
BaselineResult spectral_match(const AffinityDecomposition& aff, const BaselineConfig& cfg);

// Reweighted random walks: walk step x <- Mx/||Mx||_1, reweighting
// exp(rrwm_beta * x / max x) + Sinkhorn, convex combination with jump
// weight rrwm_alpha.
BaselineResult rrwm(const AffinityDecomposition& aff, const BaselineConfig& cfg);

// Graduated assignment: z <- Sinkhorn(exp(beta * (u + P z))) while beta grows
// geometrically from gagm_beta0 to gagm_beta_max.
BaselineResult gagm(const AffinityDecomposition& aff, const BaselineConfig& cfg);

// Integer projected fixed point from z0: best discrete direction by
// assignment on the gradient u + 2Pz, exact line search on the quadratic,
// monotone in the continuous objective; returns the best discrete point seen.
BaselineResult ipfp(const AffinityDecomposition& aff, const BaselineConfig& cfg,
                    const MatchingState& z0);

}  // namespace gm
