#pragma once

#include "gm/core.hpp"
#include "gm/sinkhorn.hpp"

namespace gm {

struct DpgmResult {
  MatchingState z_final;
  SolverTrace trace;
  PermutationMatching matching;
  double lipschitz_bound = 0.0;  // |E1|*|E2| over the pairwise support, diagnostic
  double beta_hint = 0.0;        // 2/L with alpha treated as 1; inf when P empty
};

// z0 = Sinkhorn of mat(u) when u has any mass, else uniform 1/n.
MatchingState init_state(const AffinityDecomposition& aff, const SolverParams& cfg);

// One step: z~ = exp[(b/(1+l b))(u + P z) + (1/(1+l b)) log z], then Sinkhorn.
// The exponent matrix is shifted by its max before exp; Sinkhorn's scale
// invariance makes the shift a mathematical no-op.
MatchingState proximal_step(const MatchingState& z_t, const AffinityDecomposition& aff,
                            const SolverParams& cfg);

// The same update written as the message-passing loop (lambda = 1 form with
// coefficients b/(b+1) and 1/(b+1)). Agrees bit-for-bit with proximal_step
// when cfg.lambda == 1.
MatchingState message_passing_step(const MatchingState& z_t, const AffinityDecomposition& aff,
                                   const SolverParams& cfg);

DpgmResult dpgm_solve(const AffinityDecomposition& aff, const SolverParams& cfg);

struct ConvergenceReport {
  std::vector<int> horizons;  // 1, 2, 4, ..., iters_run
  Vec running_mean;           // mean of delta_sq over the first h iterations
  double slope = 0.0;         // least-squares slope of log(mean) vs log(h)
  double c0 = 0.0;            // objective[0] - min objective over the trace
  bool monotone = false;      // running mean non-increasing over all T
};

ConvergenceReport convergence_report(const SolverTrace& trace);

}  // namespace gm
