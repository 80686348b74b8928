#pragma once

#include "gm/core.hpp"

namespace gm {

struct SinkhornConfig {
  int max_iters = 1000;
  double tol = 1e-9;        // on max |row sum - 1| after a full pass
  double epsilon = 1e-30;   // added to every entry before normalizing
  bool fixed_iters = false; // run exactly max_iters (differentiable unrolling)
};

struct SinkhornResult {
  MatchingState state;
  double max_deviation = 0.0;  // max |marginal - 1| at exit
  int iters = 0;               // full row+column passes performed
  bool converged = false;
};

// Alternating row-first/column normalization toward the doubly stochastic
// projection. Entries get epsilon added up front, so zero rows and columns
// normalize to uniform instead of failing.
SinkhornResult sinkhorn_normalize(const MatchingState& m, const SinkhornConfig& cfg);

// Largest |row or column sum - 1| of an n x n matrix.
double marginal_deviation(const Vec& z, int n);

}  // namespace gm
