#pragma once

#include <cstdint>

#include "gm/core.hpp"
#include "gm/data.hpp"
#include "gm/grad.hpp"

namespace gm {

// Exponents inside node/edge affinities are clipped here before exp;
// Sinkhorn scale invariance keeps the distortion mild.
inline constexpr double kAffinityExpClip = 30.0;

struct WeightMatrix {
  int d = 0;
  Vec w;  // row-major d x d

  double& at(int r, int c) { return w[r * d + c]; }
  double at(int r, int c) const { return w[r * d + c]; }
  static WeightMatrix identity(int d, double init_scale = 1.0);
  void validate() const;
};

// u[ij] = exp(min(v1_i^T W v2_j, clip)); strictly positive. Requires equal
// graph sizes and feature dimension d.
Vec node_affinity(const GraphInstance& g1, const GraphInstance& g2, const WeightMatrix& W);

// Accumulates dL/dW += sum_ij du[ij] * u[ij] * v1_i v2_j^T, skipping clipped
// entries (their derivative is zero). u must be the matching forward output.
void node_affinity_backward(const GraphInstance& g1, const GraphInstance& g2,
                            const WeightMatrix& W, const Vec& u, const Vec& du,
                            Vec& dW);

struct EdgeAffinityStats {
  double max_raw_exponent = 0.0;
  int clipped = 0;
};

// Fixed-form pairwise terms: weight exp((v1_i^T v2_j)(v1_i'^T v2_j')) on the
// E1 x E2 support, exponent clipped, u = 0.
AffinityDecomposition edge_affinity(const GraphInstance& g1, const GraphInstance& g2,
                                    EdgeAffinityStats* stats = nullptr);

// -sum [z* log z + (1 - z*) log(1 - z)] over rows with a genuine truth
// entry, z clamped to [1e-7, 1 - 1e-7]. truth[i] = -1 masks row i.
double cross_entropy_loss(const MatchingState& z, const std::vector<int>& truth);

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 50;
  int batch_size = 8;
  // Fixed unroll: solver.max_iters is the tape depth T. Training defaults
  // are shallower than the standalone solver's.
  SolverParams solver = default_train_solver();
  std::uint64_t rng_seed = 0;
  double init_scale = 1.0;  // W starts at identity * init_scale

  static SolverParams default_train_solver() {
    SolverParams p;
    p.max_iters = 30;
    p.sinkhorn_iters = 15;
    return p;
  }
  void validate() const;
};

struct TrainEpoch {
  double mean_loss = 0.0;
  double holdout_accuracy = 0.0;
};

struct TrainResult {
  WeightMatrix W;
  std::vector<TrainEpoch> curve;
};

// Minibatch SGD on W through node_affinity -> fixed edge affinities -> the
// fixed-unroll solver tape -> cross-entropy. Loss going NaN aborts with a
// diagnostic. Samples must share d and have equal-size graphs.
TrainResult train(const std::vector<KeypointPairSample>& train_set,
                  const std::vector<KeypointPairSample>& holdout,
                  const TrainConfig& cfg);

// Holdout-style accuracy of a weight matrix on a sample set (plain solver).
double evaluate_accuracy(const std::vector<KeypointPairSample>& samples,
                         const WeightMatrix& W, const SolverParams& solver);

}  // namespace gm
