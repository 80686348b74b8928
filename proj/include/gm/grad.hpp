#pragma once

#include <cstdint>

#include "gm/baselines.hpp"
#include "gm/core.hpp"

namespace gm {

// Elementary operations over n x n matrices (stored as length-n^2 vectors).
// Scalars c0..c2 are recorded constants; aux holds an argmax index.
enum class OpKind : std::uint8_t {
  kInputU,      // out = u (the unary parameter vector)
  kConst,       // out = recorded constant, no gradient
  kAddConst,    // out = in0 + c0
  kRowNorm,     // out = in0 row-normalized
  kColNorm,     // out = in0 column-normalized
  kMatVecAddU,  // out = P in0 + u,        in1 = u
  kMatVecMulU,  // out = P in0 + u .* in0, in1 = u
  kComboLog,    // out = c0 in0 + c1 log(max(in1, c2)); clamp passes zero grad
  kExpShift,     // out = exp(c0 in0 - c1); the shift c1 is detached
  kExpRowShift,  // out = exp(c0 in0 - m_i), m_i = row max of c0 in0, detached
  kL2Norm,      // out = in0 / ||in0||_2, norm recorded in c0
  kL1Norm,      // out = in0 / sum(in0), sum recorded in c0
  kDivMax,      // out = in0 / in0[aux], aux = argmax recorded
  kScale,       // out = c0 in0
  kAxpby,       // out = c0 in0 + c1 in1
};

struct TapeOp {
  OpKind kind;
  int in0 = -1;
  int in1 = -1;
  int out = -1;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  int aux = -1;
};

struct AffinityGrad {
  Vec du;  // length n^2
  Vec dP;  // parallel to aff.entries
};

// Recorded forward solve. Holds every intermediate value, so backward is a
// single reverse sweep, linear in tape length. The affinity must outlive
// the tape.
struct Tape {
  const AffinityDecomposition* aff = nullptr;
  int n = 0;
  std::vector<Vec> values;
  std::vector<TapeOp> ops;
  int output = -1;
  bool fixed_depth = true;  // false if any stage stopped early

  const Vec& out() const { return values[output]; }

  // Gradients of sum(dLdz .* z_out) w.r.t. u and every stored P weight.
  // Throws if the tape was recorded with early stopping.
  AffinityGrad backward(const Vec& dLdz) const;
};

// Which unrolled solver to record. iters is the solver depth T (the GAGM
// depth comes from its beta schedule instead). Sinkhorn depths come from the
// matching config: solver.sinkhorn_iters for DPGM, baseline.sinkhorn_iters
// for RRWM and GAGM, always run to full fixed depth.
struct UnrollSpec {
  Method method = Method::Dpgm;  // Dpgm, Sm, Rrwm or Gagm; Ipfp is not differentiable
  int iters = 5;
  SolverParams solver;      // lambda, beta (+schedule), epsilon_log, sinkhorn_iters
  BaselineConfig baseline;  // rrwm_*, gagm_* parameters, sinkhorn_iters
};

// Record one fixed-depth forward solve. Mirrors the plain solvers exactly:
// with early stopping disabled there (tol = 0, sinkhorn_tol < 0) the plain
// and taped iterates are bit-identical.
Tape taped_forward(const AffinityDecomposition& aff, const UnrollSpec& spec);

// Scalar losses on the solver output z.
struct LossSpec {
  enum class Kind { WeightedSum, CrossEntropy };
  Kind kind = Kind::WeightedSum;
  Vec r;                   // WeightedSum: L = sum r .* z
  std::vector<int> truth;  // CrossEntropy: truth[i] = column of row i, -1 = masked row
  double clamp = 1e-7;     // CrossEntropy: z clamped to [clamp, 1 - clamp]

  // Returns L and writes dL/dz (zero where the clamp was active).
  double eval(const Vec& z, int n, Vec& dLdz) const;
};

// Central finite differences against the tape gradient on >= min_coords
// randomly sampled coordinates of u and P. Returns the worst relative error
// with the denominator floored at 1e-8.
double finite_diff_check(const AffinityDecomposition& aff, const UnrollSpec& spec,
                         const LossSpec& loss, double h, int min_coords = 24,
                         std::uint64_t seed = 0);

}  // namespace gm
