#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gm/dpgm.hpp"
#include "gm/grad.hpp"
#include "oracles.hpp"

using namespace gm;

namespace {

Vec random_weights(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vec r(m);
  for (double& v : r) v = d(rng);
  return r;
}

}  // namespace

TEST_CASE("central differences are trusted on a hand-differentiated function") {
  // f(u, w) = r . (u + P z0) + (sum u)^2 / 2 is quadratic, so the central
  // difference is exact up to rounding; this calibrates the probe itself.
  const AffinityDecomposition base = oracle::random_affinity(3, {3});
  const MatchingState z0 = oracle::random_doubly_stochastic(3, 4);
  const Vec r = random_weights(base.u.size(), 5);
  const double h = 1e-4;

  auto f = [&](const AffinityDecomposition& a) {
    Vec pz = a.matvec(z0.z);
    double s = 0.0, su = 0.0;
    for (std::size_t k = 0; k < pz.size(); ++k) {
      s += r[k] * (a.u[k] + pz[k]);
      su += a.u[k];
    }
    return s + 0.5 * su * su;
  };

  AffinityDecomposition pert = base;
  double sum_u = 0.0;
  for (double v : base.u) sum_u += v;

  for (std::size_t c = 0; c < base.u.size(); ++c) {
    const double keep = pert.u[c];
    pert.u[c] = keep + h;
    const double fp = f(pert);
    pert.u[c] = keep - h;
    const double fm = f(pert);
    pert.u[c] = keep;
    const double fd = (fp - fm) / (2.0 * h);
    const double an = r[c] + sum_u;
    CHECK(std::abs(fd - an) <= 1e-10 * (1.0 + std::abs(an)));
  }
  for (std::size_t e = 0; e < base.entries.size(); ++e) {
    const PairEntry& pe = base.entries[e];
    const double keep = pert.entries[e].w;
    pert.entries[e].w = keep + h;
    const double fp = f(pert);
    pert.entries[e].w = keep - h;
    const double fm = f(pert);
    pert.entries[e].w = keep;
    const double fd = (fp - fm) / (2.0 * h);
    const std::size_t p = static_cast<std::size_t>(pe.g1_a) * 3 + pe.g2_a;
    const std::size_t q = static_cast<std::size_t>(pe.g1_b) * 3 + pe.g2_b;
    const double an = r[p] * z0.z[q] + r[q] * z0.z[p];
    CHECK(std::abs(fd - an) <= 1e-10 * (1.0 + std::abs(an)));
  }
}

TEST_CASE("one recorded step matches explicit 2x2 jacobians") {
  // n = 2, P = 0, u = 0, one iteration, one balance sweep. Every stage has a
  // small closed-form Jacobian at this point; compose them by hand.
  AffinityDecomposition aff;
  aff.n = 2;
  aff.u.assign(4, 0.0);

  UnrollSpec spec;
  spec.method = Method::Dpgm;
  spec.iters = 1;
  spec.solver.sinkhorn_iters = 1;

  const Tape tape = taped_forward(aff, spec);
  const Vec R = {0.3, -0.1, 0.7, 0.2};
  const AffinityGrad g = tape.backward(R);

  // Forward at u = 0: exponents all equal, so the exp stage emits all ones
  // and the balanced output is uniform 0.5.
  for (double v : tape.out()) CHECK(v == 0.5);

  const double c1 = 1.0 / (1.0 + 1.0);  // beta/(1 + lambda beta) at defaults
  // Stage Jacobians at this point (4x4, row-major over cells):
  //   exp:  diag(c1 * e) with e = 1, shift detached
  //   row:  d(x/r)_ij/dx_ik = delta_jk/r - x_ij/r^2 with x = 1, r = 2
  //   col:  delta_ik - 0.5 at the uniform point (column sums 1)
  auto idx = [](int i, int j) { return i * 2 + j; };
  double Jrow[4][4] = {};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        Jrow[idx(i, j)][idx(i, k)] = (j == k ? 0.5 : 0.0) - 0.25;
  double Jcol[4][4] = {};
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        Jcol[idx(i, j)][idx(k, j)] = (i == k ? 1.0 : 0.0) - 0.5;

  // dL/du = (Jcol Jrow c1 I)^T R
  Vec hand(4, 0.0);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) hand[c] += R[a] * Jcol[a][b] * Jrow[b][c] * c1;
  for (int k = 0; k < 4; ++k) CHECK(std::abs(g.du[k] - hand[k]) <= 1e-12);
  CHECK(g.dP.empty());
}

TEST_CASE("taped iterates mirror the plain solvers") {
  const AffinityDecomposition aff = oracle::random_affinity(6, {4});

  SUBCASE("proximal solver, bit for bit") {
    SolverParams sp;
    sp.max_iters = 4;
    sp.tol = 0.0;
    sp.sinkhorn_iters = 8;
    sp.sinkhorn_tol = -1.0;  // full depth, matching the fixed-depth tape
    UnrollSpec spec;
    spec.method = Method::Dpgm;
    spec.iters = 4;
    spec.solver = sp;
    const Tape tape = taped_forward(aff, spec);
    const DpgmResult plain = dpgm_solve(aff, sp);
    REQUIRE(plain.trace.iters_run == 4);
    for (std::size_t k = 0; k < tape.out().size(); ++k)
      CHECK(tape.out()[k] == plain.z_final.z[k]);
  }

  SUBCASE("graduated assignment, bit for bit") {
    BaselineConfig bc;
    bc.gagm_beta0 = 0.5;
    bc.gagm_growth = 2.0;
    bc.gagm_beta_max = 8.0;
    bc.sinkhorn_iters = 6;
    bc.sinkhorn_tol = -1.0;
    UnrollSpec spec;
    spec.method = Method::Gagm;
    spec.iters = 5;  // the full anneal: 0.5 * 2^k <= 8
    spec.baseline = bc;
    const Tape tape = taped_forward(aff, spec);
    const BaselineResult plain = gagm(aff, bc);
    REQUIRE(plain.iters == 5);
    for (std::size_t k = 0; k < tape.out().size(); ++k)
      CHECK(tape.out()[k] == plain.state.z[k]);
  }

  SUBCASE("power iteration, up to its final renormalization") {
    BaselineConfig bc;
    bc.max_iters = 5;
    bc.tol = 0.0;
    UnrollSpec spec;
    spec.method = Method::Sm;
    spec.iters = 5;
    spec.baseline = bc;
    const Tape tape = taped_forward(aff, spec);
    const BaselineResult plain = spectral_match(aff, bc);
    REQUIRE(plain.iters == 5);
    CHECK(oracle::max_abs_diff(tape.out(), plain.state.z) <= 1e-13);
  }

  SUBCASE("random walk, up to the detached exponent shift") {
    BaselineConfig bc;
    bc.max_iters = 4;
    bc.tol = 0.0;
    bc.sinkhorn_iters = 8;
    bc.sinkhorn_tol = -1.0;
    UnrollSpec spec;
    spec.method = Method::Rrwm;
    spec.iters = 4;
    spec.baseline = bc;
    const Tape tape = taped_forward(aff, spec);
    const BaselineResult plain = rrwm(aff, bc);
    REQUIRE(plain.iters == 4);
    CHECK(oracle::max_abs_diff(tape.out(), plain.state.z) <= 1e-11);
  }
}

TEST_CASE("tape gradients agree with finite differences for every method") {
  const AffinityDecomposition aff = oracle::random_affinity(9, {4});
  LossSpec loss;
  loss.r = random_weights(aff.u.size(), 10);

  UnrollSpec spec;
  spec.iters = 5;
  for (Method m : {Method::Dpgm, Method::Sm, Method::Rrwm, Method::Gagm}) {
    spec.method = m;
    const double err = finite_diff_check(aff, spec, loss, 1e-5);
    INFO("method ", method_name(m), " worst rel err ", err);
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("a deep unroll still passes a relaxed finite-difference bound") {
  const AffinityDecomposition aff = oracle::random_affinity(14, {4});
  LossSpec loss;
  loss.r = random_weights(aff.u.size(), 15);
  UnrollSpec spec;
  spec.method = Method::Dpgm;
  spec.iters = 50;
  CHECK(finite_diff_check(aff, spec, loss, 1e-5) <= 1e-3);
}

TEST_CASE("backward is linear in the upstream gradient") {
  const AffinityDecomposition aff = oracle::random_affinity(20, {4});
  UnrollSpec spec;
  spec.method = Method::Dpgm;
  spec.iters = 3;
  const Tape tape = taped_forward(aff, spec);

  const Vec d1 = random_weights(16, 1);
  const Vec d2 = random_weights(16, 2);
  const AffinityGrad g1 = tape.backward(d1);
  const AffinityGrad g2 = tape.backward(d2);

  // Scaling by a power of two commutes with every rounding step: exact.
  Vec d_scaled = d1;
  for (double& v : d_scaled) v *= 2.0;
  const AffinityGrad gs = tape.backward(d_scaled);
  for (std::size_t k = 0; k < gs.du.size(); ++k) CHECK(gs.du[k] == 2.0 * g1.du[k]);
  for (std::size_t k = 0; k < gs.dP.size(); ++k) CHECK(gs.dP[k] == 2.0 * g1.dP[k]);

  Vec combo(16);
  for (std::size_t k = 0; k < 16; ++k) combo[k] = 0.375 * d1[k] + 1.25 * d2[k];
  const AffinityGrad gc = tape.backward(combo);
  for (std::size_t k = 0; k < gc.du.size(); ++k) {
    const double want = 0.375 * g1.du[k] + 1.25 * g2.du[k];
    CHECK(std::abs(gc.du[k] - want) <= 1e-12 * (1.0 + std::abs(want)));
  }
  for (std::size_t k = 0; k < gc.dP.size(); ++k) {
    const double want = 0.375 * g1.dP[k] + 1.25 * g2.dP[k];
    CHECK(std::abs(gc.dP[k] - want) <= 1e-12 * (1.0 + std::abs(want)));
  }

  const AffinityGrad gz = tape.backward(Vec(16, 0.0));
  for (double v : gz.du) CHECK(v == 0.0);
  for (double v : gz.dP) CHECK(v == 0.0);
}

TEST_CASE("both orientations of the same cell pair receive equal gradients") {
  AffinityDecomposition aff;
  aff.n = 3;
  aff.u = random_weights(9, 30);
  for (double& v : aff.u) v = std::abs(v) + 0.1;
  aff.entries.push_back({0, 1, 0, 1, 0.6});
  aff.entries.push_back({1, 0, 1, 0, 0.6});  // same unordered cell pair

  UnrollSpec spec;
  spec.method = Method::Dpgm;
  spec.iters = 3;
  const Tape tape = taped_forward(aff, spec);
  const AffinityGrad g = tape.backward(random_weights(9, 31));
  CHECK(g.dP[0] == g.dP[1]);
}

TEST_CASE("tapes reject invalid requests") {
  const AffinityDecomposition aff = oracle::random_affinity(1, {3});
  UnrollSpec spec;

  spec.method = Method::Ipfp;
  CHECK_THROWS_AS(taped_forward(aff, spec), std::invalid_argument);

  spec.method = Method::Dpgm;
  spec.iters = 0;
  CHECK_THROWS_AS(taped_forward(aff, spec), std::invalid_argument);

  spec.iters = 1;
  AffinityDecomposition empty;
  CHECK_THROWS_AS(taped_forward(empty, spec), std::invalid_argument);

  const Tape tape = taped_forward(aff, spec);
  CHECK_THROWS_AS(tape.backward(Vec(4, 0.0)), std::invalid_argument);

  Tape stopped = taped_forward(aff, spec);
  stopped.fixed_depth = false;
  CHECK_THROWS_AS(stopped.backward(Vec(9, 0.0)), std::runtime_error);
  CHECK_THROWS_AS(Tape{}.backward(Vec{}), std::runtime_error);
}

TEST_CASE("weighted-sum loss reports its own weights as gradient") {
  LossSpec loss;
  loss.r = {1.0, -2.0, 0.5, 0.0};
  Vec dLdz;
  const double L = loss.eval({0.1, 0.2, 0.3, 0.4}, 2, dLdz);
  CHECK(std::abs(L - (0.1 - 0.4 + 0.15)) <= 1e-15);
  CHECK(dLdz == loss.r);

  LossSpec bad;
  bad.r = {1.0};
  CHECK_THROWS_AS(bad.eval({0.1, 0.2, 0.3, 0.4}, 2, dLdz), std::invalid_argument);
}

TEST_CASE("cross-entropy closed forms and clamp behavior") {
  LossSpec ce;
  ce.kind = LossSpec::Kind::CrossEntropy;
  Vec dLdz;

  ce.truth = {0, 1};
  const double L_uniform = ce.eval(MatchingState::uniform(2).z, 2, dLdz);
  CHECK(std::abs(L_uniform - 4.0 * std::log(2.0)) <= 1e-12);

  ce.truth = {1, 2, 0};
  const double L_hot = ce.eval(MatchingState::from_permutation({1, 2, 0}).z, 3, dLdz);
  CHECK(std::abs(L_hot - (-9.0 * std::log(1.0 - 1e-7))) <= 1e-15);
  // Every entry is outside the open clamp interval: gradient fully masked.
  for (double v : dLdz) CHECK(v == 0.0);

  ce.truth = {-1, 1};
  const double L_masked = ce.eval(MatchingState::uniform(2).z, 2, dLdz);
  CHECK(std::abs(L_masked - 2.0 * std::log(2.0)) <= 1e-12);
  CHECK(dLdz[0] == 0.0);
  CHECK(dLdz[1] == 0.0);
  CHECK(dLdz[2] != 0.0);

  ce.truth = {0, 1};
  Vec z = {0.5e-7, 1.0 - 0.5e-7, 0.3, 0.7};
  ce.eval(z, 2, dLdz);
  CHECK(dLdz[0] == 0.0);  // below the clamp: zero slope
  CHECK(dLdz[1] == 0.0);  // above the clamp
  CHECK(dLdz[2] != 0.0);

  ce.truth = {0};
  CHECK_THROWS_AS(ce.eval(Vec(4, 0.25), 2, dLdz), std::invalid_argument);
}

TEST_CASE("finite difference step size is bounded") {
  const AffinityDecomposition aff = oracle::random_affinity(2, {3});
  LossSpec loss;
  loss.r = random_weights(9, 3);
  UnrollSpec spec;
  CHECK_THROWS_AS(finite_diff_check(aff, spec, loss, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(finite_diff_check(aff, spec, loss, 1e-2), std::invalid_argument);
}
