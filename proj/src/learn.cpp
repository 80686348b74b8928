#include "gm/learn.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "gm/dpgm.hpp"
#include "gm/harness.hpp"

namespace gm {

WeightMatrix WeightMatrix::identity(int d, double init_scale) {
  WeightMatrix W;
  W.d = d;
  W.w.assign(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) W.w[i * d + i] = init_scale;
  return W;
}

void WeightMatrix::validate() const {
  if (d < 1) throw std::invalid_argument("weight matrix: d must be >= 1");
  if (static_cast<int>(w.size()) != d * d)
    throw std::invalid_argument("weight matrix: size != d^2");
  for (double v : w)
    if (!std::isfinite(v)) throw std::invalid_argument("weight matrix: non-finite entry");
}

namespace {

void check_pair(const GraphInstance& g1, const GraphInstance& g2, int d) {
  if (g1.n() != g2.n()) throw std::invalid_argument("node affinity: unequal graph sizes");
  if (g1.feature_dim() != d || g2.feature_dim() != d)
    throw std::invalid_argument("node affinity: feature dimension mismatch");
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

Vec node_affinity(const GraphInstance& g1, const GraphInstance& g2, const WeightMatrix& W) {
  W.validate();
  check_pair(g1, g2, W.d);
  const int n = g1.n(), d = W.d;
  Vec u(static_cast<std::size_t>(n) * n);
  Vec wv(d);
  for (int j = 0; j < n; ++j) {
    const Vec& v2 = g2.node_features[j];
    for (int r = 0; r < d; ++r) {
      double acc = 0.0;
      for (int c = 0; c < d; ++c) acc += W.w[r * d + c] * v2[c];
      wv[r] = acc;
    }
    for (int i = 0; i < n; ++i)
      u[i * n + j] = std::exp(std::min(dot(g1.node_features[i], wv), kAffinityExpClip));
  }
  return u;
}

void node_affinity_backward(const GraphInstance& g1, const GraphInstance& g2,
                            const WeightMatrix& W, const Vec& u, const Vec& du,
                            Vec& dW) {
  check_pair(g1, g2, W.d);
  const int n = g1.n(), d = W.d;
  if (u.size() != du.size() || static_cast<int>(u.size()) != n * n)
    throw std::invalid_argument("node affinity backward: size mismatch");
  if (static_cast<int>(dW.size()) != d * d) dW.assign(static_cast<std::size_t>(d) * d, 0.0);
  const double clip_value = std::exp(kAffinityExpClip);
  for (int i = 0; i < n; ++i) {
    const Vec& v1 = g1.node_features[i];
    for (int j = 0; j < n; ++j) {
      const double uij = u[i * n + j];
      const double g = du[i * n + j] * uij;
      if (g == 0.0 || uij >= clip_value) continue;  // clipped: zero derivative
      const Vec& v2 = g2.node_features[j];
      for (int r = 0; r < d; ++r) {
        const double gr = g * v1[r];
        for (int c = 0; c < d; ++c) dW[r * d + c] += gr * v2[c];
      }
    }
  }
}

AffinityDecomposition edge_affinity(const GraphInstance& g1, const GraphInstance& g2,
                                    EdgeAffinityStats* stats) {
  g1.validate();
  g2.validate();
  if (g1.feature_dim() != g2.feature_dim())
    throw std::invalid_argument("edge affinity: feature dimension mismatch");
  const int n = std::max(g1.n(), g2.n());
  AffinityDecomposition aff;
  aff.n = n;
  aff.u.assign(static_cast<std::size_t>(n) * n, 0.0);
  EdgeAffinityStats st;
  st.max_raw_exponent = -std::numeric_limits<double>::infinity();

  // Orientation matters: (i->j, i'->j') uses v1_i.v2_j * v1_i'.v2_j', so the
  // two orientations of an edge pair carry their own weights.
  for (const Edge& e1 : g1.edges) {
    for (const Edge& e2 : g2.edges) {
      const double fwd = dot(g1.node_features[e1.a], g2.node_features[e2.a]) *
                         dot(g1.node_features[e1.b], g2.node_features[e2.b]);
      const double rev = dot(g1.node_features[e1.a], g2.node_features[e2.b]) *
                         dot(g1.node_features[e1.b], g2.node_features[e2.a]);
      for (const auto& [raw, flip] : {std::pair{fwd, false}, std::pair{rev, true}}) {
        st.max_raw_exponent = std::max(st.max_raw_exponent, raw);
        if (raw > kAffinityExpClip) ++st.clipped;
        const double w = std::exp(std::min(raw, kAffinityExpClip));
        aff.entries.push_back(flip ? PairEntry{e1.a, e1.b, e2.b, e2.a, w}
                                   : PairEntry{e1.a, e1.b, e2.a, e2.b, w});
      }
    }
  }
  if (g1.edges.empty() || g2.edges.empty()) st.max_raw_exponent = 0.0;
  if (stats) *stats = st;
  return aff;
}

double cross_entropy_loss(const MatchingState& z, const std::vector<int>& truth) {
  if (static_cast<int>(truth.size()) != z.n)
    throw std::invalid_argument("cross entropy: truth size mismatch");
  LossSpec spec;
  spec.kind = LossSpec::Kind::CrossEntropy;
  spec.truth = truth;
  Vec unused;
  return spec.eval(z.z, z.n, unused);
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("train: learning_rate must be >= 0");
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  solver.validate();
}

double evaluate_accuracy(const std::vector<KeypointPairSample>& samples,
                         const WeightMatrix& W, const SolverParams& solver) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) {
    AffinityDecomposition aff = edge_affinity(s.g1, s.g2);
    aff.u = node_affinity(s.g1, s.g2, W);
    const DpgmResult res = dpgm_solve(aff, solver);
    const std::vector<bool> mask = s.truth_mask();
    acc += matching_accuracy(res.matching, s.truth, &mask);
  }
  return acc / static_cast<double>(samples.size());
}

TrainResult train(const std::vector<KeypointPairSample>& train_set,
                  const std::vector<KeypointPairSample>& holdout,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty dataset");
  const int d = train_set[0].g1.feature_dim();
  for (const auto& s : train_set) check_pair(s.g1, s.g2, d);
  for (const auto& s : holdout) check_pair(s.g1, s.g2, d);

  // The pairwise terms carry no learnable parameter; cache them per sample.
  std::vector<AffinityDecomposition> cached;
  cached.reserve(train_set.size());
  for (const auto& s : train_set) cached.push_back(edge_affinity(s.g1, s.g2));

  UnrollSpec unroll;
  unroll.method = Method::Dpgm;
  unroll.iters = cfg.solver.max_iters;
  unroll.solver = cfg.solver;

  TrainResult result;
  result.W = WeightMatrix::identity(d, cfg.init_scale);
  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      Vec dW(static_cast<std::size_t>(d) * d, 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const KeypointPairSample& s = train_set[order[k]];
        AffinityDecomposition& aff = cached[order[k]];
        aff.u = node_affinity(s.g1, s.g2, result.W);
        const Tape tape = taped_forward(aff, unroll);
        LossSpec loss;
        loss.kind = LossSpec::Kind::CrossEntropy;
        loss.truth = s.truth;
        Vec dLdz;
        const double L = loss.eval(tape.out(), aff.n, dLdz);
        if (!std::isfinite(L))
          throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                   std::to_string(epoch) + ", sample " +
                                   std::to_string(order[k]));
        loss_sum += L;
        const AffinityGrad g = tape.backward(dLdz);
        node_affinity_backward(s.g1, s.g2, result.W, aff.u, g.du, dW);
      }
      const double scale = cfg.learning_rate / static_cast<double>(stop - start);
      for (std::size_t k = 0; k < result.W.w.size(); ++k)
        result.W.w[k] -= scale * dW[k];
    }
    TrainEpoch pt;
    pt.mean_loss = loss_sum / static_cast<double>(train_set.size());
    pt.holdout_accuracy = evaluate_accuracy(holdout, result.W, cfg.solver);
    result.curve.push_back(pt);
  }
  return result;
}

}  // namespace gm
