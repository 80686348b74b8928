#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gm {

using Vec = std::vector<double>;

// File open/read/write/parse failures. Schema and configuration problems
// throw std::invalid_argument instead.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unordered node pair, normalized so a < b.
struct Edge {
  int a = 0;
  int b = 0;
};

inline Edge make_edge(int i, int j) { return i < j ? Edge{i, j} : Edge{j, i}; }

inline bool operator==(const Edge& x, const Edge& y) { return x.a == y.a && x.b == y.b; }
inline bool operator<(const Edge& x, const Edge& y) {
  return x.a != y.a ? x.a < y.a : x.b < y.b;
}

// One graph: per-node feature vectors plus an undirected edge list.
// All feature vectors share the same dimension; no self-loops, no duplicates.
struct GraphInstance {
  std::vector<Vec> node_features;
  std::vector<Edge> edges;

  int n() const { return static_cast<int>(node_features.size()); }
  int feature_dim() const { return node_features.empty() ? 0 : static_cast<int>(node_features[0].size()); }
  void validate() const;
};

// One stored pairwise term: M[(g1_a,g2_a),(g1_b,g2_b)] = M[(g1_b,g2_b),(g1_a,g2_a)] = w.
// g1_a != g1_b and g2_a != g2_b, so the diagonal is never touched.
// An undirected edge pair ((i,i') in E1, (j,j') in E2) contributes two such
// records, one per orientation, covering the 4 symmetric matrix cells.
struct PairEntry {
  int g1_a = 0;
  int g1_b = 0;
  int g2_a = 0;
  int g2_b = 0;
  double w = 0.0;
};

// Affinity M = diag(u) + P, u indexed row-major (i,j) -> i*n+j, P stored sparsely.
struct AffinityDecomposition {
  int n = 0;
  Vec u;                           // length n*n, nonnegative
  std::vector<PairEntry> entries;  // sparse symmetric P

  int idx(int i, int j) const { return i * n + j; }
  void validate() const;        // shape + finite nonnegative values
  void validate_shape() const;  // shape only; values may be any finite real

  // out = P z, message passing over stored entries: O(|entries|).
  void matvec(const Vec& z, Vec& out) const;
  Vec matvec(const Vec& z) const;

  // z^T P z
  double quad(const Vec& z) const;

  // Distinct undirected support edges in each graph (Lipschitz diagnostics).
  std::size_t support_edges_g1() const;
  std::size_t support_edges_g2() const;
};

// Emit both orientations of an undirected edge pair with one weight
// (the 4 symmetric index combinations of M).
void add_edge_pair(AffinityDecomposition& aff, Edge e1, Edge e2, double w);

// Relaxed assignment z, an n x n nonnegative matrix viewed as a length-n^2 vector.
struct MatchingState {
  int n = 0;
  Vec z;

  double& at(int i, int j) { return z[i * n + j]; }
  double at(int i, int j) const { return z[i * n + j]; }

  static MatchingState uniform(int n);
  static MatchingState from_permutation(const std::vector<int>& assignment);
};

// Hard assignment: assignment[i] = node of G2 matched to node i of G1.
struct PermutationMatching {
  std::vector<int> assignment;

  int n() const { return static_cast<int>(assignment.size()); }
  void validate() const;  // bijection on [0, n)
};

struct SolverParams {
  double lambda = 1.0;                // entropy weight, > 0
  double beta = 1.0;                  // proximal weight, > 0
  std::vector<double> beta_schedule;  // optional; empty = constant beta
  int max_iters = 200;
  double tol = 1e-8;                  // stop on ||z_{t+1} - z_t||_inf
  int sinkhorn_iters = 30;
  double sinkhorn_tol = 1e-9;
  double epsilon_log = 1e-30;         // clamp floor for log arguments

  double beta_at(int t) const {
    if (beta_schedule.empty()) return beta;
    auto i = static_cast<std::size_t>(t);
    return i < beta_schedule.size() ? beta_schedule[i] : beta_schedule.back();
  }
  void validate() const;
};

// Per-iteration solver evidence. objective[t] = L(z_t) before step t,
// delta_sq[t] = ||z_{t+1} - z_t||_2^2; both have length iters_run.
struct SolverTrace {
  Vec objective;
  Vec delta_sq;
  int iters_run = 0;
  bool converged = false;
};

// x^T M x = u^T x + x^T P x for the 0/1 vector of the permutation.
double qap_objective(const AffinityDecomposition& aff, const PermutationMatching& x);

// L(z) = -u^T z - z^T P z + lambda * z^T log z, with 0*log 0 := 0.
double relaxed_objective(const AffinityDecomposition& aff, const MatchingState& z,
                         double lambda);

struct PaddedPair {
  GraphInstance g1;
  GraphInstance g2;
  std::vector<bool> row_aux;  // auxiliary padded nodes of g1
  std::vector<bool> col_aux;  // auxiliary padded nodes of g2
};

// Grow the smaller graph with isolated zero-feature nodes until sizes match.
PaddedPair pad_to_equal_size(const GraphInstance& g1, const GraphInstance& g2);

// Maximum-weight bipartite assignment on z, ties broken toward the
// lexicographically smallest assignment vector.
PermutationMatching discretize(const MatchingState& z);

struct BruteForceResult {
  PermutationMatching matching;
  double value = 0.0;
};

// Exhaustive maximizer of the QAP objective; guarded at n <= 10.
BruteForceResult brute_force_qap(const AffinityDecomposition& aff);

// Dense n^2 x n^2 composition diag(u) + P, guarded at n <= 80. Row-major.
Vec compose_dense(const AffinityDecomposition& aff);

}  // namespace gm
