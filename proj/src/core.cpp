#include "gm/core.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <set>

#include "gm/assignment.hpp"

namespace gm {

void GraphInstance::validate() const {
  const int nn = n();
  const int d = feature_dim();
  for (const auto& f : node_features)
    if (static_cast<int>(f.size()) != d)
      throw std::invalid_argument("graph: ragged feature vectors");
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges) {
    if (e.a < 0 || e.b < 0 || e.a >= nn || e.b >= nn)
      throw std::invalid_argument("graph: edge endpoint out of range");
    if (e.a == e.b) throw std::invalid_argument("graph: self-loop");
    if (e.a > e.b) throw std::invalid_argument("graph: edge not normalized (a < b)");
    if (!seen.insert({e.a, e.b}).second)
      throw std::invalid_argument("graph: duplicate edge");
  }
}

void AffinityDecomposition::validate_shape() const {
  if (n < 0) throw std::invalid_argument("affinity: negative size");
  if (static_cast<int>(u.size()) != n * n)
    throw std::invalid_argument("affinity: u size != n^2");
  for (double v : u)
    if (!std::isfinite(v)) throw std::invalid_argument("affinity: u must be finite");
  for (const PairEntry& e : entries) {
    if (e.g1_a < 0 || e.g1_a >= n || e.g1_b < 0 || e.g1_b >= n ||
        e.g2_a < 0 || e.g2_a >= n || e.g2_b < 0 || e.g2_b >= n)
      throw std::invalid_argument("affinity: entry index out of range");
    if (e.g1_a == e.g1_b || e.g2_a == e.g2_b)
      throw std::invalid_argument("affinity: entry touches the diagonal");
    if (!std::isfinite(e.w))
      throw std::invalid_argument("affinity: entry weight must be finite");
  }
}

void AffinityDecomposition::validate() const {
  validate_shape();
  for (double v : u)
    if (!(v >= 0.0))
      throw std::invalid_argument("affinity: u must be nonnegative");
  for (const PairEntry& e : entries)
    if (!(e.w >= 0.0))
      throw std::invalid_argument("affinity: entry weight must be nonnegative");
}

void AffinityDecomposition::matvec(const Vec& z, Vec& out) const {
  assert(static_cast<int>(z.size()) == n * n);
  out.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (const PairEntry& e : entries) {
    const int p = e.g1_a * n + e.g2_a;
    const int q = e.g1_b * n + e.g2_b;
    out[p] += e.w * z[q];
    out[q] += e.w * z[p];
  }
}

Vec AffinityDecomposition::matvec(const Vec& z) const {
  Vec out;
  matvec(z, out);
  return out;
}

double AffinityDecomposition::quad(const Vec& z) const {
  assert(static_cast<int>(z.size()) == n * n);
  double s = 0.0;
  for (const PairEntry& e : entries)
    s += 2.0 * e.w * z[e.g1_a * n + e.g2_a] * z[e.g1_b * n + e.g2_b];
  return s;
}

std::size_t AffinityDecomposition::support_edges_g1() const {
  std::set<std::pair<int, int>> s;
  for (const PairEntry& e : entries)
    s.insert({std::min(e.g1_a, e.g1_b), std::max(e.g1_a, e.g1_b)});
  return s.size();
}

std::size_t AffinityDecomposition::support_edges_g2() const {
  std::set<std::pair<int, int>> s;
  for (const PairEntry& e : entries)
    s.insert({std::min(e.g2_a, e.g2_b), std::max(e.g2_a, e.g2_b)});
  return s.size();
}

void add_edge_pair(AffinityDecomposition& aff, Edge e1, Edge e2, double w) {
  aff.entries.push_back({e1.a, e1.b, e2.a, e2.b, w});
  aff.entries.push_back({e1.a, e1.b, e2.b, e2.a, w});
}

MatchingState MatchingState::uniform(int n) {
  MatchingState m;
  m.n = n;
  m.z.assign(static_cast<std::size_t>(n) * n, n > 0 ? 1.0 / n : 0.0);
  return m;
}

MatchingState MatchingState::from_permutation(const std::vector<int>& assignment) {
  PermutationMatching p{assignment};
  p.validate();
  const int n = p.n();
  MatchingState m;
  m.n = n;
  m.z.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) m.z[i * n + assignment[i]] = 1.0;
  return m;
}

void PermutationMatching::validate() const {
  const int nn = n();
  std::vector<bool> hit(nn, false);
  for (int j : assignment) {
    if (j < 0 || j >= nn) throw std::invalid_argument("matching: target out of range");
    if (hit[j]) throw std::invalid_argument("matching: target repeated");
    hit[j] = true;
  }
}

void SolverParams::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("solver: lambda must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("solver: beta must be > 0");
  for (double b : beta_schedule)
    if (!(b > 0.0)) throw std::invalid_argument("solver: scheduled beta must be > 0");
  if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
  if (sinkhorn_iters < 1) throw std::invalid_argument("solver: sinkhorn_iters must be >= 1");
  if (!(tol >= 0.0)) throw std::invalid_argument("solver: tol must be >= 0");
  if (!(epsilon_log > 0.0)) throw std::invalid_argument("solver: epsilon_log must be > 0");
}

double qap_objective(const AffinityDecomposition& aff, const PermutationMatching& x) {
  if (x.n() != aff.n) throw std::invalid_argument("qap_objective: size mismatch");
  double s = 0.0;
  for (int i = 0; i < aff.n; ++i) s += aff.u[aff.idx(i, x.assignment[i])];
  for (const PairEntry& e : aff.entries)
    if (x.assignment[e.g1_a] == e.g2_a && x.assignment[e.g1_b] == e.g2_b)
      s += 2.0 * e.w;
  return s;
}

double relaxed_objective(const AffinityDecomposition& aff, const MatchingState& z,
                         double lambda) {
  if (z.n != aff.n) throw std::invalid_argument("relaxed_objective: size mismatch");
  double lin = 0.0, ent = 0.0;
  for (std::size_t k = 0; k < z.z.size(); ++k) {
    const double v = z.z[k];
    lin += aff.u[k] * v;
    if (v > 0.0) ent += v * std::log(v);
  }
  return -lin - aff.quad(z.z) + lambda * ent;
}

PaddedPair pad_to_equal_size(const GraphInstance& g1, const GraphInstance& g2) {
  PaddedPair p{g1, g2, {}, {}};
  const int n = std::max(g1.n(), g2.n());
  const int d = std::max(g1.feature_dim(), g2.feature_dim());
  auto grow = [&](GraphInstance& g, std::vector<bool>& aux) {
    aux.assign(g.n(), false);
    while (g.n() < n) {
      g.node_features.emplace_back(d, 0.0);
      aux.push_back(true);
    }
  };
  grow(p.g1, p.row_aux);
  grow(p.g2, p.col_aux);
  return p;
}

namespace {

// Optimal assignment value over the submatrix rows x cols of w.
double sub_assignment_value(const Vec& w, int n, const std::vector<int>& rows,
                            const std::vector<int>& cols, std::vector<int>* out) {
  const int m = static_cast<int>(rows.size());
  assert(cols.size() == rows.size());
  if (m == 0) {
    if (out) out->clear();
    return 0.0;
  }
  Vec sub(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) sub[i * m + j] = w[rows[i] * n + cols[j]];
  std::vector<int> a = max_weight_assignment(sub, m);
  double v = assignment_value(sub, m, a);
  if (out) *out = std::move(a);
  return v;
}

}  // namespace

// Two passes: a global Hungarian solve fixes the optimal value V*, then rows
// are settled in order, each taking the smallest column whose completion
// still reaches V* (within a relative tie tolerance). Deterministic even on
// degenerate score matrices.
PermutationMatching discretize(const MatchingState& z) {
  const int n = z.n;
  if (static_cast<int>(z.z.size()) != n * n)
    throw std::invalid_argument("discretize: state size != n^2");
  for (double v : z.z)
    if (!std::isfinite(v)) throw std::invalid_argument("discretize: non-finite score");

  std::vector<int> best = max_weight_assignment(z.z, n);
  const double v_star = assignment_value(z.z, n, best);
  const double tie_tol = 1e-9 * (1.0 + std::abs(v_star));

  std::vector<int> result(n, -1);
  std::vector<int> cols(n);
  std::iota(cols.begin(), cols.end(), 0);  // kept sorted: candidate order
  double prefix = 0.0;

  for (int i = 0; i < n; ++i) {
    std::vector<int> rows_left(n - i - 1);
    std::iota(rows_left.begin(), rows_left.end(), i + 1);
    int chosen = -1;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const int j = cols[c];
      if (j == best[i]) {  // known optimal completion, no solve needed
        chosen = j;
        break;
      }
      std::vector<int> cols_left;
      cols_left.reserve(cols.size() - 1);
      for (int jj : cols)
        if (jj != j) cols_left.push_back(jj);
      std::vector<int> sub;
      const double v = prefix + z.z[i * n + j] +
                       sub_assignment_value(z.z, n, rows_left, cols_left, &sub);
      if (v >= v_star - tie_tol) {
        chosen = j;
        for (std::size_t r = 0; r < rows_left.size(); ++r)
          best[rows_left[r]] = cols_left[sub[r]];
        break;
      }
    }
    assert(chosen >= 0);
    result[i] = chosen;
    prefix += z.z[i * n + chosen];
    cols.erase(std::find(cols.begin(), cols.end(), chosen));
  }

  PermutationMatching m{std::move(result)};
  m.validate();
  return m;
}

BruteForceResult brute_force_qap(const AffinityDecomposition& aff) {
  aff.validate();
  const int n = aff.n;
  if (n > 10) throw std::invalid_argument("brute_force_qap: n > 10");
  if (n == 0) return {PermutationMatching{{}}, 0.0};

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  BruteForceResult best{PermutationMatching{perm}, -1.0};
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += aff.u[aff.idx(i, perm[i])];
    for (const PairEntry& e : aff.entries)
      if (perm[e.g1_a] == e.g2_a && perm[e.g1_b] == e.g2_b) s += 2.0 * e.w;
    if (s > best.value) best = {PermutationMatching{perm}, s};
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Vec compose_dense(const AffinityDecomposition& aff) {
  aff.validate();
  if (aff.n > 80) throw std::invalid_argument("compose_dense: n > 80");
  const std::size_t m = static_cast<std::size_t>(aff.n) * aff.n;
  Vec dense(m * m, 0.0);
  for (std::size_t k = 0; k < m; ++k) dense[k * m + k] = aff.u[k];
  for (const PairEntry& e : aff.entries) {
    const std::size_t p = static_cast<std::size_t>(e.g1_a) * aff.n + e.g2_a;
    const std::size_t q = static_cast<std::size_t>(e.g1_b) * aff.n + e.g2_b;
    dense[p * m + q] += e.w;
    dense[q * m + p] += e.w;
  }
  return dense;
}

}  // namespace gm
