#include "gm/data.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace gm {

std::vector<bool> KeypointPairSample::truth_mask() const {
  std::vector<bool> mask(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) mask[i] = truth[i] >= 0;
  return mask;
}

void SyntheticSpec::validate() const {
  if (n_in < 1) throw std::invalid_argument("synthetic: n_in must be >= 1");
  if (n_out < 0) throw std::invalid_argument("synthetic: n_out must be >= 0");
  if (!(p_edge > 0.0 && p_edge <= 1.0))
    throw std::invalid_argument("synthetic: p_edge in (0, 1]");
  if (!(sigma >= 0.0)) throw std::invalid_argument("synthetic: sigma must be >= 0");
  if (d < 1) throw std::invalid_argument("synthetic: d must be >= 1");
}

void PointCloudSpec::validate() const {
  if (n_points < 3) throw std::invalid_argument("point cloud: n_points must be >= 3");
  if (inlier_count < 3 || inlier_count > n_points)
    throw std::invalid_argument("point cloud: inlier_count in [3, n_points]");
  if (!(frame_gap >= 0.0)) throw std::invalid_argument("point cloud: frame_gap must be >= 0");
}

void PlantedMetricSpec::validate() const {
  if (n_in < 1) throw std::invalid_argument("planted: n_in must be >= 1");
  if (!(p_edge > 0.0 && p_edge <= 1.0)) throw std::invalid_argument("planted: p_edge in (0, 1]");
  if (!(sigma >= 0.0)) throw std::invalid_argument("planted: sigma must be >= 0");
  if (d < 1) throw std::invalid_argument("planted: d must be >= 1");
}

namespace {

std::vector<Edge> er_edges(int n, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng) < p) edges.push_back({i, j});
  return edges;
}

std::vector<int> random_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

double feature_distance(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

// Shared kernel: weight exp(-(d1 - d2)^2 / scale) per edge pair, both
// orientations emitted, u = 0.
AffinityDecomposition kernel_affinity(const KeypointPairSample& s, double scale,
                                      double (*dist)(const GraphInstance&, int, int)) {
  if (!(scale > 0.0)) throw std::invalid_argument("affinity kernel: scale must be > 0");
  s.g1.validate();
  s.g2.validate();
  const int n = std::max(s.g1.n(), s.g2.n());
  AffinityDecomposition aff;
  aff.n = n;
  aff.u.assign(static_cast<std::size_t>(n) * n, 0.0);
  aff.entries.reserve(s.g1.edges.size() * s.g2.edges.size() * 2);
  for (const Edge& e1 : s.g1.edges) {
    const double d1 = dist(s.g1, e1.a, e1.b);
    for (const Edge& e2 : s.g2.edges) {
      const double d2 = dist(s.g2, e2.a, e2.b);
      const double diff = d1 - d2;
      add_edge_pair(aff, e1, e2, std::exp(-diff * diff / scale));
    }
  }
  return aff;
}

double feature_edge_distance(const GraphInstance& g, int a, int b) {
  return feature_distance(g.node_features[a], g.node_features[b]);
}

}  // namespace

KeypointPairSample gen_er_pair(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = spec.n_in + spec.n_out;

  KeypointPairSample s;
  s.g1.node_features.resize(n);
  for (auto& f : s.g1.node_features) {
    f.resize(spec.d);
    for (double& v : f) v = unif(rng);
  }
  s.g1.edges = er_edges(n, spec.p_edge, rng);

  const std::vector<int> perm = random_permutation(n, rng);
  s.g2.node_features.resize(n);
  for (int i = 0; i < n; ++i) {
    Vec f = s.g1.node_features[i];
    if (i < spec.n_in) {
      for (double& v : f) v += spec.sigma * gauss(rng);
    } else {
      for (double& v : f) v = unif(rng);  // outlier: fresh draw
    }
    s.g2.node_features[perm[i]] = std::move(f);
  }
  s.g2.edges.reserve(s.g1.edges.size());
  for (const Edge& e : s.g1.edges) s.g2.edges.push_back(make_edge(perm[e.a], perm[e.b]));
  std::sort(s.g2.edges.begin(), s.g2.edges.end());

  s.truth.resize(n);
  for (int i = 0; i < n; ++i) s.truth[i] = i < spec.n_in ? perm[i] : -1;
  return s;
}

AffinityDecomposition synthetic_affinity(const KeypointPairSample& s, double scale) {
  return kernel_affinity(s, scale, feature_edge_distance);
}

AffinityDecomposition house_affinity(const KeypointPairSample& s, double scale) {
  for (const GraphInstance* g : {&s.g1, &s.g2})
    if (g->feature_dim() != 2)
      throw std::invalid_argument("house affinity: expects 2-D point coordinates");
  return kernel_affinity(s, scale, feature_edge_distance);
}

KeypointPairSample gen_point_pair(const PointCloudSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> unif(0.0, 100.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<Point2> frame1(spec.n_points);
  for (auto& p : frame1) p = {unif(rng), unif(rng)};
  double cx = 0.0, cy = 0.0;
  for (const auto& p : frame1) {
    cx += p[0];
    cy += p[1];
  }
  cx /= spec.n_points;
  cy /= spec.n_points;

  const double ca = std::cos(spec.frame_gap), sa = std::sin(spec.frame_gap);
  const double jitter = 5.0 * spec.frame_gap;
  std::vector<Point2> frame2(spec.n_points);
  for (int i = 0; i < spec.n_points; ++i) {
    const double x = frame1[i][0] - cx, y = frame1[i][1] - cy;
    frame2[i] = {cx + ca * x - sa * y + jitter * gauss(rng),
                 cy + sa * x + ca * y + jitter * gauss(rng)};
  }

  const std::vector<int> perm = random_permutation(spec.n_points, rng);

  KeypointPairSample s;
  s.g1.node_features.resize(spec.inlier_count);
  for (int i = 0; i < spec.inlier_count; ++i)
    s.g1.node_features[i] = {frame1[i][0], frame1[i][1]};
  std::vector<Point2> pts1(frame1.begin(), frame1.begin() + spec.inlier_count);
  s.g1.edges = delaunay(pts1).edges;

  s.g2.node_features.resize(spec.n_points);
  std::vector<Point2> pts2(spec.n_points);
  for (int i = 0; i < spec.n_points; ++i) {
    pts2[perm[i]] = frame2[i];
    s.g2.node_features[perm[i]] = {frame2[i][0], frame2[i][1]};
  }
  s.g2.edges = delaunay(pts2).edges;

  s.truth.resize(spec.inlier_count);
  for (int i = 0; i < spec.inlier_count; ++i) s.truth[i] = perm[i];
  return s;
}

Vec make_hidden_map(int d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("hidden map: d must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Gram-Schmidt on a Gaussian matrix: Haar-ish random orthogonal rows.
  std::vector<Vec> rows(d, Vec(d));
  for (auto& r : rows)
    for (double& v : r) v = gauss(rng);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += rows[i][k] * rows[j][k];
      for (int k = 0; k < d; ++k) rows[i][k] -= dot * rows[j][k];
    }
    double nrm = 0.0;
    for (double v : rows[i]) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12) throw std::runtime_error("hidden map: degenerate draw");
    for (double& v : rows[i]) v /= nrm;
  }
  Vec h(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) h[i * d + j] = rows[i][j];
  return h;
}

KeypointPairSample gen_planted_pair(const PlantedMetricSpec& spec, const Vec& hidden_map) {
  spec.validate();
  const int d = spec.d;
  if (static_cast<int>(hidden_map.size()) != d * d)
    throw std::invalid_argument("planted: hidden map size != d^2");
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = spec.n_in;

  KeypointPairSample s;
  s.g1.node_features.resize(n);
  for (auto& f : s.g1.node_features) {
    f.resize(d);
    for (double& v : f) v = unif(rng);
  }
  s.g1.edges = er_edges(n, spec.p_edge, rng);

  const std::vector<int> perm = random_permutation(n, rng);
  s.g2.node_features.resize(n);
  for (int i = 0; i < n; ++i) {
    Vec f(d, 0.0);
    for (int r = 0; r < d; ++r) {
      double acc = 0.0;
      for (int c = 0; c < d; ++c) acc += hidden_map[r * d + c] * s.g1.node_features[i][c];
      f[r] = acc + spec.sigma * gauss(rng);
    }
    double nrm = 0.0;
    for (double v : f) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm > 0.0)
      for (double& v : f) v /= nrm;
    s.g2.node_features[perm[i]] = std::move(f);
  }
  s.g2.edges.reserve(s.g1.edges.size());
  for (const Edge& e : s.g1.edges) s.g2.edges.push_back(make_edge(perm[e.a], perm[e.b]));
  std::sort(s.g2.edges.begin(), s.g2.edges.end());

  s.truth.resize(n);
  for (int i = 0; i < n; ++i) s.truth[i] = perm[i];
  return s;
}

std::vector<Point2> load_landmarks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("landmarks: cannot open " + path);
  std::vector<Point2> pts;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    double x, y;
    if (ss >> x >> y) pts.push_back({x, y});
  }
  return pts;
}

}  // namespace gm
