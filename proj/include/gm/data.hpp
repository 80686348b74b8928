#pragma once

#include <cstdint>

#include "gm/core.hpp"
#include "gm/delaunay.hpp"

namespace gm {

// A pair of graphs with the planted correspondence. truth[i] is the G2 node
// matched to G1 node i, or -1 for an outlier with no true correspondent.
// Graph sizes may differ (pad_to_equal_size before solving).
struct KeypointPairSample {
  GraphInstance g1;
  GraphInstance g2;
  std::vector<int> truth;  // length g1.n()

  std::vector<bool> truth_mask() const;  // true where a correspondent exists
};

struct SyntheticSpec {
  int n_in = 30;
  int n_out = 0;
  double p_edge = 0.7;
  double sigma = 0.0;   // per-coordinate Gaussian feature noise
  int d = 20;
  std::uint64_t rng_seed = 0;
  void validate() const;
};

// Erdos-Renyi reference graph duplicated with preserved topology: inlier
// features of G2 are the G1 features plus N(0, sigma^2) noise, outlier
// features are redrawn uniformly, and G2's node order is shuffled by the
// planted permutation.
KeypointPairSample gen_er_pair(const SyntheticSpec& spec);

// Pairwise-only affinity (u = 0): for (i,i') in E1, (j,j') in E2 the weight
// is exp(-(d_ii' - d_jj')^2 / scale), d = Euclidean feature distance.
AffinityDecomposition synthetic_affinity(const KeypointPairSample& s, double scale = 2900.0);

// Same kernel over 2-D point coordinates, landmark-sequence default scale.
AffinityDecomposition house_affinity(const KeypointPairSample& s, double scale = 2500.0);

struct PointCloudSpec {
  int n_points = 30;
  double frame_gap = 0.1;  // rotation angle (radians) and jitter magnitude
  int inlier_count = 30;
  std::uint64_t rng_seed = 0;
  void validate() const;
};

// Two frames of a planar point cloud: frame 2 is frame 1 rotated by
// frame_gap about the centroid plus Gaussian jitter of std 5*frame_gap,
// then shuffled. G1 keeps only the first inlier_count points. Edges come
// from Delaunay triangulation of each frame.
KeypointPairSample gen_point_pair(const PointCloudSpec& spec);

struct PlantedMetricSpec {
  int n_in = 15;
  double p_edge = 0.7;
  double sigma = 0.5;  // noise inside the hidden map, pre-normalization
  int d = 20;
  std::uint64_t rng_seed = 0;
  void validate() const;
};

// Random orthogonal d x d map (row-major), the hidden metric of the planted
// training distribution.
Vec make_hidden_map(int d, std::uint64_t seed);

// Paired features v2 = normalize(H v1 + sigma * noise) with copied topology;
// a full bijection (no outliers), so a recoverable weight matrix exists.
KeypointPairSample gen_planted_pair(const PlantedMetricSpec& spec, const Vec& hidden_map);

// Whitespace-separated landmark file: rows of "x y" per landmark.
std::vector<Point2> load_landmarks(const std::string& path);

}  // namespace gm
