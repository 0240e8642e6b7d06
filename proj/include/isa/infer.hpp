#pragma once

#include "isa/forest.hpp"

namespace isa {

struct InferenceConfig {
  double bin_u = 4.0;   // px
  double bin_v = 4.0;   // px
  double bin_z = 0.05;  // m
  double z_min = 0.3;   // m, accumulator depth range
  double z_max = 5.0;
  double smoothing_sigma = 1.0;  // bins
  int nms_radius = 1;            // 3^3 neighborhood
  int top_k = 1;

  void validate() const;
};

// Discretized vote density over (u px, v px, z m). Rotation votes ride along
// per bin so a mode can recover its orientation.
struct VoteAccumulator {
  int nu = 0, nv = 0, nz = 0;
  double bin_u = 0, bin_v = 0, bin_z = 0, z_min = 0;
  std::vector<double> weights;
  std::vector<std::pair<int32_t, Vec3>> rotations;  // (bin index, euler)
  double dropped = 0.0;  // weight landing outside the grid

  static VoteAccumulator make(const CameraIntrinsics& cam, const InferenceConfig& cfg);

  // Linear bin index for a continuous vote target, or -1 if off-grid.
  int bin_index(double u, double v, double z) const;
  size_t bin_count() const { return size_t(nu) * nv * nz; }
  double total_weight() const;
  bool same_grid(const VoteAccumulator& other) const;
};

// Appearance-only extraction for test images; shares the training grid code.
std::vector<Part> extract_test_parts(const DepthImage& depth, const PartConfig& cfg);

// Deposits every leaf vote at part_center + vote_offset with weight
// `weight / |votes|`; off-grid votes are counted in `dropped`.
void cast_votes(const Part& part, const std::vector<LeafVote>& votes,
                VoteAccumulator& acc, double weight = 1.0);

// Per-bin arithmetic mean over the per-tree accumulators; rotation votes are
// pooled. Grids must match.
VoteAccumulator aggregate(const std::vector<VoteAccumulator>& per_tree);

struct PoseHypothesis {
  Vec3 center = Vec3::Zero();       // camera-space meters (back-projected)
  Vec3 euler = Vec3::Zero();        // (roll, pitch, yaw)
  double score = 0.0;               // smoothed vote density at the mode
  Vec3 image_point = Vec3::Zero();  // mode bin center as (u px, v px, z m)
};

// Full test-time pipeline: extract parts, pass each down every tree, cast
// votes, average across trees, smooth, then take the top-K NMS modes. The
// rotation of each mode is the per-angle circular mean over its neighborhood
// votes. Hypotheses come back sorted by descending score.
std::vector<PoseHypothesis> estimate_pose(const DepthImage& depth,
                                          const Forest& forest,
                                          const InferenceConfig& cfg);

}  // namespace isa
