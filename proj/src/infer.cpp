#include "isa/infer.hpp"

#include <algorithm>
#include <cmath>

namespace isa {

void InferenceConfig::validate() const {
  if (!(bin_u > 0.0 && bin_v > 0.0 && bin_z > 0.0))
    throw ConfigError("accumulator bin sizes must be positive");
  if (!(z_min >= 0.0 && z_max > z_min))
    throw ConfigError("accumulator depth range must satisfy 0 <= z_min < z_max");
  if (!(smoothing_sigma >= 0.0)) throw ConfigError("smoothing_sigma must be >= 0");
  if (nms_radius < 1) throw ConfigError("nms_radius must be >= 1");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
}

VoteAccumulator VoteAccumulator::make(const CameraIntrinsics& cam,
                                      const InferenceConfig& cfg) {
  cfg.validate();
  VoteAccumulator acc;
  acc.bin_u = cfg.bin_u;
  acc.bin_v = cfg.bin_v;
  acc.bin_z = cfg.bin_z;
  acc.z_min = cfg.z_min;
  acc.nu = int(std::ceil(cam.width / cfg.bin_u));
  acc.nv = int(std::ceil(cam.height / cfg.bin_v));
  acc.nz = int(std::ceil((cfg.z_max - cfg.z_min) / cfg.bin_z));
  acc.weights.assign(acc.bin_count(), 0.0);
  return acc;
}

int VoteAccumulator::bin_index(double u, double v, double z) const {
  const int iu = int(std::floor(u / bin_u));
  const int iv = int(std::floor(v / bin_v));
  const int iz = int(std::floor((z - z_min) / bin_z));
  if (iu < 0 || iu >= nu || iv < 0 || iv >= nv || iz < 0 || iz >= nz) return -1;
  return (iz * nv + iv) * nu + iu;
}

double VoteAccumulator::total_weight() const {
  double sum = 0.0;
  for (double w : weights) sum += w;
  return sum;
}

bool VoteAccumulator::same_grid(const VoteAccumulator& other) const {
  return nu == other.nu && nv == other.nv && nz == other.nz &&
         bin_u == other.bin_u && bin_v == other.bin_v && bin_z == other.bin_z &&
         z_min == other.z_min;
}

std::vector<Part> extract_test_parts(const DepthImage& depth, const PartConfig& cfg) {
  return extract_parts(depth, cfg);  // appearance-only by construction
}

void cast_votes(const Part& part, const std::vector<LeafVote>& votes,
                VoteAccumulator& acc, double weight) {
  if (votes.empty()) return;
  const double share = weight / double(votes.size());
  for (const LeafVote& vote : votes) {
    const double u = part.center.x() + vote.offset.x();
    const double v = part.center.y() + vote.offset.y();
    const double z = part.center.z() + vote.offset.z();
    const int bin = acc.bin_index(u, v, z);
    if (bin < 0) {
      acc.dropped += share;
      continue;
    }
    acc.weights[bin] += share;
    acc.rotations.emplace_back(bin, vote.euler);
  }
}

VoteAccumulator aggregate(const std::vector<VoteAccumulator>& per_tree) {
  if (per_tree.empty()) throw Error("aggregate needs at least one accumulator");
  VoteAccumulator merged = per_tree.front();
  for (size_t t = 1; t < per_tree.size(); ++t) {
    const VoteAccumulator& acc = per_tree[t];
    if (!merged.same_grid(acc)) throw Error("accumulator grids do not match");
    for (size_t i = 0; i < merged.weights.size(); ++i)
      merged.weights[i] += acc.weights[i];
    merged.rotations.insert(merged.rotations.end(), acc.rotations.begin(),
                            acc.rotations.end());
    merged.dropped += acc.dropped;
  }
  const double inv = 1.0 / double(per_tree.size());
  for (double& w : merged.weights) w *= inv;
  merged.dropped *= inv;
  return merged;
}

namespace {

// Separable truncated-Gaussian smoothing (sigma in bins, zero padding).
std::vector<double> smooth_grid(const VoteAccumulator& acc, double sigma) {
  if (sigma <= 0.0) return acc.weights;
  const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * double(i) * i / (sigma * sigma));
    norm += kernel[i + radius];
  }
  for (double& k : kernel) k /= norm;

  const int nu = acc.nu, nv = acc.nv, nz = acc.nz;
  const auto idx = [&](int u, int v, int z) { return (size_t(z) * nv + v) * nu + u; };
  std::vector<double> a = acc.weights, b(a.size(), 0.0);

  // u axis
  for (int z = 0; z < nz; ++z)
    for (int v = 0; v < nv; ++v)
      for (int u = 0; u < nu; ++u) {
        double sum = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int uu = u + k;
          if (uu < 0 || uu >= nu) continue;
          sum += kernel[k + radius] * a[idx(uu, v, z)];
        }
        b[idx(u, v, z)] = sum;
      }
  std::swap(a, b);
  // v axis
  for (int z = 0; z < nz; ++z)
    for (int v = 0; v < nv; ++v)
      for (int u = 0; u < nu; ++u) {
        double sum = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int vv = v + k;
          if (vv < 0 || vv >= nv) continue;
          sum += kernel[k + radius] * a[idx(u, vv, z)];
        }
        b[idx(u, v, z)] = sum;
      }
  std::swap(a, b);
  // z axis
  for (int z = 0; z < nz; ++z)
    for (int v = 0; v < nv; ++v)
      for (int u = 0; u < nu; ++u) {
        double sum = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int zz = z + k;
          if (zz < 0 || zz >= nz) continue;
          sum += kernel[k + radius] * a[idx(u, v, zz)];
        }
        b[idx(u, v, z)] = sum;
      }
  return b;
}

struct BinCoord {
  int u, v, z;
};

BinCoord split_index(const VoteAccumulator& acc, int bin) {
  BinCoord c;
  c.u = bin % acc.nu;
  c.v = (bin / acc.nu) % acc.nv;
  c.z = bin / (acc.nu * acc.nv);
  return c;
}

// Per-angle circular mean of the rotation votes deposited within `radius`
// bins (Chebyshev) of the mode. Expands the radius if the shell is empty.
Vec3 neighborhood_rotation(const VoteAccumulator& acc, int mode_bin, int radius) {
  const BinCoord mode = split_index(acc, mode_bin);
  const int max_radius = std::max({acc.nu, acc.nv, acc.nz});
  for (int r = radius; r <= max_radius; ++r) {
    Eigen::Vector3d cos_sum = Eigen::Vector3d::Zero();
    Eigen::Vector3d sin_sum = Eigen::Vector3d::Zero();
    bool any = false;
    for (const auto& [bin, euler] : acc.rotations) {
      const BinCoord c = split_index(acc, bin);
      if (std::abs(c.u - mode.u) > r || std::abs(c.v - mode.v) > r ||
          std::abs(c.z - mode.z) > r)
        continue;
      any = true;
      for (int i = 0; i < 3; ++i) {
        cos_sum[i] += std::cos(euler[i]);
        sin_sum[i] += std::sin(euler[i]);
      }
    }
    if (any) {
      Vec3 out;
      for (int i = 0; i < 3; ++i) out[i] = std::atan2(sin_sum[i], cos_sum[i]);
      return out;
    }
  }
  return Vec3::Zero();
}

}  // namespace

std::vector<PoseHypothesis> estimate_pose(const DepthImage& depth,
                                          const Forest& forest,
                                          const InferenceConfig& cfg) {
  cfg.validate();
  const CameraIntrinsics& cam = forest.meta.camera;
  if (depth.width != cam.width || depth.height != cam.height)
    throw ConfigError("depth image dimensions do not match the forest camera");

  const std::vector<Part> parts =
      extract_test_parts(depth, forest.meta.part_config);
  if (parts.empty()) return {};

  std::vector<VoteAccumulator> per_tree;
  per_tree.reserve(forest.trees.size());
  for (const Tree& tree : forest.trees) {
    VoteAccumulator acc = VoteAccumulator::make(cam, cfg);
    for (const Part& part : parts) {
      const int leaf = traverse(tree, part.patch, forest.config.d_max);
      cast_votes(part, tree.nodes[leaf].votes, acc, 1.0);
    }
    per_tree.push_back(std::move(acc));
  }

  const VoteAccumulator merged = aggregate(per_tree);
  const std::vector<double> smoothed = smooth_grid(merged, cfg.smoothing_sigma);

  // Candidate bins sorted by (score desc, index asc), then greedy NMS over
  // the (2r+1)^3 neighborhood.
  std::vector<int> order;
  for (size_t i = 0; i < smoothed.size(); ++i)
    if (smoothed[i] > 0.0) order.push_back(int(i));
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (smoothed[a] != smoothed[b]) return smoothed[a] > smoothed[b];
    return a < b;
  });

  std::vector<PoseHypothesis> hypotheses;
  std::vector<int> picked;
  for (int bin : order) {
    if (int(hypotheses.size()) >= cfg.top_k) break;
    const BinCoord c = split_index(merged, bin);
    bool suppressed = false;
    for (int p : picked) {
      const BinCoord pc = split_index(merged, p);
      if (std::abs(c.u - pc.u) <= cfg.nms_radius &&
          std::abs(c.v - pc.v) <= cfg.nms_radius &&
          std::abs(c.z - pc.z) <= cfg.nms_radius) {
        suppressed = true;
        break;
      }
    }
    if (suppressed) continue;
    picked.push_back(bin);

    PoseHypothesis hyp;
    const double u = (c.u + 0.5) * merged.bin_u;
    const double v = (c.v + 0.5) * merged.bin_v;
    const double z = merged.z_min + (c.z + 0.5) * merged.bin_z;
    hyp.image_point = Vec3(u, v, z);
    hyp.center = Vec3((u - cam.cx) / cam.fx * z, (v - cam.cy) / cam.fy * z, z);
    hyp.euler = neighborhood_rotation(merged, bin, cfg.nms_radius);
    hyp.score = smoothed[bin];
    hypotheses.push_back(hyp);
  }
  return hypotheses;
}

}  // namespace isa
