#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "isa/geometry.hpp"
#include "isa/render.hpp"

namespace isa {

// 3D skeleton graph in model coordinates. Labels are dense 0..node_count-1
// and category-consistent; links are stored as (low, high) label pairs.
struct SkeletonGraph {
  struct Node {
    int label = 0;
    Vec3 position = Vec3::Zero();
  };

  std::vector<Node> nodes;                  // sorted by label after load
  std::vector<std::pair<int, int>> links;   // low < high, sorted
  std::vector<int> project_mask;            // optional node subset; empty = all

  int node_count() const { return int(nodes.size()); }
  const Vec3& position(int label) const { return nodes[label].position; }

  void validate() const;  // throws SchemaError on structural problems
};

// Skeleton JSON: {"nodes":[{"label":..,"x":..,"y":..,"z":..}],
//                 "links":[[a,b],...], "project_mask":[labels] (optional)}
SkeletonGraph load_skeleton(const std::string& path);
void save_skeleton(const SkeletonGraph& graph, const std::string& path);

// Verifies all graphs share node count and link set; returns the shared link
// order. Throws TopologyMismatchError naming offending instances.
std::vector<std::pair<int, int>> validate_category_topology(
    const std::vector<SkeletonGraph>& graphs);

// Per-node projection of a skeleton through a viewpoint. A node is visible
// iff it is in front of the camera, lands inside the image bounds, and is
// included in the projection mask.
struct ProjectedSkeleton {
  struct Node {
    double u = 0.0, v = 0.0;  // px
    double z = 0.0;           // m
    bool visible = false;
  };
  std::vector<Node> nodes;                 // by label
  std::vector<std::pair<int, int>> links;  // inherited from the graph

  int visible_count() const {
    int n = 0;
    for (const auto& nd : nodes) n += nd.visible;
    return n;
  }
};

ProjectedSkeleton project_skeleton(const SkeletonGraph& graph, const Viewpoint& view,
                                   const CameraIntrinsics& cam);

// Angles of projected links with the image x axis, atan2 in (-pi, pi],
// directed low-label -> high-label. One slot per graph link; slots whose
// endpoints are not both visible are invalid. Zero-length projections get
// angle 0 and the degenerate flag.
struct LinkAngleVector {
  std::vector<double> angles;      // per graph link
  std::vector<uint8_t> valid;      // both endpoints visible
  std::vector<uint8_t> degenerate;

  // The compact view: one angle per fully visible link, in link order.
  std::vector<double> visible_angles() const {
    std::vector<double> out;
    for (size_t i = 0; i < angles.size(); ++i)
      if (valid[i]) out.push_back(angles[i]);
    return out;
  }
};

LinkAngleVector link_angles(const ProjectedSkeleton& proj);

// Offsets from a part center to every projected node: (du px, dv px, dz m).
// Rows for invisible nodes are flagged invalid and excluded from statistics.
struct NodeOffsetMatrix {
  std::vector<Eigen::Vector3d> rows;
  std::vector<uint8_t> valid;
};

NodeOffsetMatrix node_offsets(const Vec3& part_center, const ProjectedSkeleton& proj);

// Category reference point. `labels` holds the most-repetitive nearest-to-COM
// node label(s); ties produce several labels and per-instance interpolation.
struct SscResult {
  std::vector<int> labels;              // sorted, nonempty
  std::vector<Vec3> instance_points;    // per instance, model frame
  std::vector<RigidPose> instance_frames;  // origin at SSC, axes = model axes
};

SscResult compute_ssc(const std::vector<Mesh>& meshes,
                      const std::vector<SkeletonGraph>& graphs);

void save_ssc(const SscResult& ssc, const std::string& category,
              const std::string& path);
SscResult load_ssc(const std::string& path, std::string* category = nullptr);

}  // namespace isa
