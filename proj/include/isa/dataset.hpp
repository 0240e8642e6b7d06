#pragma once

#include <optional>
#include <string>
#include <vector>

#include "isa/render.hpp"
#include "isa/skeleton.hpp"

namespace isa {

// Square depth crop around a part center. Pixels outside the source image
// keep the background sentinel. Local coordinates put the center pixel at
// (size/2, size/2).
struct DepthPatch {
  int size = 0;
  std::vector<float> pixels;

  float at(int x, int y) const { return pixels[size_t(y) * size + x]; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < size && y >= 0 && y < size;
  }
};

// Training-only annotations. Present on training parts, absent on test
// parts; nothing on the inference path may read them.
struct PrivilegedData {
  Vec3 offset_to_center = Vec3::Zero();  // (du px, dv px, dz m) to the SSC
  Vec3 view_euler = Vec3::Zero();        // (roll, pitch, yaw) of the view
  LinkAngleVector link_angles;
  NodeOffsetMatrix node_offsets;
};

struct Part {
  Vec3 center = Vec3::Zero();  // (u px, v px, z m); u,v at pixel centers
  DepthPatch patch;
  std::optional<PrivilegedData> privileged;
};

struct PartConfig {
  int patch_size = 32;       // px, even
  int stride = 8;            // px
  double min_foreground = 0.5;

  void validate() const;
};

struct TrainingSet {
  std::string category;
  PartConfig part_config;
  int node_count = 0;  // skeleton rows per node-offset matrix
  int link_count = 0;
  uint64_t topology_digest = 0;
  uint64_t source_digest = 0;  // digest of upstream inputs (pipeline-defined)
  std::vector<int> ssc_labels;
  std::vector<std::vector<Part>> parts_per_instance;

  int instance_count() const { return int(parts_per_instance.size()); }
  size_t total_parts() const {
    size_t n = 0;
    for (const auto& v : parts_per_instance) n += v.size();
    return n;
  }
};

uint64_t topology_digest(const SkeletonGraph& graph);

// Crops the k x k patch centered on pixel (x, y).
DepthPatch crop_patch(const DepthImage& depth, int x, int y, int patch_size);

// Appearance-only part extraction shared by training and test: stride-grid
// centers over foreground pixels whose patch clears the foreground fraction.
std::vector<Part> extract_parts(const DepthImage& depth, const PartConfig& cfg);

// Training extraction: annotates every grid part with the offset to the
// projected SSC, the view rotation, and the skeletal representations.
std::vector<Part> extract_training_parts(const DepthImage& depth,
                                         const Viewpoint& view,
                                         const Vec3& ssc_model_point,
                                         const ProjectedSkeleton& proj,
                                         const PartConfig& cfg,
                                         const CameraIntrinsics& cam);

// "ISAS" container, little-endian, FNV-checksummed. load(save(S)) is
// structurally equal and re-saves byte-identically.
void save_dataset(const TrainingSet& set, const std::string& path);
TrainingSet load_dataset(const std::string& path);

}  // namespace isa
