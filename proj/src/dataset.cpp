#include "isa/dataset.hpp"

#include <cmath>
#include <cstring>

#include "isa/util.hpp"

namespace isa {
namespace {

constexpr char kMagic[4] = {'I', 'S', 'A', 'S'};
constexpr uint32_t kVersion = 1;

void write_vec3(BinaryWriter& w, const Vec3& v) {
  w.f64(v.x());
  w.f64(v.y());
  w.f64(v.z());
}

Vec3 read_vec3(BinaryReader& r) {
  const double x = r.f64(), y = r.f64(), z = r.f64();
  return Vec3(x, y, z);
}

}  // namespace

void PartConfig::validate() const {
  if (patch_size < 2 || patch_size % 2 != 0)
    throw ConfigError("patch_size must be even and >= 2");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (!(min_foreground >= 0.0 && min_foreground <= 1.0))
    throw ConfigError("min_foreground must be in [0, 1]");
}

uint64_t topology_digest(const SkeletonGraph& graph) {
  uint64_t h = kFnvOffset;
  const uint32_t n = graph.node_count();
  h = fnv1a(&n, sizeof(n), h);
  for (const auto& [a, b] : graph.links) {
    const int32_t pair[2] = {a, b};
    h = fnv1a(pair, sizeof(pair), h);
  }
  return h;
}

DepthPatch crop_patch(const DepthImage& depth, int x, int y, int patch_size) {
  DepthPatch patch;
  patch.size = patch_size;
  patch.pixels.assign(size_t(patch_size) * patch_size, DepthImage::kBackground);
  const int half = patch_size / 2;
  for (int py = 0; py < patch_size; ++py) {
    const int sy = y - half + py;
    if (sy < 0 || sy >= depth.height) continue;
    for (int px = 0; px < patch_size; ++px) {
      const int sx = x - half + px;
      if (sx < 0 || sx >= depth.width) continue;
      patch.pixels[size_t(py) * patch_size + px] = depth.at(sx, sy);
    }
  }
  return patch;
}

std::vector<Part> extract_parts(const DepthImage& depth, const PartConfig& cfg) {
  cfg.validate();
  std::vector<Part> parts;
  const int k = cfg.patch_size;
  const double min_fg_pixels = cfg.min_foreground * double(k) * double(k);

  for (int y = cfg.stride / 2; y < depth.height; y += cfg.stride) {
    for (int x = cfg.stride / 2; x < depth.width; x += cfg.stride) {
      const float center_depth = depth.at(x, y);
      if (!DepthImage::is_foreground(center_depth)) continue;

      DepthPatch patch = crop_patch(depth, x, y, k);
      int foreground = 0;
      for (float d : patch.pixels) foreground += DepthImage::is_foreground(d);
      if (foreground < min_fg_pixels) continue;

      Part part;
      part.center = Vec3(x + 0.5, y + 0.5, double(center_depth));
      part.patch = std::move(patch);
      parts.push_back(std::move(part));
    }
  }
  return parts;
}

std::vector<Part> extract_training_parts(const DepthImage& depth,
                                         const Viewpoint& view,
                                         const Vec3& ssc_model_point,
                                         const ProjectedSkeleton& proj,
                                         const PartConfig& cfg,
                                         const CameraIntrinsics& cam) {
  std::vector<Part> parts = extract_parts(depth, cfg);

  const Vec3 ssc_cam = view.pose.apply(ssc_model_point);
  if (ssc_cam.z() <= 0.0)
    throw Error("SSC is behind the camera for this view");
  const double ssc_u = cam.cx + cam.fx * ssc_cam.x() / ssc_cam.z();
  const double ssc_v = cam.cy + cam.fy * ssc_cam.y() / ssc_cam.z();
  const Vec3 view_euler = view.pose.euler();

  for (auto& part : parts) {
    PrivilegedData priv;
    priv.offset_to_center = Vec3(ssc_u - part.center.x(), ssc_v - part.center.y(),
                                 ssc_cam.z() - part.center.z());
    priv.view_euler = view_euler;
    priv.link_angles = link_angles(proj);
    priv.node_offsets = node_offsets(part.center, proj);
    part.privileged = std::move(priv);
  }
  return parts;
}

void save_dataset(const TrainingSet& set, const std::string& path) {
  BinaryWriter w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.str(set.category);
  w.u32(uint32_t(set.instance_count()));
  w.u32(uint32_t(set.part_config.patch_size));
  w.u32(uint32_t(set.part_config.stride));
  w.f64(set.part_config.min_foreground);
  w.u32(uint32_t(set.node_count));
  w.u32(uint32_t(set.link_count));
  w.u64(set.topology_digest);
  w.u64(set.source_digest);
  w.u32(uint32_t(set.ssc_labels.size()));
  for (int label : set.ssc_labels) w.i32(label);

  for (const auto& instance : set.parts_per_instance) {
    w.u64(instance.size());
    for (const auto& part : instance) {
      write_vec3(w, part.center);
      w.bytes(part.patch.pixels.data(), part.patch.pixels.size() * sizeof(float));
      w.u8(part.privileged.has_value() ? 1 : 0);
      if (!part.privileged) continue;
      const auto& priv = *part.privileged;
      write_vec3(w, priv.offset_to_center);
      write_vec3(w, priv.view_euler);
      for (int i = 0; i < set.link_count; ++i) {
        w.f64(priv.link_angles.angles[i]);
        w.u8(priv.link_angles.valid[i]);
        w.u8(priv.link_angles.degenerate[i]);
      }
      for (int i = 0; i < set.node_count; ++i) {
        write_vec3(w, priv.node_offsets.rows[i]);
        w.u8(priv.node_offsets.valid[i]);
      }
    }
  }
  w.finish();
}

TrainingSet load_dataset(const std::string& path) {
  if (peek_magic(path) != std::string(kMagic, 4))
    throw VersionError("not an ISAS dataset: " + path);
  BinaryReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  const uint32_t version = r.u32();
  if (version != kVersion)
    throw VersionError("unsupported dataset version " + std::to_string(version) +
                       " in " + path);

  TrainingSet set;
  set.category = r.str();
  const uint32_t instances = r.u32();
  set.part_config.patch_size = int(r.u32());
  set.part_config.stride = int(r.u32());
  set.part_config.min_foreground = r.f64();
  set.node_count = int(r.u32());
  set.link_count = int(r.u32());
  set.topology_digest = r.u64();
  set.source_digest = r.u64();
  const uint32_t n_labels = r.u32();
  set.ssc_labels.resize(n_labels);
  for (uint32_t i = 0; i < n_labels; ++i) set.ssc_labels[i] = r.i32();

  const int k = set.part_config.patch_size;
  set.parts_per_instance.resize(instances);
  for (uint32_t inst = 0; inst < instances; ++inst) {
    const uint64_t count = r.u64();
    auto& parts = set.parts_per_instance[inst];
    parts.resize(count);
    for (uint64_t p = 0; p < count; ++p) {
      Part& part = parts[p];
      part.center = read_vec3(r);
      part.patch.size = k;
      part.patch.pixels.resize(size_t(k) * k);
      r.bytes(part.patch.pixels.data(), part.patch.pixels.size() * sizeof(float));
      if (r.u8() == 0) continue;
      PrivilegedData priv;
      priv.offset_to_center = read_vec3(r);
      priv.view_euler = read_vec3(r);
      priv.link_angles.angles.resize(set.link_count);
      priv.link_angles.valid.resize(set.link_count);
      priv.link_angles.degenerate.resize(set.link_count);
      for (int i = 0; i < set.link_count; ++i) {
        priv.link_angles.angles[i] = r.f64();
        priv.link_angles.valid[i] = r.u8();
        priv.link_angles.degenerate[i] = r.u8();
      }
      priv.node_offsets.rows.resize(set.node_count);
      priv.node_offsets.valid.resize(set.node_count);
      for (int i = 0; i < set.node_count; ++i) {
        priv.node_offsets.rows[i] = read_vec3(r);
        priv.node_offsets.valid[i] = r.u8();
      }
      part.privileged = std::move(priv);
    }
  }
  r.expect_end();
  return set;
}

}  // namespace isa
