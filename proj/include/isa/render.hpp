#pragma once

#include <limits>
#include <vector>

#include "isa/geometry.hpp"

namespace isa {

// Single-channel metric depth raster. Foreground pixels hold camera-space z
// in meters; everything else is the +inf background sentinel.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;  // row-major, width * height

  static constexpr float kBackground = std::numeric_limits<float>::infinity();

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), pixels(size_t(w) * h, kBackground) {}

  float at(int x, int y) const { return pixels[size_t(y) * width + x]; }
  float& at(int x, int y) { return pixels[size_t(y) * width + x]; }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  static bool is_foreground(float d) { return std::isfinite(d) && d > 0.0f; }

  size_t foreground_count() const {
    size_t n = 0;
    for (float d : pixels) n += is_foreground(d);
    return n;
  }
};

// A camera placed by the sampler: `pose` maps model coordinates into camera
// coordinates (camera-from-model), with the optical axis through the model
// origin and zero in-plane roll.
struct Viewpoint {
  RigidPose pose;
  int index = 0;
};

// Deterministic Fibonacci-spiral placement of `count` cameras on a sphere
// (or upper hemisphere) of the given radius, each looking at the origin.
std::vector<Viewpoint> sample_viewpoints(int count, double radius, bool hemisphere);

// Builds the camera-from-model pose for a camera at `position` looking at
// the model origin with zero roll (image vertical follows model +z).
RigidPose look_at_origin(const Vec3& position);

// Z-buffer rasterization of the mesh under `view`. Top-left fill rule;
// depth is camera-space z interpolated perspective-correctly (linear 1/z).
DepthImage render_depth(const Mesh& mesh, const Viewpoint& view,
                        const CameraIntrinsics& cam);

}  // namespace isa
