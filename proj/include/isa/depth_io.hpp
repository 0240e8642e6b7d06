#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isa/render.hpp"

namespace isa {

// Native depth format: 16-byte header (magic "ISAD", u32 width, u32 height,
// u32 reserved), then width*height little-endian float32 meters, +inf for
// background. No checksum trailer; the header doubles as the version tag.
void save_depth(const DepthImage& img, const std::string& path);
DepthImage load_depth(const std::string& path);

// Accepts either format: ISAD by magic, otherwise 16-bit grayscale PNG in
// millimeters with 0 = background.
DepthImage import_depth(const std::string& path);

// 16-bit grayscale PNG in millimeters (values clamped to u16, background 0).
void save_depth_png(const DepthImage& img, const std::string& path);

// 8-bit RGB PNG, used for debug overlays.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // rgb interleaved

  RgbImage(int w, int h) : width(w), height(h), pixels(size_t(w) * h * 3, 0) {}
  void set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
    if (x < 0 || x >= width || y < 0 || y >= height) return;
    uint8_t* p = &pixels[(size_t(y) * width + x) * 3];
    p[0] = r; p[1] = g; p[2] = b;
  }
};

void save_rgb_png(const RgbImage& img, const std::string& path);

}  // namespace isa
