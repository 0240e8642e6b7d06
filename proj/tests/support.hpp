#pragma once

// Shared fixtures for the test suites.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "isa/generator.hpp"
#include "isa/geometry.hpp"
#include "isa/util.hpp"

namespace isa::test {

// Unit cube centered at the origin.
inline Mesh unit_cube() {
  Mesh mesh;
  append_box(mesh, Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5));
  return mesh;
}

inline std::string off_unit_cube() {
  return R"(OFF
8 12 0
-0.5 -0.5 -0.5
0.5 -0.5 -0.5
-0.5 0.5 -0.5
0.5 0.5 -0.5
-0.5 -0.5 0.5
0.5 -0.5 0.5
-0.5 0.5 0.5
0.5 0.5 0.5
3 0 2 1
3 1 2 3
3 4 5 6
3 5 7 6
3 0 1 4
3 1 5 4
3 2 6 3
3 3 6 7
3 0 4 2
3 2 4 6
3 1 3 5
3 3 7 5
)";
}

// Scratch directory unique to the calling test binary; wiped on creation.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("isa_test_" + tag);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path;
}

// Haar-uniform random rotation via quaternion sampling.
inline Mat3 random_rotation(Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double w = a * std::sin(2.0 * M_PI * u2);
  const double x = a * std::cos(2.0 * M_PI * u2);
  const double y = b * std::sin(2.0 * M_PI * u3);
  const double z = b * std::cos(2.0 * M_PI * u3);
  return Eigen::Quaterniond(w, x, y, z).toRotationMatrix();
}

inline PointCloud random_cloud(Rng& rng, int count, double extent = 1.0) {
  PointCloud cloud;
  cloud.points.reserve(count);
  for (int i = 0; i < count; ++i)
    cloud.points.emplace_back(rng.uniform(-extent, extent),
                              rng.uniform(-extent, extent),
                              rng.uniform(-extent, extent));
  return cloud;
}

}  // namespace isa::test
