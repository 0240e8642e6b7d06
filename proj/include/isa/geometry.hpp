#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "isa/error.hpp"

namespace isa {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Model frame convention: right-handed, +z up, units in meters.

// Rigid transform p -> R p + t. The rotation is validated on construction:
// ||R^T R - I||_max <= 1e-9 and det(R) = 1 +- 1e-9, otherwise InvalidPoseError.
class RigidPose {
 public:
  RigidPose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidPose(const Mat3& rotation, const Vec3& translation);

  // Euler convention used across the project: roll about x, pitch about y,
  // yaw about z, composed as R = Rz(yaw) * Ry(pitch) * Rx(roll).
  static RigidPose from_euler(const Vec3& rpy, const Vec3& translation);
  static Mat3 euler_to_rotation(const Vec3& rpy);
  static Vec3 rotation_to_euler(const Mat3& r);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Vec3 euler() const { return rotation_to_euler(rotation_); }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

  // this ∘ other: apply `other` first, then this.
  RigidPose compose(const RigidPose& other) const;
  RigidPose inverse() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

struct PointCloud {
  std::vector<Vec3> points;
};

// Pinhole camera: u = cx + fx * X/Z, v = cy + fy * Y/Z with +z in front of
// the camera, x right, y down (image v grows downward).
struct CameraIntrinsics {
  double fx = 575.0;
  double fy = 575.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  void validate() const;
};

// Area-weighted centroid of the mesh surface. Throws DegenerateMeshError if
// every triangle has zero area.
Vec3 center_of_mass(const Mesh& mesh);

// Maximum pairwise distance; the cloud must be nonempty.
double model_diameter(const PointCloud& cloud);

PointCloud apply_pose(const RigidPose& pose, const PointCloud& cloud);

// Uniform surface sampling by triangle area, seeded and deterministic.
PointCloud sample_surface(const Mesh& mesh, int count, uint64_t seed);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

// Axis-aligned bounding box diagonal; used for the unit-scale heuristic.
double bounding_box_diagonal(const Mesh& mesh);

}  // namespace isa
