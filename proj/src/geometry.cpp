#include "isa/geometry.hpp"

#include <cmath>

#include "isa/util.hpp"

namespace isa {

RigidPose::RigidPose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (!(ortho <= 1e-9))
    throw InvalidPoseError("rotation is not orthonormal (deviation " +
                           std::to_string(ortho) + ")");
  const double det = rotation.determinant();
  if (!(std::abs(det - 1.0) <= 1e-9))
    throw InvalidPoseError("rotation determinant is " + std::to_string(det) +
                           ", expected +1");
  if (!translation.allFinite())
    throw InvalidPoseError("translation has non-finite components");
}

Mat3 RigidPose::euler_to_rotation(const Vec3& rpy) {
  const double cr = std::cos(rpy.x()), sr = std::sin(rpy.x());
  const double cp = std::cos(rpy.y()), sp = std::sin(rpy.y());
  const double cy = std::cos(rpy.z()), sy = std::sin(rpy.z());
  Mat3 r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp, cp * sr, cp * cr;
  return r;
}

Vec3 RigidPose::rotation_to_euler(const Mat3& r) {
  // Inverse of Rz(yaw) Ry(pitch) Rx(roll); pitch folded into [-pi/2, pi/2].
  const double sp = -r(2, 0);
  const double pitch = std::asin(std::clamp(sp, -1.0, 1.0));
  double roll, yaw;
  if (std::abs(sp) < 1.0 - 1e-12) {
    roll = std::atan2(r(2, 1), r(2, 2));
    yaw = std::atan2(r(1, 0), r(0, 0));
  } else {
    // Gimbal lock: only roll - yaw (or roll + yaw) is observable; put all of
    // it into roll.
    roll = std::atan2(-r(0, 1), r(1, 1));
    yaw = 0.0;
  }
  return Vec3(roll, pitch, yaw);
}

RigidPose RigidPose::from_euler(const Vec3& rpy, const Vec3& translation) {
  return RigidPose(euler_to_rotation(rpy), translation);
}

RigidPose RigidPose::compose(const RigidPose& other) const {
  RigidPose out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

RigidPose RigidPose::inverse() const {
  RigidPose out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(rotation_.transpose() * translation_);
  return out;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw ConfigError("camera focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw ConfigError("camera image dimensions must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw ConfigError("camera principal point must lie inside the image");
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 center_of_mass(const Mesh& mesh) {
  if (mesh.triangles.empty()) throw EmptyMeshError("mesh has no triangles");
  Vec3 weighted = Vec3::Zero();
  double total_area = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    const double area = triangle_area(a, b, c);
    weighted += area * (a + b + c) / 3.0;
    total_area += area;
  }
  if (total_area <= 0.0)
    throw DegenerateMeshError("all triangles have zero area");
  return weighted / total_area;
}

double model_diameter(const PointCloud& cloud) {
  if (cloud.points.empty()) throw Error("diameter of an empty point cloud");
  double best = 0.0;
  const auto& pts = cloud.points;
  for (size_t i = 0; i + 1 < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      best = std::max(best, (pts[i] - pts[j]).squaredNorm());
  return std::sqrt(best);
}

PointCloud apply_pose(const RigidPose& pose, const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(pose.apply(p));
  return out;
}

PointCloud sample_surface(const Mesh& mesh, int count, uint64_t seed) {
  if (mesh.triangles.empty()) throw EmptyMeshError("mesh has no triangles");
  if (count <= 0) throw ConfigError("surface sample count must be positive");

  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    total += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                           mesh.vertices[t[2]]);
    cumulative[i] = total;
  }
  if (total <= 0.0)
    throw DegenerateMeshError("all triangles have zero area");

  Rng rng(seed);
  PointCloud out;
  out.points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double pick = rng.uniform() * total;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), pick);
    const size_t ti = std::min<size_t>(it - cumulative.begin(),
                                       mesh.triangles.size() - 1);
    const auto& t = mesh.triangles[ti];
    // Uniform barycentric sampling via the square-root trick.
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    out.points.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
  }
  return out;
}

double bounding_box_diagonal(const Mesh& mesh) {
  if (mesh.vertices.empty()) return 0.0;
  Vec3 lo = mesh.vertices.front(), hi = mesh.vertices.front();
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

}  // namespace isa
