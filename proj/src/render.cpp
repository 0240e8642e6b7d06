#include "isa/render.hpp"

#include <algorithm>
#include <cmath>

namespace isa {
namespace {

constexpr double kGoldenAngle = 2.0 * M_PI * (1.0 - 1.0 / 1.6180339887498949);
constexpr double kNearPlane = 1e-4;  // meters; clip plane in front of the camera

struct ClipVertex {
  Vec3 cam;  // camera-space position
};

// Clips a camera-space triangle against z >= kNearPlane (Sutherland-Hodgman).
// Returns 0..4 vertices.
int clip_near(const ClipVertex in[3], ClipVertex out[4]) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool a_in = a.cam.z() >= kNearPlane;
    const bool b_in = b.cam.z() >= kNearPlane;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double t = (kNearPlane - a.cam.z()) / (b.cam.z() - a.cam.z());
      out[n++] = {a.cam + t * (b.cam - a.cam)};
    }
  }
  return n;
}

inline double edge_function(double ax, double ay, double bx, double by,
                            double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Top-left fill rule. Triangles are wound so interior pixels have positive
// edge functions; with image y pointing down that winding makes a top edge
// horizontal with dx > 0 and left edges run upward (dy < 0). Pixels exactly
// on an edge are kept only for top and left edges.
inline bool edge_accepts(double e, double dx, double dy) {
  if (e > 0.0) return true;
  if (e < 0.0) return false;
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

void raster_triangle(DepthImage& img, const CameraIntrinsics& cam,
                     const Vec3& a, const Vec3& b, const Vec3& c) {
  // Project to continuous pixel coordinates.
  const auto project = [&cam](const Vec3& p) {
    return Eigen::Vector2d(cam.cx + cam.fx * p.x() / p.z(),
                           cam.cy + cam.fy * p.y() / p.z());
  };
  Eigen::Vector2d pa = project(a), pb = project(b), pc = project(c);
  double za = a.z(), zb = b.z(), zc = c.z();

  // Orient counter-clockwise in screen space (area > 0) so the edge tests
  // and the top-left rule see one consistent winding.
  double area = edge_function(pa.x(), pa.y(), pb.x(), pb.y(), pc.x(), pc.y());
  if (area == 0.0) return;
  if (area < 0.0) {
    std::swap(pb, pc);
    std::swap(zb, zc);
    area = -area;
  }

  const int x0 = std::max(0, (int)std::floor(std::min({pa.x(), pb.x(), pc.x()}) - 0.5));
  const int x1 = std::min(img.width - 1, (int)std::ceil(std::max({pa.x(), pb.x(), pc.x()}) - 0.5));
  const int y0 = std::max(0, (int)std::floor(std::min({pa.y(), pb.y(), pc.y()}) - 0.5));
  const int y1 = std::min(img.height - 1, (int)std::ceil(std::max({pa.y(), pb.y(), pc.y()}) - 0.5));
  if (x0 > x1 || y0 > y1) return;

  const double inv_za = 1.0 / za, inv_zb = 1.0 / zb, inv_zc = 1.0 / zc;

  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      const double e_ab = edge_function(pa.x(), pa.y(), pb.x(), pb.y(), px, py);
      const double e_bc = edge_function(pb.x(), pb.y(), pc.x(), pc.y(), px, py);
      const double e_ca = edge_function(pc.x(), pc.y(), pa.x(), pa.y(), px, py);
      if (!edge_accepts(e_ab, pb.x() - pa.x(), pb.y() - pa.y())) continue;
      if (!edge_accepts(e_bc, pc.x() - pb.x(), pc.y() - pb.y())) continue;
      if (!edge_accepts(e_ca, pa.x() - pc.x(), pa.y() - pc.y())) continue;

      // Barycentric weights; 1/z interpolates linearly in screen space.
      const double wa = e_bc / area;
      const double wb = e_ca / area;
      const double wc = e_ab / area;
      const double inv_z = wa * inv_za + wb * inv_zb + wc * inv_zc;
      if (inv_z <= 0.0) continue;
      const float z = static_cast<float>(1.0 / inv_z);
      float& dst = img.at(x, y);
      if (z < dst) dst = z;
    }
  }
}

}  // namespace

RigidPose look_at_origin(const Vec3& position) {
  const Vec3 forward = (-position).normalized();  // camera +z, toward origin
  Vec3 up(0.0, 0.0, 1.0);
  if (forward.cross(up).norm() < 1e-9) up = Vec3(1.0, 0.0, 0.0);
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);  // +y is down in image space
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return RigidPose(r, -(r * position));
}

std::vector<Viewpoint> sample_viewpoints(int count, double radius, bool hemisphere) {
  if (count < 1) throw ConfigError("viewpoint count must be >= 1");
  if (!(radius > 0.0)) throw ConfigError("viewpoint radius must be positive");

  std::vector<Viewpoint> views;
  views.reserve(count);
  for (int i = 0; i < count; ++i) {
    // z strata: the hemisphere variant starts exactly at the pole, the full
    // sphere stays clear of both poles.
    const double z = hemisphere ? 1.0 - double(i) / count
                                : 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double theta = kGoldenAngle * i;
    const Vec3 pos = radius * Vec3(r * std::cos(theta), r * std::sin(theta), z);
    views.push_back({look_at_origin(pos), i});
  }
  return views;
}

DepthImage render_depth(const Mesh& mesh, const Viewpoint& view,
                        const CameraIntrinsics& cam) {
  cam.validate();
  DepthImage img(cam.width, cam.height);

  std::vector<Vec3> cam_space(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i)
    cam_space[i] = view.pose.apply(mesh.vertices[i]);

  for (const auto& tri : mesh.triangles) {
    const ClipVertex in[3] = {{cam_space[tri[0]]},
                              {cam_space[tri[1]]},
                              {cam_space[tri[2]]}};
    ClipVertex poly[4];
    const int n = clip_near(in, poly);
    for (int k = 2; k < n; ++k)
      raster_triangle(img, cam, poly[0].cam, poly[k - 1].cam, poly[k].cam);
  }
  return img;
}

}  // namespace isa
