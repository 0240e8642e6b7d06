#include "isa/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace isa {

void append_box(Mesh& mesh, const Vec3& lo, const Vec3& hi) {
  const int base = int(mesh.vertices.size());
  for (int corner = 0; corner < 8; ++corner)
    mesh.vertices.emplace_back(corner & 1 ? hi.x() : lo.x(),
                               corner & 2 ? hi.y() : lo.y(),
                               corner & 4 ? hi.z() : lo.z());
  // Two triangles per face, outward winding.
  static const int faces[12][3] = {
      {0, 2, 1}, {1, 2, 3},  // z = lo
      {4, 5, 6}, {5, 7, 6},  // z = hi
      {0, 1, 4}, {1, 5, 4},  // y = lo
      {2, 6, 3}, {3, 6, 7},  // y = hi
      {0, 4, 2}, {2, 4, 6},  // x = lo
      {1, 3, 5}, {3, 7, 5},  // x = hi
  };
  for (const auto& f : faces)
    mesh.triangles.push_back({base + f[0], base + f[1], base + f[2]});
}

namespace {

// Support axis (x, y) centers for the four corners; corner 0 carries the
// cabinet. Corner order: +x+y, -x+y, -x-y, +x-y.
struct Supports {
  Eigen::Vector2d center[4];
};

Supports table_supports(const TableParams& p) {
  const double lx = p.top_w / 2 - p.inset;
  const double ly = p.top_d / 2 - p.inset;
  Supports s;
  s.center[0] = {lx - p.cabinet_w / 2, ly - p.cabinet_d / 2};
  s.center[1] = {-(lx - p.leg_s / 2), ly - p.leg_s / 2};
  s.center[2] = {-(lx - p.leg_s / 2), -(ly - p.leg_s / 2)};
  s.center[3] = {lx - p.leg_s / 2, -(ly - p.leg_s / 2)};
  return s;
}

}  // namespace

TableParams sample_table_params(Rng& rng) {
  TableParams p;
  p.top_w = rng.uniform(0.95, 1.55);
  p.top_d = rng.uniform(0.55, 0.95);
  p.top_t = rng.uniform(0.03, 0.06);
  p.height = rng.uniform(0.60, 0.80);
  p.leg_s = rng.uniform(0.045, 0.085);
  p.inset = rng.uniform(0.02, 0.06);
  p.cabinet_w = rng.uniform(0.26, 0.40) * p.top_w;
  p.cabinet_d = rng.uniform(0.55, 0.85) * p.top_d;
  return p;
}

Mesh table_mesh(const TableParams& p) {
  Mesh mesh;
  const double z_top = p.height / 2;
  const double z_under = z_top - p.top_t;
  const double z_floor = -p.height / 2;

  append_box(mesh, Vec3(-p.top_w / 2, -p.top_d / 2, z_under),
             Vec3(p.top_w / 2, p.top_d / 2, z_top));

  const Supports s = table_supports(p);
  // Corner 0: cabinet; corners 1..3: slim legs.
  const double half_w[4] = {p.cabinet_w / 2, p.leg_s / 2, p.leg_s / 2, p.leg_s / 2};
  const double half_d[4] = {p.cabinet_d / 2, p.leg_s / 2, p.leg_s / 2, p.leg_s / 2};
  for (int i = 0; i < 4; ++i)
    append_box(mesh,
               Vec3(s.center[i].x() - half_w[i], s.center[i].y() - half_d[i], z_floor),
               Vec3(s.center[i].x() + half_w[i], s.center[i].y() + half_d[i], z_under));
  return mesh;
}

SkeletonGraph table_skeleton(const TableParams& p) {
  const double z_top = p.height / 2;
  const double z_under = z_top - p.top_t;
  const double z_floor = -p.height / 2;
  const Supports s = table_supports(p);

  SkeletonGraph graph;
  graph.nodes.push_back({0, Vec3(0.0, 0.0, z_top - p.top_t / 2)});
  for (int i = 0; i < 4; ++i)
    graph.nodes.push_back({1 + i, Vec3(s.center[i].x(), s.center[i].y(), z_under)});
  for (int i = 0; i < 4; ++i)
    graph.nodes.push_back({5 + i, Vec3(s.center[i].x(), s.center[i].y(), z_floor)});
  for (int i = 0; i < 4; ++i) {
    graph.links.emplace_back(0, 1 + i);
    graph.links.emplace_back(1 + i, 5 + i);
  }
  std::sort(graph.links.begin(), graph.links.end());
  graph.validate();
  return graph;
}

ChairParams sample_chair_params(Rng& rng) {
  ChairParams p;
  p.seat_w = rng.uniform(0.38, 0.52);
  p.seat_d = rng.uniform(0.38, 0.50);
  p.seat_t = rng.uniform(0.04, 0.07);
  p.seat_h = rng.uniform(0.40, 0.50);
  p.leg_s = rng.uniform(0.035, 0.055);
  p.inset = rng.uniform(0.01, 0.04);
  p.back_h = rng.uniform(0.35, 0.55);
  p.back_t = rng.uniform(0.03, 0.05);
  return p;
}

Mesh chair_mesh(const ChairParams& p) {
  Mesh mesh;
  // Mid-height origin over the full extent (seat plus backrest).
  const double total_h = p.seat_h + p.back_h;
  const double z_floor = -total_h / 2;
  const double z_seat = z_floor + p.seat_h;
  const double z_under = z_seat - p.seat_t;
  const double z_back_top = z_seat + p.back_h;

  append_box(mesh, Vec3(-p.seat_w / 2, -p.seat_d / 2, z_under),
             Vec3(p.seat_w / 2, p.seat_d / 2, z_seat));
  // Backrest along the -y edge.
  append_box(mesh, Vec3(-p.seat_w / 2, -p.seat_d / 2, z_seat),
             Vec3(p.seat_w / 2, -p.seat_d / 2 + p.back_t, z_back_top));

  const double lx = p.seat_w / 2 - p.inset - p.leg_s / 2;
  const double ly = p.seat_d / 2 - p.inset - p.leg_s / 2;
  const Eigen::Vector2d legs[4] = {{lx, ly}, {-lx, ly}, {-lx, -ly}, {lx, -ly}};
  for (const auto& leg : legs)
    append_box(mesh, Vec3(leg.x() - p.leg_s / 2, leg.y() - p.leg_s / 2, z_floor),
               Vec3(leg.x() + p.leg_s / 2, leg.y() + p.leg_s / 2, z_under));
  return mesh;
}

SkeletonGraph chair_skeleton(const ChairParams& p) {
  const double total_h = p.seat_h + p.back_h;
  const double z_floor = -total_h / 2;
  const double z_seat = z_floor + p.seat_h;
  const double z_under = z_seat - p.seat_t;
  const double z_back_top = z_seat + p.back_h;
  const double lx = p.seat_w / 2 - p.inset - p.leg_s / 2;
  const double ly = p.seat_d / 2 - p.inset - p.leg_s / 2;
  const Eigen::Vector2d legs[4] = {{lx, ly}, {-lx, ly}, {-lx, -ly}, {lx, -ly}};
  const double back_y = -p.seat_d / 2 + p.back_t / 2;

  SkeletonGraph graph;
  graph.nodes.push_back({0, Vec3(0.0, 0.0, z_seat - p.seat_t / 2)});
  for (int i = 0; i < 4; ++i)
    graph.nodes.push_back({1 + i, Vec3(legs[i].x(), legs[i].y(), z_under)});
  for (int i = 0; i < 4; ++i)
    graph.nodes.push_back({5 + i, Vec3(legs[i].x(), legs[i].y(), z_floor)});
  graph.nodes.push_back({9, Vec3(0.0, back_y, z_seat)});
  graph.nodes.push_back({10, Vec3(0.0, back_y, z_back_top)});
  for (int i = 0; i < 4; ++i) {
    graph.links.emplace_back(0, 1 + i);
    graph.links.emplace_back(1 + i, 5 + i);
  }
  graph.links.emplace_back(0, 9);
  graph.links.emplace_back(9, 10);
  std::sort(graph.links.begin(), graph.links.end());
  graph.validate();
  return graph;
}

std::vector<GeneratedInstance> generate_category(const std::string& category,
                                                 int count, uint64_t seed) {
  if (count < 1) throw ConfigError("instance count must be >= 1");
  std::vector<GeneratedInstance> out;
  out.reserve(count);
  Rng root(seed);
  for (int i = 0; i < count; ++i) {
    Rng rng = root.fork(uint64_t(i));
    GeneratedInstance inst;
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "%03d", i);
    inst.id = category + "_" + suffix;
    if (category == "table") {
      const TableParams p = sample_table_params(rng);
      inst.mesh = table_mesh(p);
      inst.skeleton = table_skeleton(p);
    } else if (category == "chair") {
      const ChairParams p = sample_chair_params(rng);
      inst.mesh = chair_mesh(p);
      inst.skeleton = chair_skeleton(p);
    } else {
      throw ConfigError("unknown procedural category: " + category +
                        " (supported: table, chair)");
    }
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace isa
