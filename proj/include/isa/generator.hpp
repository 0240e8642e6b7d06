#pragma once

#include <string>
#include <vector>

#include "isa/geometry.hpp"
#include "isa/skeleton.hpp"
#include "isa/util.hpp"

namespace isa {

// Parameterized box-assembly categories with exact analytic skeletons. These
// stand in for CAD datasets that ship without skeleton annotations.

// Desk-style table: a top slab on four supports, three slim legs plus one
// corner cabinet. The cabinet breaks the rotational symmetry of the shape so
// full 6D poses stay well defined under the distance metric.
//
// Model frame: +z up, origin at mid-height; top surface at +height/2.
struct TableParams {
  double top_w = 1.2;       // x extent of the slab, m
  double top_d = 0.8;       // y extent
  double top_t = 0.04;      // slab thickness
  double height = 0.72;     // floor to top surface
  double leg_s = 0.06;      // slim-leg square cross-section
  double inset = 0.04;      // leg inset from the slab edges
  double cabinet_w = 0.38;  // cabinet x extent
  double cabinet_d = 0.55;  // cabinet y extent
};

TableParams sample_table_params(Rng& rng);
Mesh table_mesh(const TableParams& p);
// Nodes: 0 slab center, 1..4 support tops, 5..8 support bottoms (corner
// order +x+y, -x+y, -x-y, +x-y; the cabinet is corner 0). Links: slab center
// to each support top, each support top to its bottom.
SkeletonGraph table_skeleton(const TableParams& p);

// Chair: seat slab, four legs, a backrest slab along the -y edge.
// Nodes: 0 seat center, 1..4 leg tops, 5..8 leg bottoms, 9 backrest base,
// 10 backrest top.
struct ChairParams {
  double seat_w = 0.45;
  double seat_d = 0.45;
  double seat_t = 0.05;
  double seat_h = 0.45;  // floor to seat surface
  double leg_s = 0.045;
  double inset = 0.02;
  double back_h = 0.42;  // backrest height above the seat
  double back_t = 0.04;
};

ChairParams sample_chair_params(Rng& rng);
Mesh chair_mesh(const ChairParams& p);
SkeletonGraph chair_skeleton(const ChairParams& p);

struct GeneratedInstance {
  std::string id;
  Mesh mesh;
  SkeletonGraph skeleton;
};

// `count` seeded instances of "table" or "chair".
std::vector<GeneratedInstance> generate_category(const std::string& category,
                                                 int count, uint64_t seed);

// Appends an axis-aligned box [lo, hi] to the mesh (12 triangles).
void append_box(Mesh& mesh, const Vec3& lo, const Vec3& hi);

}  // namespace isa
