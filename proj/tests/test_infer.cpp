#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "isa/infer.hpp"
#include "support.hpp"

using namespace isa;
using namespace isa::test;

namespace {

CameraIntrinsics cam160() {
  CameraIntrinsics cam;
  cam.width = 160;
  cam.height = 120;
  cam.fx = cam.fy = 150.0;
  cam.cx = 80.0;
  cam.cy = 60.0;
  return cam;
}

PartConfig parts8() {
  PartConfig cfg;
  cfg.patch_size = 16;
  cfg.stride = 4;
  return cfg;
}

InferenceConfig infer_cfg() {
  InferenceConfig cfg;
  cfg.z_min = 0.3;
  cfg.z_max = 8.0;
  return cfg;
}

struct Scene {
  Mesh mesh;
  SkeletonGraph skeleton;
  CameraIntrinsics cam = cam160();
  int view_count = 3;  // the pool both the scene and the fixture forest use
  Viewpoint view;
  DepthImage depth;
  Vec3 ssc_model;
  Vec3 ssc_cam;
  Vec3 ssc_image;  // (u, v, z)
};

Scene table_scene(uint64_t seed, int view_index = 2,
                  const CameraIntrinsics& cam = cam160()) {
  Scene s;
  const auto inst = generate_category("table", 1, seed)[0];
  s.mesh = inst.mesh;
  s.skeleton = inst.skeleton;
  s.cam = cam;
  const double radius = 2.0 * model_diameter(sample_surface(s.mesh, 2048, 1));
  s.view = sample_viewpoints(s.view_count, radius, true)[view_index % s.view_count];
  s.depth = render_depth(s.mesh, s.view, s.cam);
  s.ssc_model = s.skeleton.position(0);
  s.ssc_cam = s.view.pose.apply(s.ssc_model);
  s.ssc_image = Vec3(s.cam.cx + s.cam.fx * s.ssc_cam.x() / s.ssc_cam.z(),
                     s.cam.cy + s.cam.fy * s.ssc_cam.y() / s.ssc_cam.z(),
                     s.ssc_cam.z());
  return s;
}

// One-instance forest over the scene's own view pool, so the scene view is a
// genuine training view.
Forest tiny_forest(const Scene& s, uint64_t seed = 5) {
  TrainingSet set;
  set.category = "table";
  set.part_config = parts8();
  set.node_count = s.skeleton.node_count();
  set.link_count = int(s.skeleton.links.size());
  const double radius = s.view.pose.inverse().translation().norm();
  std::vector<Part> parts;
  for (const auto& view : sample_viewpoints(s.view_count, radius, true)) {
    const DepthImage depth = render_depth(s.mesh, view, s.cam);
    const ProjectedSkeleton proj = project_skeleton(s.skeleton, view, s.cam);
    auto vp = extract_training_parts(depth, view, s.ssc_model, proj,
                                     set.part_config, s.cam);
    for (auto& p : vp) parts.push_back(std::move(p));
  }
  set.parts_per_instance.push_back(std::move(parts));

  ForestConfig cfg;
  cfg.tree_count = 2;
  cfg.max_depth = 12;
  cfg.min_samples = 2;
  cfg.candidate_offsets = 16;
  cfg.candidate_thresholds = 6;
  cfg.offset_radius = 12.0;
  cfg.subset_fraction = 1.0;
  cfg.leaf_vote_cap = 20;
  cfg.seed = seed;
  Forest forest = train_forest(set, cfg);
  forest.meta.camera = s.cam;
  return forest;
}

}  // namespace

TEST_CASE("test extraction matches training extraction centers and patches") {
  const Scene s = table_scene(31);
  const ProjectedSkeleton proj = project_skeleton(s.skeleton, s.view, s.cam);
  const auto train_parts = extract_training_parts(s.depth, s.view, s.ssc_model,
                                                  proj, parts8(), s.cam);
  const auto test_parts = extract_test_parts(s.depth, parts8());
  REQUIRE(test_parts.size() == train_parts.size());
  for (size_t i = 0; i < test_parts.size(); ++i) {
    CHECK((test_parts[i].center - train_parts[i].center).norm() == 0.0);
    CHECK(test_parts[i].patch.pixels == train_parts[i].patch.pixels);
    CHECK(!test_parts[i].privileged.has_value());  // appearance-only
    CHECK(train_parts[i].privileged.has_value());
  }
}

TEST_CASE("all-background image extracts nothing and yields no hypotheses") {
  const Scene s = table_scene(32);
  const Forest forest = tiny_forest(s);
  DepthImage blank{s.cam.width, s.cam.height};
  CHECK(extract_test_parts(blank, parts8()).empty());
  CHECK(estimate_pose(blank, forest, infer_cfg()).empty());
}

TEST_CASE("traverse on a single-leaf tree returns that leaf") {
  Tree tree;
  tree.nodes.emplace_back();
  tree.nodes[0].votes.push_back({Vec3(1, 2, 3), Vec3::Zero()});
  DepthPatch patch;
  patch.size = 8;
  patch.pixels.assign(64, 1.0f);
  CHECK(traverse(tree, patch, 10.0) == 0);
}

TEST_CASE("depth-1 tree with tau = +inf sends every part left") {
  Tree tree;
  tree.nodes.resize(3);
  tree.nodes[0].left = 1;
  tree.nodes[0].right = 2;
  tree.nodes[0].split.u = Eigen::Vector2d(1, 0);
  tree.nodes[0].split.v = Eigen::Vector2d(0, 1);
  tree.nodes[0].split.tau = std::numeric_limits<double>::infinity();
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    DepthPatch patch;
    patch.size = 8;
    patch.pixels.assign(64, float(rng.uniform(0.5, 3.0)));
    CHECK(traverse(tree, patch, 10.0) == 1);
  }
}

TEST_CASE("traversal matches an independent step-by-step replay on 100 parts") {
  const Scene s = table_scene(33);
  const Forest forest = tiny_forest(s);
  const auto parts = extract_test_parts(s.depth, parts8());
  REQUIRE(parts.size() >= 20);
  size_t checked = 0;
  for (const auto& part : parts) {
    if (checked >= 100) break;
    for (const Tree& tree : forest.trees) {
      // independent replay
      int id = 0;
      while (tree.nodes[id].left >= 0) {
        const auto& n = tree.nodes[id];
        const double f = split_feature(n.split.u, n.split.v, part.patch,
                                       forest.config.d_max);
        id = f < n.split.tau ? n.left : n.right;
      }
      CHECK(traverse(tree, part.patch, forest.config.d_max) == id);
      ++checked;
    }
  }
}

TEST_CASE("single zero-offset vote lands in the part center's bin") {
  const CameraIntrinsics cam = cam160();
  VoteAccumulator acc = VoteAccumulator::make(cam, infer_cfg());
  Part part;
  part.center = Vec3(33.5, 47.5, 2.2);
  const std::vector<LeafVote> votes = {{Vec3::Zero(), Vec3(0.1, 0.2, 0.3)}};
  cast_votes(part, votes, acc, 1.0);
  const int expect = acc.bin_index(33.5, 47.5, 2.2);
  REQUIRE(expect >= 0);
  CHECK(acc.weights[expect] == 1.0);
  CHECK(acc.total_weight() == 1.0);
  REQUIRE(acc.rotations.size() == 1);
  CHECK(acc.rotations[0].first == expect);
}

TEST_CASE("two parts voting the same bin accumulate additively") {
  const CameraIntrinsics cam = cam160();
  VoteAccumulator acc = VoteAccumulator::make(cam, infer_cfg());
  Part a, b;
  a.center = Vec3(50.0, 50.0, 1.0);
  b.center = Vec3(70.0, 80.0, 1.4);
  // both vote for (100, 100, 2.0)
  cast_votes(a, {{Vec3(50, 50, 1.0), Vec3::Zero()}}, acc, 1.0);
  cast_votes(b, {{Vec3(30, 20, 0.6), Vec3::Zero()}}, acc, 1.0);
  const int bin = acc.bin_index(100, 100, 2.0);
  CHECK(acc.weights[bin] == 2.0);
}

TEST_CASE("vote bookkeeping: total weight plus drops equals what was cast") {
  const CameraIntrinsics cam = cam160();
  VoteAccumulator acc = VoteAccumulator::make(cam, infer_cfg());
  Rng rng(2);
  double cast_weight = 0.0;
  for (int i = 0; i < 200; ++i) {
    Part part;
    part.center = Vec3(rng.uniform(0, cam.width), rng.uniform(0, cam.height),
                       rng.uniform(0.5, 6.0));
    std::vector<LeafVote> votes;
    const int n = 1 + int(rng.uniform_index(7));
    for (int v = 0; v < n; ++v)
      votes.push_back({Vec3(rng.uniform(-300, 300), rng.uniform(-300, 300),
                            rng.uniform(-4, 4)),
                       Vec3::Zero()});
    cast_votes(part, votes, acc, 1.0);
    cast_weight += 1.0;
  }
  CHECK(acc.total_weight() + acc.dropped ==
        doctest::Approx(cast_weight).epsilon(1e-9));
  CHECK(acc.dropped > 0.0);  // the fixture deliberately overshoots the grid
}

TEST_CASE("aggregate of one accumulator is itself") {
  const CameraIntrinsics cam = cam160();
  VoteAccumulator acc = VoteAccumulator::make(cam, infer_cfg());
  Part part;
  part.center = Vec3(10, 10, 1.0);
  cast_votes(part, {{Vec3::Zero(), Vec3::Zero()}}, acc, 1.0);
  const VoteAccumulator merged = aggregate({acc});
  CHECK(merged.weights == acc.weights);
}

TEST_CASE("aggregate of two identical accumulators is idempotent") {
  const CameraIntrinsics cam = cam160();
  VoteAccumulator acc = VoteAccumulator::make(cam, infer_cfg());
  Part part;
  part.center = Vec3(10, 10, 1.0);
  cast_votes(part, {{Vec3(5, 5, 0.5), Vec3::Zero()}}, acc, 1.0);
  const VoteAccumulator merged = aggregate({acc, acc});
  for (size_t i = 0; i < merged.weights.size(); ++i)
    CHECK(merged.weights[i] == acc.weights[i]);
}

TEST_CASE("aggregate is the per-bin arithmetic mean and is linear") {
  const CameraIntrinsics cam = cam160();
  InferenceConfig cfg = infer_cfg();
  Rng rng(3);
  std::vector<VoteAccumulator> accs;
  for (int t = 0; t < 4; ++t) {
    VoteAccumulator acc = VoteAccumulator::make(cam, cfg);
    for (int i = 0; i < 50; ++i) {
      Part part;
      part.center = Vec3(rng.uniform(0, cam.width), rng.uniform(0, cam.height),
                         rng.uniform(0.5, 6.0));
      cast_votes(part, {{Vec3::Zero(), Vec3::Zero()}}, acc, rng.uniform(0.1, 2.0));
    }
    accs.push_back(std::move(acc));
  }
  const VoteAccumulator merged = aggregate(accs);
  for (size_t b = 0; b < merged.weights.size(); ++b) {
    double mean = 0.0;
    for (const auto& acc : accs) mean += acc.weights[b];
    mean /= double(accs.size());
    CHECK(std::abs(merged.weights[b] - mean) <= 1e-12);
  }

  // linearity: scaling every input scales the mean
  std::vector<VoteAccumulator> scaled = accs;
  for (auto& acc : scaled)
    for (auto& w : acc.weights) w *= 3.0;
  const VoteAccumulator merged3 = aggregate(scaled);
  for (size_t b = 0; b < merged.weights.size(); ++b)
    CHECK(std::abs(merged3.weights[b] - 3.0 * merged.weights[b]) <= 1e-12);
}

TEST_CASE("mismatched accumulator grids are rejected") {
  const CameraIntrinsics cam = cam160();
  InferenceConfig a = infer_cfg(), b = infer_cfg();
  b.bin_z = 0.1;
  CHECK_THROWS_AS(
      aggregate({VoteAccumulator::make(cam, a), VoteAccumulator::make(cam, b)}),
      Error);
}

TEST_CASE("self-consistency: training view of a training instance is recovered") {
  const Scene s = table_scene(34);
  const Forest forest = tiny_forest(s);
  const InferenceConfig cfg = infer_cfg();
  const auto hyps = estimate_pose(s.depth, forest, cfg);
  REQUIRE(!hyps.empty());
  const auto& top = hyps[0];

  // mode within one bin of the ground-truth SSC projection
  CHECK(std::abs(top.image_point.x() - s.ssc_image.x()) <= 1.5 * cfg.bin_u);
  CHECK(std::abs(top.image_point.y() - s.ssc_image.y()) <= 1.5 * cfg.bin_v);
  CHECK(std::abs(top.image_point.z() - s.ssc_image.z()) <= 1.5 * cfg.bin_z);

  // rotation: every vote in the mode comes from this view, so the circular
  // mean must reproduce the view rotation almost exactly
  const Vec3 expected = s.view.pose.euler();
  const Mat3 err = RigidPose::euler_to_rotation(top.euler).transpose() *
                   RigidPose::euler_to_rotation(expected);
  const double angle = std::acos(std::clamp((err.trace() - 1.0) / 2.0, -1.0, 1.0));
  CHECK(angle < 0.2);

  // the metric center is exactly the back-projection of the mode bin center
  const double z = top.image_point.z();
  const Vec3 reprojected((top.image_point.x() - s.cam.cx) / s.cam.fx * z,
                         (top.image_point.y() - s.cam.cy) / s.cam.fy * z, z);
  CHECK((top.center - reprojected).norm() == 0.0);
}

TEST_CASE("two identical far-apart objects produce two symmetric modes") {
  CameraIntrinsics wide = cam160();
  wide.width = 320;
  wide.cx = 160.0;
  const Scene s = table_scene(35, 1, wide);
  const Forest forest = tiny_forest(s);

  // composite: copy the object 96 px to the right (a whole number of bins)
  DepthImage twin = s.depth;
  const int shift = 96;
  bool clipped = false;
  for (int y = 0; y < twin.height; ++y)
    for (int x = 0; x < twin.width; ++x) {
      const float d = s.depth.at(x, y);
      if (!DepthImage::is_foreground(d)) continue;
      if (x + shift >= twin.width) {
        clipped = true;
        continue;
      }
      twin.at(x + shift, y) = std::min(twin.at(x + shift, y), d);
    }
  REQUIRE(!clipped);  // fixture assumption: both copies fully visible

  InferenceConfig cfg = infer_cfg();
  cfg.top_k = 2;
  const auto hyps = estimate_pose(twin, forest, cfg);
  REQUIRE(hyps.size() == 2);
  CHECK(std::abs(std::abs(hyps[0].image_point.x() - hyps[1].image_point.x()) -
                 shift) <= cfg.bin_u);
  CHECK(std::abs(hyps[0].image_point.y() - hyps[1].image_point.y()) <= cfg.bin_v);
  const double ratio = hyps[1].score / hyps[0].score;
  CHECK(ratio > 0.95);  // symmetric scores within 5%
  CHECK(hyps[0].score >= hyps[1].score);  // sorted descending
}

TEST_CASE("hypotheses are sorted descending and top_k is respected") {
  const Scene s = table_scene(36);
  const Forest forest = tiny_forest(s);
  InferenceConfig cfg = infer_cfg();
  cfg.top_k = 5;
  const auto hyps = estimate_pose(s.depth, forest, cfg);
  REQUIRE(!hyps.empty());
  CHECK(hyps.size() <= 5);
  for (size_t i = 1; i < hyps.size(); ++i)
    CHECK(hyps[i - 1].score >= hyps[i].score);

  cfg.top_k = 1;
  CHECK(estimate_pose(s.depth, forest, cfg).size() == 1);
}

TEST_CASE("estimate_pose is deterministic") {
  const Scene s = table_scene(37);
  const Forest forest = tiny_forest(s);
  const auto a = estimate_pose(s.depth, forest, infer_cfg());
  const auto b = estimate_pose(s.depth, forest, infer_cfg());
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i].center - b[i].center).norm() == 0.0);
    CHECK(a[i].score == b[i].score);
  }
}

TEST_CASE("whole-bin image translation moves the top mode by the same bins") {
  const Scene s = table_scene(38, 3);
  const Forest forest = tiny_forest(s);
  const InferenceConfig cfg = infer_cfg();
  const auto base = estimate_pose(s.depth, forest, cfg);
  REQUIRE(!base.empty());

  const int shift_bins = 2;
  const int shift_px = int(cfg.bin_u) * shift_bins;
  DepthImage moved{s.depth.width, s.depth.height};
  bool clipped = false;
  for (int y = 0; y < s.depth.height; ++y)
    for (int x = 0; x < s.depth.width; ++x) {
      if (!DepthImage::is_foreground(s.depth.at(x, y))) continue;
      if (x + shift_px >= s.depth.width) {
        clipped = true;
        continue;
      }
      moved.at(x + shift_px, y) = s.depth.at(x, y);
    }
  REQUIRE(!clipped);

  const auto shifted = estimate_pose(moved, forest, cfg);
  REQUIRE(!shifted.empty());
  CHECK(shifted[0].image_point.x() - base[0].image_point.x() ==
        doctest::Approx(shift_px).epsilon(1e-12));
  CHECK(shifted[0].image_point.y() == base[0].image_point.y());
  CHECK(shifted[0].image_point.z() == base[0].image_point.z());
}
