#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "isa/depth_io.hpp"
#include "isa/infer.hpp"
#include "isa/pipeline.hpp"
#include "support.hpp"

using namespace isa;
using namespace isa::test;

namespace {

PipelineConfig smoke_config() {
  PipelineConfig cfg;
  cfg.camera.width = 160;
  cfg.camera.height = 120;
  cfg.camera.fx = cfg.camera.fy = 150.0;
  cfg.camera.cx = 80.0;
  cfg.camera.cy = 60.0;
  cfg.render.train_views = 10;
  cfg.render.test_views = 3;
  cfg.parts.patch_size = 16;
  cfg.parts.stride = 6;
  cfg.forest.tree_count = 2;
  cfg.forest.max_depth = 10;
  cfg.forest.min_samples = 4;
  cfg.forest.candidate_offsets = 10;
  cfg.forest.candidate_thresholds = 5;
  cfg.forest.subset_fraction = 0.8;
  cfg.forest.leaf_vote_cap = 20;
  cfg.infer.z_max = 10.0;
  cfg.eval.sample_density = 512;
  cfg.seed = 7;
  cfg.forest.seed = 7;
  cfg.jobs = 1;
  return cfg;
}

}  // namespace

TEST_CASE("generated instances are deterministic and topology-consistent") {
  const auto a = generate_category("table", 6, 42);
  const auto b = generate_category("table", 6, 42);
  REQUIRE(a.size() == 6);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    REQUIRE(a[i].mesh.vertices.size() == b[i].mesh.vertices.size());
    for (size_t v = 0; v < a[i].mesh.vertices.size(); ++v)
      CHECK((a[i].mesh.vertices[v] - b[i].mesh.vertices[v]).norm() == 0.0);
  }
  std::vector<SkeletonGraph> graphs;
  for (const auto& inst : a) graphs.push_back(inst.skeleton);
  CHECK(validate_category_topology(graphs).size() == 8);

  std::vector<SkeletonGraph> chairs;
  for (const auto& inst : generate_category("chair", 4, 1))
    chairs.push_back(inst.skeleton);
  CHECK(validate_category_topology(chairs).size() == 10);
}

TEST_CASE("generated skeleton nodes match the analytic parameter formulas") {
  const uint64_t seed = 1234;
  const auto instances = generate_category("table", 4, seed);
  Rng root(seed);
  for (int i = 0; i < 4; ++i) {
    Rng rng = root.fork(uint64_t(i));
    const TableParams p = sample_table_params(rng);
    // independent recomputation of the node coordinates
    const double z_top = p.height / 2, z_under = z_top - p.top_t;
    const double z_floor = -p.height / 2;
    const double lx = p.top_w / 2 - p.inset, ly = p.top_d / 2 - p.inset;
    const Vec3 expected_center(0, 0, z_top - p.top_t / 2);
    const Vec3 expected_cabinet_top(lx - p.cabinet_w / 2, ly - p.cabinet_d / 2,
                                    z_under);
    const Vec3 expected_leg3_bottom(lx - p.leg_s / 2, -(ly - p.leg_s / 2),
                                    z_floor);
    const SkeletonGraph& g = instances[i].skeleton;
    CHECK((g.position(0) - expected_center).norm() == 0.0);
    CHECK((g.position(1) - expected_cabinet_top).norm() == 0.0);
    CHECK((g.position(8) - expected_leg3_bottom).norm() == 0.0);
  }
}

TEST_CASE("table parameters stay within the sampled ranges") {
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const TableParams p = sample_table_params(rng);
    CHECK(p.top_w >= 0.95);
    CHECK(p.top_w <= 1.55);
    CHECK(p.height >= 0.60);
    CHECK(p.height <= 0.80);
    CHECK(p.cabinet_w <= 0.40 * p.top_w);
    CHECK(p.cabinet_d <= 0.85 * p.top_d);
    // legs stay inside the slab
    CHECK(p.inset + p.leg_s <= std::min(p.top_w, p.top_d) / 2);
  }
}

TEST_CASE("full pipeline smoke run produces an end-to-end eval report") {
  TempDir dir("pipeline_smoke");
  const PipelineConfig cfg = smoke_config();
  const std::string out = dir.path().string();

  const std::string manifest = pipeline::generate("table", 3, 2, cfg.seed, out);
  pipeline::render(manifest, cfg, out, "all");
  const std::string ssc = pipeline::ssc(manifest, dir.file("ssc.json"));
  const std::string dataset = pipeline::extract(manifest, ssc, dir.file("renders"),
                                                cfg, dir.file("dataset.isas"));
  const std::string forest = pipeline::train(dataset, cfg, dir.file("forest.isaf"),
                                             dir.file("growth.csv"));
  pipeline::infer_renders(forest, manifest, dir.file("renders"), cfg,
                          dir.file("hypotheses"), "test");
  const EvalReport report =
      pipeline::evaluate(manifest, ssc, dir.file("renders"), dir.file("hypotheses"),
                         cfg, dir.file("eval"), "test");

  CHECK(report.cases.size() == 3);  // one unseen instance, three test views
  CHECK(report.recall_percent >= 0.0);
  CHECK(report.recall_percent <= 100.0);
  CHECK(std::filesystem::exists(dir.file("eval.csv")));
  CHECK(std::filesystem::exists(dir.file("eval.json")));
  CHECK(std::filesystem::exists(dir.file("growth.csv")));

  // growth log has the CSV header and at least one row per tree
  std::ifstream growth(dir.file("growth.csv"));
  std::string line;
  std::getline(growth, line);
  CHECK(line == "tree,level,nodes,mean_gain");
}

TEST_CASE("pipeline stages are byte-deterministic across reruns") {
  TempDir dir_a("pipeline_rerun_a");
  TempDir dir_b("pipeline_rerun_b");
  const PipelineConfig cfg = smoke_config();

  for (const auto* dir : {&dir_a, &dir_b}) {
    const std::string out = dir->path().string();
    const std::string manifest = pipeline::generate("table", 2, 1, cfg.seed, out);
    pipeline::render(manifest, cfg, out, "train");
    pipeline::ssc(manifest, dir->file("ssc.json"));
    pipeline::extract(manifest, dir->file("ssc.json"), dir->file("renders"), cfg,
                      dir->file("dataset.isas"));
    pipeline::train(dir->file("dataset.isas"), cfg, dir->file("forest.isaf"), "");
  }

  for (const std::string rel :
       {std::string("manifest.json"), std::string("meshes/table_000.off"),
        std::string("renders/table_000/view_000.isad"),
        std::string("renders/table_000/views.json"), std::string("ssc.json"),
        std::string("dataset.isas"), std::string("forest.isaf")}) {
    CAPTURE(rel);
    CHECK(hash_file(dir_a.file(rel)) == hash_file(dir_b.file(rel)));
  }
}

TEST_CASE("stage digest mismatches fail fast") {
  TempDir dir("pipeline_digest");
  const PipelineConfig cfg = smoke_config();
  const std::string out = dir.path().string();

  const std::string manifest = pipeline::generate("table", 2, 2, cfg.seed, out);
  pipeline::render(manifest, cfg, out, "train");
  pipeline::ssc(manifest, dir.file("ssc.json"));

  // regenerate the manifest with a different seed: downstream inputs now
  // refer to a stale manifest
  pipeline::generate("table", 2, 2, cfg.seed + 1, out);
  CHECK_THROWS_AS(pipeline::extract(manifest, dir.file("ssc.json"),
                                    dir.file("renders"), cfg,
                                    dir.file("dataset.isas")),
                  DigestMismatchError);
}

TEST_CASE("quality ablation configurations produce distinct usable forests") {
  TempDir dir("pipeline_ablation");
  PipelineConfig cfg = smoke_config();
  const std::string out = dir.path().string();

  const std::string manifest = pipeline::generate("table", 2, 2, cfg.seed, out);
  pipeline::render(manifest, cfg, out, "train");
  pipeline::ssc(manifest, dir.file("ssc.json"));
  pipeline::extract(manifest, dir.file("ssc.json"), dir.file("renders"), cfg,
                    dir.file("dataset.isas"));

  PipelineConfig q1_cfg = cfg;
  q1_cfg.forest.use_q2 = q1_cfg.forest.use_q3 = false;
  pipeline::train(dir.file("dataset.isas"), q1_cfg, dir.file("forest_q1.isaf"), "");
  pipeline::train(dir.file("dataset.isas"), cfg, dir.file("forest_q1q2q3.isaf"), "");

  const Forest f1 = load_forest(dir.file("forest_q1.isaf"));
  const Forest f123 = load_forest(dir.file("forest_q1q2q3.isaf"));
  CHECK(f1.config.quality_tag() == "q1");
  CHECK(f123.config.quality_tag() == "q1q2q3");
  CHECK(hash_file(dir.file("forest_q1.isaf")) !=
        hash_file(dir.file("forest_q1q2q3.isaf")));

  // both forests hypothesize on a rendered view
  const DepthImage depth = load_depth(dir.file("renders/table_000/view_000.isad"));
  CHECK(!estimate_pose(depth, f1, cfg.infer).empty());
  CHECK(!estimate_pose(depth, f123, cfg.infer).empty());
}

TEST_CASE("config JSON round trip preserves every field") {
  PipelineConfig cfg = smoke_config();
  cfg.forest.use_q2 = false;
  cfg.eval.coarseness = 0.25;
  const std::string text = cfg.to_json();
  const PipelineConfig back = PipelineConfig::from_json_text(text);
  CHECK(back.to_json() == text);
  CHECK(back.digest() == cfg.digest());
  CHECK(back.forest.use_q2 == false);
  CHECK(back.forest.use_q3 == true);
  CHECK(back.eval.coarseness == 0.25);
  CHECK(back.camera.width == 160);

  PipelineConfig other = cfg;
  other.forest.epsilon = 1e-5;
  CHECK(other.digest() != cfg.digest());
}

TEST_CASE("config validation rejects a quality mask without q1") {
  CHECK_THROWS_AS(
      PipelineConfig::from_json_text(R"({"forest":{"quality":["q2"]}})"),
      ConfigError);
}

TEST_CASE("manifest schema violations are reported") {
  TempDir dir("pipeline_manifest");
  write_text(dir.file("bad.json"), R"({"category":"x","seed":0,"instances":[
    {"id":"a","mesh":"m.off","skeleton":"s.json","split":"validation"}]})");
  CHECK_THROWS_AS(pipeline::load_manifest(dir.file("bad.json")), SchemaError);

  write_text(dir.file("empty.json"),
             R"({"category":"x","seed":0,"instances":[]})");
  CHECK_THROWS_AS(pipeline::load_manifest(dir.file("empty.json")), SchemaError);
}
