#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "isa/config.hpp"
#include "isa/util.hpp"
#include "support.hpp"

using namespace isa;
using namespace isa::test;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(ISA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string tiny_config_json() {
  PipelineConfig cfg;
  cfg.camera.width = 128;
  cfg.camera.height = 96;
  cfg.camera.fx = cfg.camera.fy = 120.0;
  cfg.camera.cx = 64.0;
  cfg.camera.cy = 48.0;
  cfg.render.train_views = 8;
  cfg.render.test_views = 2;
  cfg.parts.patch_size = 16;
  cfg.parts.stride = 6;
  cfg.forest.tree_count = 2;
  cfg.forest.max_depth = 8;
  cfg.forest.min_samples = 4;
  cfg.forest.candidate_offsets = 8;
  cfg.forest.candidate_thresholds = 4;
  cfg.forest.leaf_vote_cap = 15;
  cfg.infer.z_max = 10.0;
  cfg.eval.sample_density = 256;
  cfg.seed = 3;
  cfg.forest.seed = 3;
  return cfg.to_json();
}

}  // namespace

TEST_CASE("cli end to end: generate, render, ssc, extract, train, infer, eval") {
  TempDir dir("cli_e2e");
  const std::string out = dir.path().string();
  const std::string config = write_text(dir.file("config.json"), tiny_config_json());
  const std::string base = "--config " + config + " --out-dir " + out + " --jobs 1 ";

  CHECK(run(base + "generate --category table --count 3 --train 2") == 0);
  CHECK(std::filesystem::exists(dir.file("manifest.json")));

  CHECK(run(base + "render") == 0);
  CHECK(std::filesystem::exists(dir.file("renders/table_002/views.json")));

  CHECK(run(base + "ssc") == 0);
  CHECK(run(base + "extract") == 0);
  CHECK(std::filesystem::exists(dir.file("dataset.isas")));

  CHECK(run(base + "train --quality q1,q2,q3") == 0);
  CHECK(std::filesystem::exists(dir.file("forest_q1q2q3.isaf")));
  CHECK(std::filesystem::exists(dir.file("forest_q1q2q3_growth.csv")));

  CHECK(run(base + "infer --forest " + dir.file("forest_q1q2q3.isaf") +
            " --renders " + dir.file("renders") + " --out " +
            dir.file("hypotheses")) == 0);
  CHECK(std::filesystem::exists(dir.file("hypotheses/table_002/view_000.json")));

  CHECK(run(base + "eval --hypotheses " + dir.file("hypotheses")) == 0);
  CHECK(std::filesystem::exists(dir.file("eval.csv")));
  CHECK(std::filesystem::exists(dir.file("eval.json")));

  // single-image mode with an overlay
  CHECK(run(base + "infer --forest " + dir.file("forest_q1q2q3.isaf") +
            " --depth " + dir.file("renders/table_002/view_001.isad") +
            " --out " + dir.file("single.json") + " --overlay") == 0);
  CHECK(std::filesystem::exists(dir.file("single.json")));
  CHECK(std::filesystem::exists(dir.file("single.png")));

  // the hypotheses file carries the schema fields
  std::ifstream hyp(dir.file("single.json"));
  std::string text((std::istreambuf_iterator<char>(hyp)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("\"center_m\"") != std::string::npos);
  CHECK(text.find("\"euler_rad\"") != std::string::npos);
  CHECK(text.find("\"score\"") != std::string::npos);
}

TEST_CASE("cli reruns with unchanged inputs are byte-identical") {
  TempDir a("cli_rerun_a");
  TempDir b("cli_rerun_b");
  for (const auto* dir : {&a, &b}) {
    const std::string out = dir->path().string();
    const std::string config =
        write_text(dir->file("config.json"), tiny_config_json());
    const std::string base = "--config " + config + " --out-dir " + out + " ";
    REQUIRE(run(base + "generate --category table --count 2 --train 2") == 0);
    REQUIRE(run(base + "render --split train") == 0);
    REQUIRE(run(base + "ssc") == 0);
    REQUIRE(run(base + "extract") == 0);
    REQUIRE(run(base + "train") == 0);
  }
  for (const std::string rel :
       {std::string("manifest.json"), std::string("ssc.json"),
        std::string("renders/table_001/view_003.isad"),
        std::string("dataset.isas"), std::string("forest_q1q2q3.isaf")}) {
    CAPTURE(rel);
    CHECK(hash_file(a.file(rel)) == hash_file(b.file(rel)));
  }
}

TEST_CASE("cli exit codes: 0 ok, 1 input error") {
  TempDir dir("cli_exit");
  const std::string out = dir.path().string();

  // unknown flag and unknown subcommand are input errors
  CHECK(run("frobnicate") == 1);
  CHECK(run("generate --no-such-flag") == 1);

  // missing input files are input errors with a nonzero exit
  CHECK(run("--out-dir " + out + " render --manifest " +
            dir.file("missing.json")) == 1);

  // bad quality mask
  REQUIRE(run("--out-dir " + out +
              " generate --category table --count 2 --train 2") == 0);
  CHECK(run("--out-dir " + out + " train --quality q7") == 1);

  // malformed config file
  write_text(dir.file("bad.json"), "{nope");
  CHECK(run("--config " + dir.file("bad.json") + " --out-dir " + out +
            " ssc") == 1);

  // help exits cleanly
  CHECK(run("--help") == 0);
}

TEST_CASE("cli seed override changes generated content") {
  TempDir a("cli_seed_a");
  TempDir b("cli_seed_b");
  REQUIRE(run("--out-dir " + a.path().string() +
              " --seed 1 generate --category table --count 1 --train 1") == 0);
  REQUIRE(run("--out-dir " + b.path().string() +
              " --seed 2 generate --category table --count 1 --train 1") == 0);
  CHECK(hash_file(a.file("meshes/table_000.off")) !=
        hash_file(b.file("meshes/table_000.off")));
}
