// Command-line driver for the category-level 6D pose pipeline. Subcommands
// mirror the pipeline stages; see README.md for the file formats.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include "isa/pipeline.hpp"
#include "isa/util.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = ".";
  int64_t seed = -1;  // -1: keep the config's seed
  int jobs = 0;       // 0: hardware concurrency
};

isa::PipelineConfig effective_config(const GlobalOptions& g) {
  isa::PipelineConfig cfg;
  if (!g.config_path.empty())
    cfg = isa::PipelineConfig::from_json_file(g.config_path);
  if (g.seed >= 0) {
    cfg.seed = uint64_t(g.seed);
    cfg.forest.seed = cfg.seed;
  }
  cfg.jobs = g.jobs > 0 ? g.jobs
                        : std::max(1u, std::thread::hardware_concurrency());
  cfg.validate();
  return cfg;
}

void apply_quality_flag(isa::ForestConfig& forest, const std::string& quality) {
  forest.use_q1 = forest.use_q2 = forest.use_q3 = false;
  std::string token;
  std::istringstream iss(quality);
  while (std::getline(iss, token, ',')) {
    if (token == "q1")
      forest.use_q1 = true;
    else if (token == "q2")
      forest.use_q2 = true;
    else if (token == "q3")
      forest.use_q3 = true;
    else
      throw isa::ConfigError("unknown quality term '" + token +
                             "' (expected q1,q2,q3)");
  }
  forest.validate();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Category-level 6D object pose estimation from depth images"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--config", global.config_path, "Pipeline config JSON")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", global.seed, "Override the config seed");
  app.add_option("--out-dir", global.out_dir, "Working directory for stage files");
  app.add_option("--jobs", global.jobs, "Worker threads (0 = auto)");
  app.fallthrough();

  // generate
  auto* gen = app.add_subcommand("generate", "Create a procedural category");
  std::string gen_category = "table";
  int gen_count = 6, gen_train = 4;
  gen->add_option("--category", gen_category, "table or chair");
  gen->add_option("--count", gen_count, "Total instances");
  gen->add_option("--train", gen_train, "Leading instances marked train");

  // render
  auto* ren = app.add_subcommand("render", "Render depth views for a manifest");
  std::string ren_manifest, ren_split = "all";
  ren->add_option("--manifest", ren_manifest, "Manifest path (default out-dir/manifest.json)");
  ren->add_option("--split", ren_split, "all, train or test");

  // ssc
  auto* ssc_cmd = app.add_subcommand("ssc", "Compute the category reference point");
  std::string ssc_manifest, ssc_out;
  ssc_cmd->add_option("--manifest", ssc_manifest, "Manifest path");
  ssc_cmd->add_option("--out", ssc_out, "Output JSON (default out-dir/ssc.json)");

  // extract
  auto* ext = app.add_subcommand("extract", "Build the training part dataset");
  std::string ext_manifest, ext_ssc, ext_renders, ext_out;
  ext->add_option("--manifest", ext_manifest, "Manifest path");
  ext->add_option("--ssc", ext_ssc, "SSC JSON path");
  ext->add_option("--renders", ext_renders, "Renders directory");
  ext->add_option("--out", ext_out, "Output dataset (default out-dir/dataset.isas)");

  // train
  auto* trn = app.add_subcommand("train", "Train a forest from a dataset");
  std::string trn_dataset, trn_out, trn_quality;
  trn->add_option("--dataset", trn_dataset, "Dataset path");
  trn->add_option("--quality", trn_quality, "Quality mask, e.g. q1 or q1,q2,q3");
  trn->add_option("--out", trn_out, "Output forest (default out-dir/forest_<tag>.isaf)");

  // infer
  auto* inf = app.add_subcommand("infer", "Estimate poses from depth images");
  std::string inf_forest, inf_depth, inf_renders, inf_manifest, inf_out;
  std::string inf_split = "test";
  bool inf_overlay = false;
  inf->add_option("--forest", inf_forest, "Forest path")->required();
  inf->add_option("--depth", inf_depth, "Single depth image (ISAD or 16-bit PNG)");
  inf->add_option("--renders", inf_renders, "Renders directory (batch mode)");
  inf->add_option("--manifest", inf_manifest, "Manifest for batch mode");
  inf->add_option("--split", inf_split, "Batch split (default test)");
  inf->add_option("--out", inf_out, "Output JSON file or directory");
  inf->add_flag("--overlay", inf_overlay, "Also write debug overlay PNGs");

  // eval
  auto* evl = app.add_subcommand("eval", "Score hypotheses against ground truth");
  std::string evl_manifest, evl_ssc, evl_renders, evl_hyp, evl_prefix;
  std::string evl_split = "test";
  evl->add_option("--manifest", evl_manifest, "Manifest path");
  evl->add_option("--ssc", evl_ssc, "SSC JSON path");
  evl->add_option("--renders", evl_renders, "Renders directory (ground truth poses)");
  evl->add_option("--hypotheses", evl_hyp, "Hypotheses directory")->required();
  evl->add_option("--split", evl_split, "Split to score (default test)");
  evl->add_option("--out-prefix", evl_prefix, "Report path prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // bad flags are input errors
  }

  try {
    const isa::PipelineConfig cfg = effective_config(global);
    const fs::path out_dir = global.out_dir;
    const auto def = [&](const std::string& given, const std::string& fallback) {
      return given.empty() ? (out_dir / fallback).string() : given;
    };

    if (*gen) {
      const uint64_t seed = global.seed >= 0 ? uint64_t(global.seed) : cfg.seed;
      isa::pipeline::generate(gen_category, gen_count, gen_train, seed,
                              global.out_dir);
    } else if (*ren) {
      isa::pipeline::render(def(ren_manifest, "manifest.json"), cfg,
                            global.out_dir, ren_split);
    } else if (*ssc_cmd) {
      isa::pipeline::ssc(def(ssc_manifest, "manifest.json"),
                         def(ssc_out, "ssc.json"));
    } else if (*ext) {
      isa::pipeline::extract(def(ext_manifest, "manifest.json"),
                             def(ext_ssc, "ssc.json"), def(ext_renders, "renders"),
                             cfg, def(ext_out, "dataset.isas"));
    } else if (*trn) {
      isa::PipelineConfig train_cfg = cfg;
      if (!trn_quality.empty())
        apply_quality_flag(train_cfg.forest, trn_quality);
      const std::string tag = train_cfg.forest.quality_tag();
      const std::string out = def(trn_out, "forest_" + tag + ".isaf");
      const std::string growth =
          fs::path(out).replace_extension().string() + "_growth.csv";
      isa::pipeline::train(def(trn_dataset, "dataset.isas"), train_cfg, out, growth);
    } else if (*inf) {
      if (!inf_depth.empty()) {
        const std::string out = def(inf_out, "hypotheses.json");
        const isa::Forest forest = isa::load_forest(inf_forest);
        const std::string overlay =
            inf_overlay ? fs::path(out).replace_extension(".png").string() : "";
        isa::pipeline::infer_file(forest, inf_depth, cfg, out, overlay,
                                  isa::hex_digest(isa::hash_file(inf_forest)));
      } else {
        isa::pipeline::infer_renders(
            inf_forest, def(inf_manifest, "manifest.json"),
            def(inf_renders, "renders"), cfg, def(inf_out, "hypotheses"),
            inf_split, inf_overlay);
      }
    } else if (*evl) {
      isa::pipeline::evaluate(def(evl_manifest, "manifest.json"),
                              def(evl_ssc, "ssc.json"), def(evl_renders, "renders"),
                              evl_hyp, cfg, def(evl_prefix, "eval"), evl_split);
    }
    return 0;
  } catch (const isa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
