#pragma once

#include <string>
#include <vector>

#include "isa/config.hpp"
#include "isa/eval.hpp"
#include "isa/generator.hpp"

namespace isa::pipeline {

// File layout under an output directory:
//   manifest.json, meshes/<id>.off, skeletons/<id>.json     (generate)
//   renders/<id>/view_NNN.isad + views.json                 (render)
//   ssc.json                                                (ssc)
//   dataset.isas                                            (extract)
//   forest_<tag>.isaf, forest_<tag>_growth.csv              (train)
//   hypotheses_<tag>/<id>/view_NNN.json                     (infer)
//   eval_<tag>.csv, eval_<tag>.json                         (eval)
// Stage outputs embed digests of their inputs; downstream stages verify them
// and fail fast with DigestMismatchError on mixed pipelines.

struct ManifestEntry {
  std::string id;
  std::string mesh_path;      // relative to the manifest directory
  std::string skeleton_path;  // relative to the manifest directory
  std::string split;          // "train" or "test"
};

struct Manifest {
  std::string category;
  uint64_t seed = 0;
  std::vector<ManifestEntry> instances;
  std::string directory;  // where the manifest file lives (set on load)

  std::vector<ManifestEntry> split_entries(const std::string& split) const;
};

Manifest load_manifest(const std::string& path);

// Writes meshes, exact skeletons, and the manifest. The first `train_count`
// instances are the train split, the rest test.
std::string generate(const std::string& category, int count, int train_count,
                     uint64_t seed, const std::string& out_dir);

// Renders train_views (or test_views) depth images per instance of the
// chosen split ("all", "train", "test") at radius_scale * instance diameter.
void render(const std::string& manifest_path, const PipelineConfig& cfg,
            const std::string& out_dir, const std::string& split = "all");

// SSC labels from the train split, per-instance SSC points for every
// instance.
std::string ssc(const std::string& manifest_path, const std::string& out_path);

// Builds the training set from the train split's renders.
std::string extract(const std::string& manifest_path, const std::string& ssc_path,
                    const std::string& renders_dir, const PipelineConfig& cfg,
                    const std::string& out_path);

std::string train(const std::string& dataset_path, const PipelineConfig& cfg,
                  const std::string& out_path, const std::string& growth_csv);

// Hypotheses for one depth image; optional debug overlay PNG.
void infer_file(const Forest& forest, const std::string& depth_path,
                const PipelineConfig& cfg, const std::string& out_json,
                const std::string& overlay_png = "",
                const std::string& forest_digest = "");

// Hypotheses for every rendered view of the chosen split.
void infer_renders(const std::string& forest_path, const std::string& manifest_path,
                   const std::string& renders_dir, const PipelineConfig& cfg,
                   const std::string& out_dir, const std::string& split = "test",
                   bool overlays = false);

EvalReport evaluate(const std::string& manifest_path, const std::string& ssc_path,
                    const std::string& renders_dir, const std::string& hypotheses_dir,
                    const PipelineConfig& cfg, const std::string& out_prefix,
                    const std::string& split = "test");

}  // namespace isa::pipeline
