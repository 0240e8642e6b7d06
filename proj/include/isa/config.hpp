#pragma once

#include <string>

#include "isa/dataset.hpp"
#include "isa/forest.hpp"
#include "isa/infer.hpp"

namespace isa {

struct RenderConfig {
  int train_views = 89;
  int test_views = 20;
  double radius_scale = 2.0;  // camera distance = scale * model diameter
  bool hemisphere = true;

  void validate() const;
};

struct EvalConfig {
  double coarseness = 0.3;   // z of the correctness inequality
  int sample_density = 4096; // surface samples for the evaluation cloud

  void validate() const;
};

// One config to drive every stage. All randomness derives from `seed`.
struct PipelineConfig {
  CameraIntrinsics camera;
  RenderConfig render;
  PartConfig parts;
  ForestConfig forest;
  InferenceConfig infer;
  EvalConfig eval;
  uint64_t seed = 0;
  int jobs = 1;

  void validate() const;

  static PipelineConfig from_json_file(const std::string& path);
  static PipelineConfig from_json_text(const std::string& text,
                                       const std::string& name = "<config>");
  std::string to_json() const;

  // Digest of the canonical JSON form; embedded in stage outputs.
  uint64_t digest() const;
};

}  // namespace isa
