#include "isa/config.hpp"

#include <fstream>

#include <json.hpp>

#include "isa/util.hpp"

namespace isa {

using nlohmann::json;

void RenderConfig::validate() const {
  if (train_views < 1 || test_views < 1)
    throw ConfigError("view counts must be >= 1");
  if (!(radius_scale > 0.0)) throw ConfigError("radius_scale must be positive");
}

void EvalConfig::validate() const {
  if (!(coarseness > 0.0)) throw ConfigError("eval coarseness z must be positive");
  if (sample_density < 1) throw ConfigError("eval sample_density must be >= 1");
}

void PipelineConfig::validate() const {
  camera.validate();
  render.validate();
  parts.validate();
  forest.validate();
  infer.validate();
  eval.validate();
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

namespace {

// Quality mask round-trips as a list like ["q1","q2","q3"].
json quality_mask_to_json(const ForestConfig& f) {
  json mask = json::array();
  mask.push_back("q1");
  if (f.use_q2) mask.push_back("q2");
  if (f.use_q3) mask.push_back("q3");
  return mask;
}

void quality_mask_from_json(const json& mask, ForestConfig& f) {
  f.use_q1 = f.use_q2 = f.use_q3 = false;
  for (const auto& entry : mask) {
    const std::string name = entry.get<std::string>();
    if (name == "q1")
      f.use_q1 = true;
    else if (name == "q2")
      f.use_q2 = true;
    else if (name == "q3")
      f.use_q3 = true;
    else
      throw ConfigError("unknown quality term '" + name + "'");
  }
  if (!f.use_q1) throw ConfigError("the quality mask must always include q1");
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text,
                                              const std::string& name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw MalformedFileError(name + ": " + e.what());
  }

  PipelineConfig cfg;
  try {
    if (j.contains("camera")) {
      const json& c = j["camera"];
      maybe(c, "fx", cfg.camera.fx);
      maybe(c, "fy", cfg.camera.fy);
      maybe(c, "cx", cfg.camera.cx);
      maybe(c, "cy", cfg.camera.cy);
      maybe(c, "width", cfg.camera.width);
      maybe(c, "height", cfg.camera.height);
    }
    if (j.contains("render")) {
      const json& c = j["render"];
      maybe(c, "train_views", cfg.render.train_views);
      maybe(c, "test_views", cfg.render.test_views);
      maybe(c, "radius_scale", cfg.render.radius_scale);
      maybe(c, "hemisphere", cfg.render.hemisphere);
    }
    if (j.contains("parts")) {
      const json& c = j["parts"];
      maybe(c, "patch_size", cfg.parts.patch_size);
      maybe(c, "stride", cfg.parts.stride);
      maybe(c, "min_foreground", cfg.parts.min_foreground);
    }
    if (j.contains("forest")) {
      const json& c = j["forest"];
      maybe(c, "tree_count", cfg.forest.tree_count);
      maybe(c, "max_depth", cfg.forest.max_depth);
      maybe(c, "min_samples", cfg.forest.min_samples);
      maybe(c, "candidate_offsets", cfg.forest.candidate_offsets);
      maybe(c, "candidate_thresholds", cfg.forest.candidate_thresholds);
      maybe(c, "offset_radius", cfg.forest.offset_radius);
      maybe(c, "subset_fraction", cfg.forest.subset_fraction);
      maybe(c, "leaf_vote_cap", cfg.forest.leaf_vote_cap);
      maybe(c, "epsilon", cfg.forest.epsilon);
      maybe(c, "gain_floor", cfg.forest.gain_floor);
      maybe(c, "d_max", cfg.forest.d_max);
      maybe(c, "weight_q1", cfg.forest.weight_q1);
      maybe(c, "weight_q2", cfg.forest.weight_q2);
      maybe(c, "weight_q3", cfg.forest.weight_q3);
      if (c.contains("quality")) quality_mask_from_json(c["quality"], cfg.forest);
    }
    if (j.contains("infer")) {
      const json& c = j["infer"];
      maybe(c, "bin_u", cfg.infer.bin_u);
      maybe(c, "bin_v", cfg.infer.bin_v);
      maybe(c, "bin_z", cfg.infer.bin_z);
      maybe(c, "z_min", cfg.infer.z_min);
      maybe(c, "z_max", cfg.infer.z_max);
      maybe(c, "smoothing_sigma", cfg.infer.smoothing_sigma);
      maybe(c, "nms_radius", cfg.infer.nms_radius);
      maybe(c, "top_k", cfg.infer.top_k);
    }
    if (j.contains("eval")) {
      const json& c = j["eval"];
      maybe(c, "coarseness", cfg.eval.coarseness);
      maybe(c, "sample_density", cfg.eval.sample_density);
    }
    maybe(j, "seed", cfg.seed);
    maybe(j, "jobs", cfg.jobs);
  } catch (const json::exception& e) {
    throw SchemaError(name + ": " + e.what());
  }

  cfg.forest.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text, path);
}

std::string PipelineConfig::to_json() const {
  json j;
  j["camera"] = {{"fx", camera.fx},   {"fy", camera.fy},
                 {"cx", camera.cx},   {"cy", camera.cy},
                 {"width", camera.width}, {"height", camera.height}};
  j["render"] = {{"train_views", render.train_views},
                 {"test_views", render.test_views},
                 {"radius_scale", render.radius_scale},
                 {"hemisphere", render.hemisphere}};
  j["parts"] = {{"patch_size", parts.patch_size},
                {"stride", parts.stride},
                {"min_foreground", parts.min_foreground}};
  j["forest"] = {{"tree_count", forest.tree_count},
                 {"max_depth", forest.max_depth},
                 {"min_samples", forest.min_samples},
                 {"candidate_offsets", forest.candidate_offsets},
                 {"candidate_thresholds", forest.candidate_thresholds},
                 {"offset_radius", forest.offset_radius},
                 {"subset_fraction", forest.subset_fraction},
                 {"leaf_vote_cap", forest.leaf_vote_cap},
                 {"epsilon", forest.epsilon},
                 {"gain_floor", forest.gain_floor},
                 {"d_max", forest.d_max},
                 {"quality", quality_mask_to_json(forest)},
                 {"weight_q1", forest.weight_q1},
                 {"weight_q2", forest.weight_q2},
                 {"weight_q3", forest.weight_q3}};
  j["infer"] = {{"bin_u", infer.bin_u},
                {"bin_v", infer.bin_v},
                {"bin_z", infer.bin_z},
                {"z_min", infer.z_min},
                {"z_max", infer.z_max},
                {"smoothing_sigma", infer.smoothing_sigma},
                {"nms_radius", infer.nms_radius},
                {"top_k", infer.top_k}};
  j["eval"] = {{"coarseness", eval.coarseness},
               {"sample_density", eval.sample_density}};
  j["seed"] = seed;
  j["jobs"] = jobs;
  return j.dump(2);
}

uint64_t PipelineConfig::digest() const { return fnv1a(to_json()); }

}  // namespace isa
