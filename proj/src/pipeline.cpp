#include "isa/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>

#include <json.hpp>

#include "isa/depth_io.hpp"
#include "isa/infer.hpp"
#include "isa/mesh_io.hpp"
#include "isa/util.hpp"

namespace isa::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void emit_summary(const json& j) { std::cout << j.dump() << std::endl; }

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw MalformedFileError(path + ": " + e.what());
  }
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw Error("write failure: " + path);
}

std::string view_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "view_%03d", index);
  return buf;
}

// Chunked parallel loop; item order within outputs is the caller's concern.
void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::future<void>> workers;
  const int worker_count = std::min(jobs, n);
  for (int w = 0; w < worker_count; ++w)
    workers.push_back(std::async(std::launch::async, [&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    }));
  for (auto& f : workers) f.get();
}

json pose_to_json(const RigidPose& pose) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(pose.rotation()(r, c));
  return json{{"rotation", rot},
              {"translation", {pose.translation().x(), pose.translation().y(),
                               pose.translation().z()}}};
}

RigidPose pose_from_json(const json& j) {
  Mat3 rot;
  const auto& r = j.at("rotation");
  if (r.size() != 9) throw SchemaError("pose rotation must have 9 entries");
  for (int i = 0; i < 9; ++i) rot(i / 3, i % 3) = r[i].get<double>();
  const auto& t = j.at("translation");
  return RigidPose(rot, Vec3(t.at(0).get<double>(), t.at(1).get<double>(),
                             t.at(2).get<double>()));
}

double instance_diameter(const Mesh& mesh, const EvalConfig& eval_cfg,
                         const std::string& id) {
  const PointCloud cloud =
      sample_surface(mesh, eval_cfg.sample_density, fnv1a(id));
  return model_diameter(cloud);
}

struct SscFile {
  std::vector<int> labels;
  std::map<std::string, Vec3> points;  // by instance id
  std::string manifest_digest;
};

SscFile load_ssc_file(const std::string& path) {
  const json j = load_json(path);
  SscFile out;
  try {
    out.manifest_digest = j.at("manifest_digest").get<std::string>();
    out.labels = j.at("labels").get<std::vector<int>>();
    for (const auto& ji : j.at("instances"))
      out.points[ji.at("id").get<std::string>()] =
          Vec3(ji.at("x").get<double>(), ji.at("y").get<double>(),
               ji.at("z").get<double>());
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return out;
}

void check_manifest_digest(const std::string& stored, const std::string& manifest_path,
                           const std::string& consumer) {
  const std::string actual = hex_digest(hash_file(manifest_path));
  if (stored != actual)
    throw DigestMismatchError(consumer + " was produced from a different manifest (" +
                              stored + " != " + actual + ")");
}

struct ViewRecord {
  int index = 0;
  std::string file;
  RigidPose pose;
};

struct ViewsFile {
  std::string instance;
  std::string split;
  double radius = 0.0;
  std::vector<ViewRecord> views;
  std::string manifest_digest;
};

ViewsFile load_views_file(const std::string& path) {
  const json j = load_json(path);
  ViewsFile out;
  try {
    out.instance = j.at("instance").get<std::string>();
    out.split = j.at("split").get<std::string>();
    out.radius = j.at("radius").get<double>();
    out.manifest_digest = j.at("manifest_digest").get<std::string>();
    for (const auto& jv : j.at("views")) {
      ViewRecord rec;
      rec.index = jv.at("index").get<int>();
      rec.file = jv.at("file").get<std::string>();
      rec.pose = pose_from_json(jv.at("pose"));
      out.views.push_back(rec);
    }
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return out;
}

}  // namespace

std::vector<ManifestEntry> Manifest::split_entries(const std::string& split) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : instances)
    if (split == "all" || e.split == split) out.push_back(e);
  return out;
}

Manifest load_manifest(const std::string& path) {
  const json j = load_json(path);
  Manifest m;
  try {
    m.category = j.at("category").get<std::string>();
    m.seed = j.at("seed").get<uint64_t>();
    for (const auto& ji : j.at("instances")) {
      ManifestEntry e;
      e.id = ji.at("id").get<std::string>();
      e.mesh_path = ji.at("mesh").get<std::string>();
      e.skeleton_path = ji.at("skeleton").get<std::string>();
      e.split = ji.at("split").get<std::string>();
      if (e.split != "train" && e.split != "test")
        throw SchemaError(path + ": split must be train or test");
      m.instances.push_back(e);
    }
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  if (m.split_entries("train").empty())
    throw SchemaError(path + ": manifest needs at least one train instance");
  m.directory = fs::path(path).parent_path().string();
  return m;
}

std::string generate(const std::string& category, int count, int train_count,
                     uint64_t seed, const std::string& out_dir) {
  if (train_count < 1 || train_count > count)
    throw ConfigError("train count must be in [1, count]");
  const auto instances = generate_category(category, count, seed);

  fs::create_directories(fs::path(out_dir) / "meshes");
  fs::create_directories(fs::path(out_dir) / "skeletons");

  json j;
  j["category"] = category;
  j["seed"] = seed;
  j["instances"] = json::array();
  for (int i = 0; i < count; ++i) {
    const auto& inst = instances[i];
    const std::string mesh_rel = "meshes/" + inst.id + ".off";
    const std::string skel_rel = "skeletons/" + inst.id + ".json";
    save_off(inst.mesh, (fs::path(out_dir) / mesh_rel).string());
    save_skeleton(inst.skeleton, (fs::path(out_dir) / skel_rel).string());
    j["instances"].push_back({{"id", inst.id},
                              {"mesh", mesh_rel},
                              {"skeleton", skel_rel},
                              {"split", i < train_count ? "train" : "test"}});
  }
  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  write_json(j, manifest_path);
  emit_summary({{"stage", "generate"},
                {"category", category},
                {"instances", count},
                {"train", train_count},
                {"manifest", manifest_path}});
  return manifest_path;
}

void render(const std::string& manifest_path, const PipelineConfig& cfg,
            const std::string& out_dir, const std::string& split) {
  cfg.validate();
  const Manifest manifest = load_manifest(manifest_path);
  const std::string manifest_digest = hex_digest(hash_file(manifest_path));
  const auto entries = manifest.split_entries(split);
  if (entries.empty()) throw ConfigError("no instances in split '" + split + "'");

  size_t images = 0;
  for (const auto& entry : entries) {
    const Mesh mesh =
        load_mesh((fs::path(manifest.directory) / entry.mesh_path).string());
    const double radius =
        cfg.render.radius_scale * instance_diameter(mesh, cfg.eval, entry.id);
    const int n_views =
        entry.split == "train" ? cfg.render.train_views : cfg.render.test_views;
    const auto views = sample_viewpoints(n_views, radius, cfg.render.hemisphere);

    const fs::path dir = fs::path(out_dir) / "renders" / entry.id;
    fs::create_directories(dir);

    json jviews;
    jviews["instance"] = entry.id;
    jviews["split"] = entry.split;
    jviews["radius"] = radius;
    jviews["manifest_digest"] = manifest_digest;
    jviews["camera"] = {{"fx", cfg.camera.fx}, {"fy", cfg.camera.fy},
                        {"cx", cfg.camera.cx}, {"cy", cfg.camera.cy},
                        {"width", cfg.camera.width}, {"height", cfg.camera.height}};
    jviews["views"] = json::array();
    for (const auto& view : views)
      jviews["views"].push_back({{"index", view.index},
                                 {"file", view_stem(view.index) + ".isad"},
                                 {"pose", pose_to_json(view.pose)}});

    parallel_for(int(views.size()), cfg.jobs, [&](int i) {
      const DepthImage depth = render_depth(mesh, views[i], cfg.camera);
      save_depth(depth, (dir / (view_stem(views[i].index) + ".isad")).string());
    });
    write_json(jviews, (dir / "views.json").string());
    images += views.size();
  }
  emit_summary({{"stage", "render"},
                {"split", split},
                {"instances", entries.size()},
                {"images", images},
                {"out", (fs::path(out_dir) / "renders").string()}});
}

std::string ssc(const std::string& manifest_path, const std::string& out_path) {
  const Manifest manifest = load_manifest(manifest_path);

  std::vector<Mesh> train_meshes;
  std::vector<SkeletonGraph> train_graphs;
  std::vector<SkeletonGraph> all_graphs;
  for (const auto& entry : manifest.instances) {
    SkeletonGraph graph =
        load_skeleton((fs::path(manifest.directory) / entry.skeleton_path).string());
    if (entry.split == "train") {
      train_meshes.push_back(
          load_mesh((fs::path(manifest.directory) / entry.mesh_path).string()));
      train_graphs.push_back(graph);
    }
    all_graphs.push_back(std::move(graph));
  }
  validate_category_topology(all_graphs);
  const SscResult result = compute_ssc(train_meshes, train_graphs);

  json j;
  j["category"] = manifest.category;
  j["manifest_digest"] = hex_digest(hash_file(manifest_path));
  j["labels"] = result.labels;
  j["instances"] = json::array();
  for (size_t i = 0; i < manifest.instances.size(); ++i) {
    Vec3 p = Vec3::Zero();
    for (int label : result.labels) p += all_graphs[i].position(label);
    p /= double(result.labels.size());
    j["instances"].push_back({{"id", manifest.instances[i].id},
                              {"x", p.x()},
                              {"y", p.y()},
                              {"z", p.z()}});
  }
  write_json(j, out_path);
  emit_summary({{"stage", "ssc"},
                {"labels", result.labels},
                {"instances", manifest.instances.size()},
                {"out", out_path}});
  return out_path;
}

std::string extract(const std::string& manifest_path, const std::string& ssc_path,
                    const std::string& renders_dir, const PipelineConfig& cfg,
                    const std::string& out_path) {
  cfg.validate();
  const Manifest manifest = load_manifest(manifest_path);
  const SscFile ssc_file = load_ssc_file(ssc_path);
  check_manifest_digest(ssc_file.manifest_digest, manifest_path, ssc_path);

  TrainingSet set;
  set.category = manifest.category;
  set.part_config = cfg.parts;
  set.ssc_labels = ssc_file.labels;
  {
    uint64_t h = fnv1a(hex_digest(hash_file(manifest_path)));
    h = fnv1a(hex_digest(hash_file(ssc_path)), h);
    h = fnv1a(hex_digest(cfg.digest()), h);
    set.source_digest = h;
  }

  const auto train_entries = manifest.split_entries("train");
  for (const auto& entry : train_entries) {
    const SkeletonGraph graph =
        load_skeleton((fs::path(manifest.directory) / entry.skeleton_path).string());
    if (set.parts_per_instance.empty()) {
      set.node_count = graph.node_count();
      set.link_count = int(graph.links.size());
      set.topology_digest = topology_digest(graph);
    } else if (topology_digest(graph) != set.topology_digest) {
      throw TopologyMismatchError("instance " + entry.id +
                                  " does not match the category topology");
    }

    const auto it = ssc_file.points.find(entry.id);
    if (it == ssc_file.points.end())
      throw SchemaError(ssc_path + ": no SSC point for instance " + entry.id);
    const Vec3 ssc_point = it->second;

    const fs::path dir = fs::path(renders_dir) / entry.id;
    const ViewsFile views = load_views_file((dir / "views.json").string());
    check_manifest_digest(views.manifest_digest, manifest_path,
                          (dir / "views.json").string());

    std::vector<std::vector<Part>> per_view(views.views.size());
    parallel_for(int(views.views.size()), cfg.jobs, [&](int i) {
      const ViewRecord& rec = views.views[i];
      const DepthImage depth = load_depth((dir / rec.file).string());
      const Viewpoint view{rec.pose, rec.index};
      const ProjectedSkeleton proj = project_skeleton(graph, view, cfg.camera);
      per_view[i] = extract_training_parts(depth, view, ssc_point, proj,
                                           cfg.parts, cfg.camera);
    });

    std::vector<Part> parts;
    for (auto& v : per_view)
      for (auto& p : v) parts.push_back(std::move(p));
    set.parts_per_instance.push_back(std::move(parts));
  }

  save_dataset(set, out_path);
  emit_summary({{"stage", "extract"},
                {"instances", set.instance_count()},
                {"parts", set.total_parts()},
                {"out", out_path}});
  return out_path;
}

std::string train(const std::string& dataset_path, const PipelineConfig& cfg,
                  const std::string& out_path, const std::string& growth_csv) {
  cfg.validate();
  const TrainingSet set = load_dataset(dataset_path);
  Forest forest = train_forest(set, cfg.forest, cfg.jobs);
  forest.meta.camera = cfg.camera;
  forest.meta.dataset_digest = hash_file(dataset_path);
  save_forest(forest, out_path);
  if (!growth_csv.empty()) write_growth_log(forest, growth_csv);

  size_t nodes = 0;
  for (const auto& tree : forest.trees) nodes += tree.nodes.size();
  emit_summary({{"stage", "train"},
                {"quality", cfg.forest.quality_tag()},
                {"trees", forest.trees.size()},
                {"nodes", nodes},
                {"parts", set.total_parts()},
                {"out", out_path}});
  return out_path;
}

void infer_file(const Forest& forest, const std::string& depth_path,
                const PipelineConfig& cfg, const std::string& out_json,
                const std::string& overlay_png, const std::string& forest_digest) {
  const DepthImage depth = import_depth(depth_path);
  const auto hypotheses = estimate_pose(depth, forest, cfg.infer);

  json j;
  j["depth_file"] = fs::path(depth_path).filename().string();
  j["category"] = forest.meta.category;
  if (!forest_digest.empty()) j["forest_digest"] = forest_digest;
  j["hypotheses"] = json::array();
  for (const auto& h : hypotheses)
    j["hypotheses"].push_back(
        {{"center_m", {h.center.x(), h.center.y(), h.center.z()}},
         {"euler_rad", {h.euler.x(), h.euler.y(), h.euler.z()}},
         {"score", h.score},
         {"image_point", {h.image_point.x(), h.image_point.y(), h.image_point.z()}}});
  write_json(j, out_json);

  if (!overlay_png.empty()) {
    // Depth rendered as grayscale, top hypothesis as a crosshair.
    RgbImage img(depth.width, depth.height);
    float lo = 1e9f, hi = 0.0f;
    for (float d : depth.pixels)
      if (DepthImage::is_foreground(d)) {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
    const float span = hi > lo ? hi - lo : 1.0f;
    for (int y = 0; y < depth.height; ++y)
      for (int x = 0; x < depth.width; ++x) {
        const float d = depth.at(x, y);
        if (!DepthImage::is_foreground(d)) continue;
        const auto g = uint8_t(235.0f - 180.0f * (d - lo) / span);
        img.set(x, y, g, g, g);
      }
    for (const auto& h : hypotheses) {
      const int cx = int(std::lround(h.image_point.x()));
      const int cy = int(std::lround(h.image_point.y()));
      for (int o = -6; o <= 6; ++o) {
        img.set(cx + o, cy, 255, 40, 40);
        img.set(cx, cy + o, 255, 40, 40);
      }
      break;  // top-1 marker only
    }
    save_rgb_png(img, overlay_png);
  }
}

void infer_renders(const std::string& forest_path, const std::string& manifest_path,
                   const std::string& renders_dir, const PipelineConfig& cfg,
                   const std::string& out_dir, const std::string& split,
                   bool overlays) {
  cfg.validate();
  const Forest forest = load_forest(forest_path);
  const std::string forest_digest = hex_digest(hash_file(forest_path));
  const Manifest manifest = load_manifest(manifest_path);
  const auto entries = manifest.split_entries(split);
  if (entries.empty()) throw ConfigError("no instances in split '" + split + "'");

  size_t images = 0;
  for (const auto& entry : entries) {
    const fs::path in_dir = fs::path(renders_dir) / entry.id;
    const ViewsFile views = load_views_file((in_dir / "views.json").string());
    check_manifest_digest(views.manifest_digest, manifest_path,
                          (in_dir / "views.json").string());
    const fs::path dir = fs::path(out_dir) / entry.id;
    fs::create_directories(dir);

    parallel_for(int(views.views.size()), cfg.jobs, [&](int i) {
      const ViewRecord& rec = views.views[i];
      const std::string stem = fs::path(rec.file).stem().string();
      const std::string out_json = (dir / (stem + ".json")).string();
      infer_file(forest, (in_dir / rec.file).string(), cfg, out_json,
                 overlays ? (dir / (stem + ".png")).string() : "",
                 forest_digest);
    });
    images += views.views.size();
  }
  emit_summary({{"stage", "infer"},
                {"split", split},
                {"images", images},
                {"forest", forest_path},
                {"out", out_dir}});
}

EvalReport evaluate(const std::string& manifest_path, const std::string& ssc_path,
                    const std::string& renders_dir, const std::string& hypotheses_dir,
                    const PipelineConfig& cfg, const std::string& out_prefix,
                    const std::string& split) {
  cfg.validate();
  const Manifest manifest = load_manifest(manifest_path);
  const SscFile ssc_file = load_ssc_file(ssc_path);
  check_manifest_digest(ssc_file.manifest_digest, manifest_path, ssc_path);

  std::string forest_digest;
  std::vector<CaseResult> cases;
  const auto entries = manifest.split_entries(split);
  if (entries.empty()) throw ConfigError("no instances in split '" + split + "'");

  for (const auto& entry : entries) {
    const Mesh mesh =
        load_mesh((fs::path(manifest.directory) / entry.mesh_path).string());
    const auto it = ssc_file.points.find(entry.id);
    if (it == ssc_file.points.end())
      throw SchemaError(ssc_path + ": no SSC point for instance " + entry.id);
    const Vec3 ssc_point = it->second;

    PointCloud cloud =
        sample_surface(mesh, cfg.eval.sample_density, fnv1a(entry.id));
    for (auto& p : cloud.points) p -= ssc_point;  // express in the SSC frame
    const double diameter = model_diameter(cloud);

    const fs::path rdir = fs::path(renders_dir) / entry.id;
    const ViewsFile views = load_views_file((rdir / "views.json").string());
    check_manifest_digest(views.manifest_digest, manifest_path,
                          (rdir / "views.json").string());

    for (const ViewRecord& rec : views.views) {
      const std::string stem = fs::path(rec.file).stem().string();
      const std::string hyp_path =
          (fs::path(hypotheses_dir) / entry.id / (stem + ".json")).string();
      const json hyp = load_json(hyp_path);

      const std::string this_digest =
          hyp.value("forest_digest", std::string("<missing>"));
      if (forest_digest.empty())
        forest_digest = this_digest;
      else if (forest_digest != this_digest)
        throw DigestMismatchError(hyp_path + ": hypotheses from mixed forests");

      CaseResult result;
      result.id = entry.id + "/" + stem;
      result.threshold = cfg.eval.coarseness * diameter;
      if (hyp.at("hypotheses").empty()) {
        result.omega = std::numeric_limits<double>::infinity();
        result.correct = false;
      } else {
        const json& top = hyp.at("hypotheses").at(0);
        const auto& c = top.at("center_m");
        const auto& e = top.at("euler_rad");
        EvalCase ec;
        ec.cloud = cloud;
        ec.ground_truth = RigidPose(
            rec.pose.rotation(), rec.pose.apply(ssc_point));
        ec.estimate = RigidPose::from_euler(
            Vec3(e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>()),
            Vec3(c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()));
        ec.diameter = diameter;
        ec.coarseness = cfg.eval.coarseness;
        result.omega = average_distance(ec);
        result.correct = is_correct(result.omega, ec.coarseness, ec.diameter);
        result.score = top.at("score").get<double>();
      }
      cases.push_back(std::move(result));
    }
  }

  EvalReport report = recall(manifest.category, cfg.eval.coarseness,
                             cfg.eval.sample_density, cases);
  report.top_k = 1;
  write_report_csv(report, out_prefix + ".csv");
  write_report_json(report, out_prefix + ".json");
  emit_summary({{"stage", "eval"},
                {"split", split},
                {"cases", cases.size()},
                {"recall_percent", report.recall_percent},
                {"out", out_prefix + ".json"}});
  return report;
}

}  // namespace isa::pipeline
