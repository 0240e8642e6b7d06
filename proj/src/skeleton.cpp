#include "isa/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

namespace isa {

using nlohmann::json;

void SkeletonGraph::validate() const {
  const int n = node_count();
  if (n == 0) throw SchemaError("skeleton has no nodes");
  std::vector<bool> seen(n, false);
  for (const auto& node : nodes) {
    if (node.label < 0 || node.label >= n)
      throw SchemaError("skeleton labels must be dense 0.." + std::to_string(n - 1) +
                        "; got " + std::to_string(node.label));
    if (seen[node.label])
      throw SchemaError("duplicate skeleton label " + std::to_string(node.label));
    seen[node.label] = true;
    if (!node.position.allFinite())
      throw SchemaError("skeleton node " + std::to_string(node.label) +
                        " has non-finite position");
  }
  std::set<std::pair<int, int>> unique_links;
  for (const auto& [a, b] : links) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw SchemaError("link references node " + std::to_string(std::max(a, b)) +
                        " of " + std::to_string(n));
    if (a >= b) throw SchemaError("links must be stored as (low, high) pairs");
    if (!unique_links.insert({a, b}).second)
      throw SchemaError("duplicate link (" + std::to_string(a) + "," +
                        std::to_string(b) + ")");
  }
  for (int label : project_mask)
    if (label < 0 || label >= n)
      throw SchemaError("project_mask references node " + std::to_string(label) +
                        " of " + std::to_string(n));
}

SkeletonGraph load_skeleton(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open skeleton file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw MalformedFileError(path + ": " + e.what());
  }

  SkeletonGraph graph;
  try {
    for (const auto& jn : j.at("nodes")) {
      SkeletonGraph::Node node;
      node.label = jn.at("label").get<int>();
      node.position = Vec3(jn.at("x").get<double>(), jn.at("y").get<double>(),
                           jn.at("z").get<double>());
      graph.nodes.push_back(node);
    }
    for (const auto& jl : j.at("links")) {
      if (!jl.is_array() || jl.size() != 2)
        throw SchemaError(path + ": links must be [a,b] pairs");
      int a = jl[0].get<int>(), b = jl[1].get<int>();
      if (a > b) std::swap(a, b);
      if (a == b) throw SchemaError(path + ": self-link on node " + std::to_string(a));
      graph.links.emplace_back(a, b);
    }
    if (j.contains("project_mask"))
      for (const auto& jm : j.at("project_mask"))
        graph.project_mask.push_back(jm.get<int>());
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }

  std::sort(graph.nodes.begin(), graph.nodes.end(),
            [](const auto& a, const auto& b) { return a.label < b.label; });
  std::sort(graph.links.begin(), graph.links.end());
  std::sort(graph.project_mask.begin(), graph.project_mask.end());
  try {
    graph.validate();
  } catch (const SchemaError& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return graph;
}

void save_skeleton(const SkeletonGraph& graph, const std::string& path) {
  json j;
  j["nodes"] = json::array();
  for (const auto& node : graph.nodes)
    j["nodes"].push_back({{"label", node.label},
                          {"x", node.position.x()},
                          {"y", node.position.y()},
                          {"z", node.position.z()}});
  j["links"] = json::array();
  for (const auto& [a, b] : graph.links) j["links"].push_back({a, b});
  if (!graph.project_mask.empty()) j["project_mask"] = graph.project_mask;

  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

std::vector<std::pair<int, int>> validate_category_topology(
    const std::vector<SkeletonGraph>& graphs) {
  if (graphs.empty()) throw TopologyMismatchError("no skeletons given");
  const auto& reference = graphs.front();
  std::string offenders;
  for (size_t i = 1; i < graphs.size(); ++i) {
    if (graphs[i].node_count() != reference.node_count() ||
        graphs[i].links != reference.links) {
      if (!offenders.empty()) offenders += ", ";
      offenders += std::to_string(i);
    }
  }
  if (!offenders.empty())
    throw TopologyMismatchError(
        "skeleton topology differs from instance 0 at instance(s) " + offenders);
  return reference.links;
}

ProjectedSkeleton project_skeleton(const SkeletonGraph& graph, const Viewpoint& view,
                                   const CameraIntrinsics& cam) {
  ProjectedSkeleton proj;
  proj.links = graph.links;
  proj.nodes.resize(graph.node_count());

  std::vector<bool> masked(graph.node_count(), true);
  if (!graph.project_mask.empty()) {
    masked.assign(graph.node_count(), false);
    for (int label : graph.project_mask) masked[label] = true;
  }

  for (const auto& node : graph.nodes) {
    auto& out = proj.nodes[node.label];
    const Vec3 p = view.pose.apply(node.position);
    if (p.z() <= 0.0 || !masked[node.label]) continue;
    out.u = cam.cx + cam.fx * p.x() / p.z();
    out.v = cam.cy + cam.fy * p.y() / p.z();
    out.z = p.z();
    out.visible = out.u >= 0.0 && out.u < cam.width && out.v >= 0.0 && out.v < cam.height;
  }
  return proj;
}

LinkAngleVector link_angles(const ProjectedSkeleton& proj) {
  LinkAngleVector out;
  out.angles.resize(proj.links.size(), 0.0);
  out.valid.resize(proj.links.size(), 0);
  out.degenerate.resize(proj.links.size(), 0);
  for (size_t i = 0; i < proj.links.size(); ++i) {
    const auto& lo = proj.nodes[proj.links[i].first];
    const auto& hi = proj.nodes[proj.links[i].second];
    if (!lo.visible || !hi.visible) continue;
    out.valid[i] = 1;
    const double du = hi.u - lo.u;
    const double dv = hi.v - lo.v;
    if (du == 0.0 && dv == 0.0) {
      out.degenerate[i] = 1;
      continue;  // angle stays 0
    }
    double a = std::atan2(dv, du);
    if (a <= -M_PI) a += 2.0 * M_PI;  // (-pi, pi]
    out.angles[i] = a;
  }
  return out;
}

NodeOffsetMatrix node_offsets(const Vec3& part_center, const ProjectedSkeleton& proj) {
  NodeOffsetMatrix out;
  out.rows.resize(proj.nodes.size(), Eigen::Vector3d::Zero());
  out.valid.resize(proj.nodes.size(), 0);
  for (size_t i = 0; i < proj.nodes.size(); ++i) {
    const auto& node = proj.nodes[i];
    if (!node.visible) continue;
    out.valid[i] = 1;
    out.rows[i] = Eigen::Vector3d(node.u - part_center.x(), node.v - part_center.y(),
                                  node.z - part_center.z());
  }
  return out;
}

SscResult compute_ssc(const std::vector<Mesh>& meshes,
                      const std::vector<SkeletonGraph>& graphs) {
  if (meshes.empty() || meshes.size() != graphs.size())
    throw Error("compute_ssc needs matching mesh/skeleton lists");
  validate_category_topology(graphs);

  // Nearest-to-COM node per instance, then the modal label across instances.
  const int n = graphs.front().node_count();
  std::vector<int> frequency(n, 0);
  for (size_t i = 0; i < meshes.size(); ++i) {
    const Vec3 com = center_of_mass(meshes[i]);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& node : graphs[i].nodes) {
      const double d = (node.position - com).norm();
      if (d < best_d) {
        best_d = d;
        best = node.label;
      }
    }
    ++frequency[best];
  }
  const int top = *std::max_element(frequency.begin(), frequency.end());

  SscResult out;
  for (int label = 0; label < n; ++label)
    if (frequency[label] == top) out.labels.push_back(label);

  for (const auto& graph : graphs) {
    Vec3 p = Vec3::Zero();
    for (int label : out.labels) p += graph.position(label);
    p /= double(out.labels.size());  // tie -> interpolate between the modes
    out.instance_points.push_back(p);
    out.instance_frames.emplace_back(Mat3::Identity(), p);
  }
  return out;
}

void save_ssc(const SscResult& ssc, const std::string& category,
              const std::string& path) {
  json j;
  j["category"] = category;
  j["labels"] = ssc.labels;
  j["instances"] = json::array();
  for (size_t i = 0; i < ssc.instance_points.size(); ++i) {
    const Vec3& p = ssc.instance_points[i];
    j["instances"].push_back({{"x", p.x()}, {"y", p.y()}, {"z", p.z()}});
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

SscResult load_ssc(const std::string& path, std::string* category) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw MalformedFileError(path + ": " + e.what());
  }
  SscResult out;
  try {
    if (category) *category = j.at("category").get<std::string>();
    out.labels = j.at("labels").get<std::vector<int>>();
    for (const auto& ji : j.at("instances")) {
      const Vec3 p(ji.at("x").get<double>(), ji.at("y").get<double>(),
                   ji.at("z").get<double>());
      out.instance_points.push_back(p);
      out.instance_frames.emplace_back(Mat3::Identity(), p);
    }
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  if (out.labels.empty() || out.instance_points.empty())
    throw SchemaError(path + ": empty SSC record");
  return out;
}

}  // namespace isa
