#include "isa/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <future>
#include <map>
#include <numeric>

#include "isa/util.hpp"

namespace isa {
namespace {

int probe_depth_index(double w, double offset, double center_depth) {
  return int(std::lround(w + offset / center_depth));
}

double probe(const DepthPatch& patch, const Eigen::Vector2d& offset,
             double center_depth, double d_max) {
  const int w = patch.size / 2;
  const int px = probe_depth_index(w, offset.x(), center_depth);
  const int py = probe_depth_index(w, offset.y(), center_depth);
  if (!patch.in_bounds(px, py)) return d_max;
  const float d = patch.at(px, py);
  return DepthImage::is_foreground(d) ? double(d) : d_max;
}

const PrivilegedData& privileged(const Part& part) {
  if (!part.privileged)
    throw Error("quality functions need privileged training parts");
  return *part.privileged;
}

// Links whose angle is valid in every sample of the set.
std::vector<int> shared_link_mask(const PartList& parts) {
  if (parts.empty()) return {};
  const auto& first = privileged(*parts.front()).link_angles.valid;
  std::vector<uint8_t> all(first.begin(), first.end());
  for (const auto* p : parts) {
    const auto& valid = privileged(*p).link_angles.valid;
    for (size_t i = 0; i < all.size(); ++i) all[i] &= valid[i];
  }
  std::vector<int> mask;
  for (size_t i = 0; i < all.size(); ++i)
    if (all[i]) mask.push_back(int(i));
  return mask;
}

// Node-offset rows valid in every sample of the set.
std::vector<int> shared_row_mask(const PartList& parts) {
  if (parts.empty()) return {};
  const auto& first = privileged(*parts.front()).node_offsets.valid;
  std::vector<uint8_t> all(first.begin(), first.end());
  for (const auto* p : parts) {
    const auto& valid = privileged(*p).node_offsets.valid;
    for (size_t i = 0; i < all.size(); ++i) all[i] &= valid[i];
  }
  std::vector<int> mask;
  for (size_t i = 0; i < all.size(); ++i)
    if (all[i]) mask.push_back(int(i));
  return mask;
}

// Two-pass covariance (population normalization) of `dim`-dimensional
// payloads delivered by `fill`, then det(Sigma + eps I). dim 0 yields 1.
template <typename Fill>
double regularized_cov_det(const PartList& parts, int dim, double eps, Fill fill) {
  if (dim == 0) return 1.0;
  Eigen::VectorXd sample(dim);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto* p : parts) {
    fill(*p, sample);
    mean += sample;
  }
  mean /= double(parts.size());

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto* p : parts) {
    fill(*p, sample);
    sample -= mean;
    cov.noalias() += sample * sample.transpose();
  }
  cov /= double(parts.size());
  cov.diagonal().array() += eps;
  return cov.determinant();
}

void fill_offset(const Part& part, Eigen::VectorXd& out) {
  out = privileged(part).offset_to_center;
}

void fill_theta(const Part& part, Eigen::VectorXd& out) {
  const Vec3& e = privileged(part).view_euler;
  for (int i = 0; i < 3; ++i) {
    out[2 * i] = std::cos(e[i]);
    out[2 * i + 1] = std::sin(e[i]);
  }
}

struct FillAngles {
  const std::vector<int>& mask;
  void operator()(const Part& part, Eigen::VectorXd& out) const {
    const auto& angles = privileged(part).link_angles.angles;
    for (size_t i = 0; i < mask.size(); ++i) {
      out[2 * i] = std::cos(angles[mask[i]]);
      out[2 * i + 1] = std::sin(angles[mask[i]]);
    }
  }
};

struct FillRows {
  const std::vector<int>& mask;
  void operator()(const Part& part, Eigen::VectorXd& out) const {
    const auto& rows = privileged(part).node_offsets.rows;
    for (size_t i = 0; i < mask.size(); ++i)
      out.segment<3>(3 * int(i)) = rows[mask[i]];
  }
};

void require_split_shape(const PartList& parent, const PartList& left,
                         const PartList& right) {
  if (parent.empty() || left.empty() || right.empty())
    throw Error("quality terms need nonempty parent and children");
}

// Shared weighting: parent term minus child terms weighted by the children's
// share of their combined count.
double gain(double parent_term, double left_term, double right_term,
            size_t n_left, size_t n_right) {
  const double total = double(n_left + n_right);
  return parent_term - (double(n_left) / total) * left_term -
         (double(n_right) / total) * right_term;
}

}  // namespace

double split_feature(const Eigen::Vector2d& u, const Eigen::Vector2d& v,
                     const DepthPatch& patch, double d_max) {
  const int w = patch.size / 2;
  const float center = patch.at(w, w);
  if (!DepthImage::is_foreground(center))
    throw InvalidPartError("split feature on a background center pixel");
  const double d = double(center);
  return probe(patch, u, d, d_max) - probe(patch, v, d, d_max);
}

void partition(const PartList& parts, const SplitCandidate& phi, double d_max,
               PartList* left, PartList* right) {
  left->clear();
  right->clear();
  for (const auto* p : parts) {
    if (split_feature(phi.u, phi.v, p->patch, d_max) < phi.tau)
      left->push_back(p);
    else
      right->push_back(p);
  }
}

double q1(const PartList& parent, const PartList& left, const PartList& right,
          double eps) {
  require_split_shape(parent, left, right);
  const auto term = [eps](const PartList& set) {
    return std::log(regularized_cov_det(set, 3, eps, fill_offset) +
                    regularized_cov_det(set, 6, eps, fill_theta));
  };
  return gain(term(parent), term(left), term(right), left.size(), right.size());
}

double q2(const PartList& parent, const PartList& left, const PartList& right,
          double eps) {
  require_split_shape(parent, left, right);
  const std::vector<int> mask = shared_link_mask(parent);
  const int dim = 2 * int(mask.size());
  const auto term = [&](const PartList& set) {
    return std::log(regularized_cov_det(set, dim, eps, FillAngles{mask}));
  };
  return gain(term(parent), term(left), term(right), left.size(), right.size());
}

double q3(const PartList& parent, const PartList& left, const PartList& right,
          double eps) {
  require_split_shape(parent, left, right);
  const std::vector<int> mask = shared_row_mask(parent);
  const int dim = 3 * int(mask.size());
  const auto term = [&](const PartList& set) {
    return std::log(regularized_cov_det(set, dim, eps, FillRows{mask}));
  };
  return gain(term(parent), term(left), term(right), left.size(), right.size());
}

void ForestConfig::validate() const {
  if (tree_count < 1) throw ConfigError("tree_count must be >= 1");
  if (max_depth < 0) throw ConfigError("max_depth must be >= 0");
  if (min_samples < 1) throw ConfigError("min_samples must be >= 1");
  if (candidate_offsets < 1 || candidate_thresholds < 1)
    throw ConfigError("candidate counts must be >= 1");
  if (!(offset_radius > 0.0)) throw ConfigError("offset_radius must be positive");
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0))
    throw ConfigError("subset_fraction must be in (0, 1]");
  if (leaf_vote_cap < 1) throw ConfigError("leaf_vote_cap must be >= 1");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(d_max > 0.0)) throw ConfigError("d_max must be positive");
  if (!use_q1) throw ConfigError("the quality mask must always include q1");
}

std::string ForestConfig::quality_tag() const {
  std::string tag = "q1";
  if (use_q2) tag += "q2";
  if (use_q3) tag += "q3";
  return tag;
}

QualityBreakdown split_quality(const PartList& parent, const PartList& left,
                               const PartList& right, const ForestConfig& cfg) {
  QualityBreakdown out;
  out.q1 = q1(parent, left, right, cfg.epsilon);
  out.q = cfg.weight_q1 * out.q1;
  if (cfg.use_q2) {
    out.q2 = q2(parent, left, right, cfg.epsilon);
    out.q += cfg.weight_q2 * out.q2;
  }
  if (cfg.use_q3) {
    out.q3 = q3(parent, left, right, cfg.epsilon);
    out.q += cfg.weight_q3 * out.q3;
  }
  return out;
}

bool best_split(const PartList& parts, const std::vector<SplitCandidate>& candidates,
                const ForestConfig& cfg, int* best_index, QualityBreakdown* best_q) {
  bool found = false;
  PartList left, right;
  left.reserve(parts.size());
  right.reserve(parts.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    partition(parts, candidates[i], cfg.d_max, &left, &right);
    if (left.empty() || right.empty()) continue;
    const QualityBreakdown q = split_quality(parts, left, right, cfg);
    if (!found || q.q > best_q->q) {
      found = true;
      *best_index = int(i);
      *best_q = q;
    }
  }
  return found && best_q->q > cfg.gain_floor;
}

std::vector<SplitCandidate> sample_candidates(const PartList& parts,
                                              const ForestConfig& cfg, Rng& rng) {
  std::vector<SplitCandidate> candidates;
  candidates.reserve(size_t(cfg.candidate_offsets) * cfg.candidate_thresholds);
  std::vector<double> features(parts.size());

  for (int ci = 0; ci < cfg.candidate_offsets; ++ci) {
    SplitCandidate base;
    // Uniform in a disc of radius offset_radius (polar with sqrt).
    for (Eigen::Vector2d* offset : {&base.u, &base.v}) {
      const double r = cfg.offset_radius * std::sqrt(rng.uniform());
      const double phi = rng.uniform(0.0, 2.0 * M_PI);
      *offset = Eigen::Vector2d(r * std::cos(phi), r * std::sin(phi));
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < parts.size(); ++i) {
      features[i] = split_feature(base.u, base.v, parts[i]->patch, cfg.d_max);
      lo = std::min(lo, features[i]);
      hi = std::max(hi, features[i]);
    }

    for (int ti = 0; ti < cfg.candidate_thresholds; ++ti) {
      SplitCandidate cand = base;
      cand.tau = rng.uniform(lo, hi);
      candidates.push_back(cand);
    }
  }
  return candidates;
}

Tree train_tree(const PartList& parts, const ForestConfig& cfg, Rng& rng) {
  cfg.validate();
  if (parts.empty()) throw Error("cannot train a tree on zero parts");

  Tree tree;
  struct Job {
    int node;
    int depth;
    PartList parts;
  };
  std::vector<Job> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, 0, parts});

  const auto make_leaf = [&](TreeNode& node, const PartList& members) {
    node.sample_count = members.size();
    // Reservoir sample up to K votes so huge leaves stay bounded.
    const size_t cap = size_t(cfg.leaf_vote_cap);
    node.votes.reserve(std::min(cap, members.size()));
    for (size_t i = 0; i < members.size(); ++i) {
      const auto& priv = privileged(*members[i]);
      if (node.votes.size() < cap) {
        node.votes.push_back({priv.offset_to_center, priv.view_euler});
      } else {
        const uint64_t j = rng.uniform_index(i + 1);
        if (j < cap) node.votes[j] = {priv.offset_to_center, priv.view_euler};
      }
    }
  };

  while (!stack.empty()) {
    Job job = std::move(stack.back());
    stack.pop_back();
    TreeNode& node = tree.nodes[job.node];
    node.sample_count = job.parts.size();

    if (job.depth >= cfg.max_depth || int(job.parts.size()) < cfg.min_samples) {
      make_leaf(node, job.parts);
      continue;
    }

    const auto candidates = sample_candidates(job.parts, cfg, rng);
    int best = -1;
    QualityBreakdown qb;
    if (!best_split(job.parts, candidates, cfg, &best, &qb)) {
      make_leaf(node, job.parts);
      continue;
    }

    PartList left, right;
    partition(job.parts, candidates[best], cfg.d_max, &left, &right);

    const int left_id = int(tree.nodes.size());
    const int right_id = left_id + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    // the emplace may have reallocated; re-fetch the node
    TreeNode& parent = tree.nodes[job.node];
    parent.left = left_id;
    parent.right = right_id;
    parent.split = candidates[best];
    parent.gain = qb.q;

    // Left first keeps node numbering and RNG consumption deterministic.
    stack.push_back({right_id, job.depth + 1, std::move(right)});
    stack.push_back({left_id, job.depth + 1, std::move(left)});
  }
  return tree;
}

Forest train_forest(const TrainingSet& set, const ForestConfig& cfg, int jobs) {
  cfg.validate();
  PartList all;
  for (const auto& instance : set.parts_per_instance)
    for (const auto& part : instance) all.push_back(&part);
  if (all.empty()) throw Error("training set has no parts");

  Forest forest;
  forest.config = cfg;
  forest.meta.category = set.category;
  forest.meta.part_config = set.part_config;
  forest.meta.node_count = set.node_count;
  forest.meta.link_count = set.link_count;
  forest.meta.dataset_digest = set.source_digest;
  forest.trees.resize(cfg.tree_count);

  const size_t subset_size =
      std::max<size_t>(1, size_t(cfg.subset_fraction * double(all.size())));

  const auto train_one = [&](int t) {
    Rng rng = Rng(cfg.seed).fork(uint64_t(t));
    PartList subset;
    if (subset_size == all.size()) {
      subset = all;  // rho = 1: the full set, no draws consumed
    } else {
      // Partial Fisher-Yates for a without-replacement subset, then restore
      // dataset order so downstream statistics are evaluation-order stable.
      std::vector<uint32_t> indices(all.size());
      std::iota(indices.begin(), indices.end(), 0u);
      for (size_t i = 0; i < subset_size; ++i) {
        const size_t j = i + size_t(rng.uniform_index(indices.size() - i));
        std::swap(indices[i], indices[j]);
      }
      std::vector<uint32_t> chosen(indices.begin(), indices.begin() + subset_size);
      std::sort(chosen.begin(), chosen.end());
      subset.reserve(chosen.size());
      for (uint32_t idx : chosen) subset.push_back(all[idx]);
    }
    forest.trees[t] = train_tree(subset, cfg, rng);
  };

  if (jobs <= 1 || cfg.tree_count == 1) {
    for (int t = 0; t < cfg.tree_count; ++t) train_one(t);
  } else {
    std::vector<std::future<void>> futures;
    for (int t = 0; t < cfg.tree_count; ++t)
      futures.push_back(std::async(std::launch::async, train_one, t));
    for (auto& f : futures) f.get();
  }
  return forest;
}

int traverse(const Tree& tree, const DepthPatch& patch, double d_max) {
  int id = 0;
  while (!tree.nodes[id].is_leaf()) {
    const TreeNode& node = tree.nodes[id];
    id = split_feature(node.split.u, node.split.v, patch, d_max) < node.split.tau
             ? node.left
             : node.right;
  }
  return id;
}

namespace {
constexpr char kMagic[4] = {'I', 'S', 'A', 'F'};
constexpr uint32_t kVersion = 1;
}  // namespace

void save_forest(const Forest& forest, const std::string& path) {
  BinaryWriter w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);

  const ForestConfig& c = forest.config;
  w.i32(c.tree_count);
  w.i32(c.max_depth);
  w.i32(c.min_samples);
  w.i32(c.candidate_offsets);
  w.i32(c.candidate_thresholds);
  w.f64(c.offset_radius);
  w.f64(c.subset_fraction);
  w.i32(c.leaf_vote_cap);
  w.f64(c.epsilon);
  w.f64(c.gain_floor);
  w.f64(c.d_max);
  w.u8(c.use_q1);
  w.u8(c.use_q2);
  w.u8(c.use_q3);
  w.f64(c.weight_q1);
  w.f64(c.weight_q2);
  w.f64(c.weight_q3);
  w.u64(c.seed);

  const ForestMetadata& m = forest.meta;
  w.str(m.category);
  w.i32(m.part_config.patch_size);
  w.i32(m.part_config.stride);
  w.f64(m.part_config.min_foreground);
  w.i32(m.node_count);
  w.i32(m.link_count);
  w.f64(m.camera.fx);
  w.f64(m.camera.fy);
  w.f64(m.camera.cx);
  w.f64(m.camera.cy);
  w.i32(m.camera.width);
  w.i32(m.camera.height);
  w.u64(m.dataset_digest);

  w.u32(uint32_t(forest.trees.size()));
  for (const Tree& tree : forest.trees) {
    w.u32(uint32_t(tree.nodes.size()));
    for (const TreeNode& node : tree.nodes) {
      w.u8(node.is_leaf() ? 1 : 0);
      w.u64(node.sample_count);
      if (node.is_leaf()) {
        w.u32(uint32_t(node.votes.size()));
        for (const LeafVote& vote : node.votes) {
          for (int i = 0; i < 3; ++i) w.f64(vote.offset[i]);
          for (int i = 0; i < 3; ++i) w.f64(vote.euler[i]);
        }
      } else {
        w.f64(node.split.u.x());
        w.f64(node.split.u.y());
        w.f64(node.split.v.x());
        w.f64(node.split.v.y());
        w.f64(node.split.tau);
        w.i32(node.left);
        w.i32(node.right);
      }
    }
  }
  w.finish();
}

Forest load_forest(const std::string& path) {
  if (peek_magic(path) != std::string(kMagic, 4))
    throw VersionError("not an ISAF forest file: " + path);
  BinaryReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  const uint32_t version = r.u32();
  if (version != kVersion)
    throw VersionError("unsupported forest version " + std::to_string(version) +
                       " in " + path);

  Forest forest;
  ForestConfig& c = forest.config;
  c.tree_count = r.i32();
  c.max_depth = r.i32();
  c.min_samples = r.i32();
  c.candidate_offsets = r.i32();
  c.candidate_thresholds = r.i32();
  c.offset_radius = r.f64();
  c.subset_fraction = r.f64();
  c.leaf_vote_cap = r.i32();
  c.epsilon = r.f64();
  c.gain_floor = r.f64();
  c.d_max = r.f64();
  c.use_q1 = r.u8();
  c.use_q2 = r.u8();
  c.use_q3 = r.u8();
  c.weight_q1 = r.f64();
  c.weight_q2 = r.f64();
  c.weight_q3 = r.f64();
  c.seed = r.u64();

  ForestMetadata& m = forest.meta;
  m.category = r.str();
  m.part_config.patch_size = r.i32();
  m.part_config.stride = r.i32();
  m.part_config.min_foreground = r.f64();
  m.node_count = r.i32();
  m.link_count = r.i32();
  m.camera.fx = r.f64();
  m.camera.fy = r.f64();
  m.camera.cx = r.f64();
  m.camera.cy = r.f64();
  m.camera.width = r.i32();
  m.camera.height = r.i32();
  m.dataset_digest = r.u64();

  const uint32_t n_trees = r.u32();
  forest.trees.resize(n_trees);
  for (Tree& tree : forest.trees) {
    const uint32_t n_nodes = r.u32();
    tree.nodes.resize(n_nodes);
    for (TreeNode& node : tree.nodes) {
      const bool leaf = r.u8() != 0;
      node.sample_count = r.u64();
      if (leaf) {
        const uint32_t n_votes = r.u32();
        node.votes.resize(n_votes);
        for (LeafVote& vote : node.votes) {
          for (int i = 0; i < 3; ++i) vote.offset[i] = r.f64();
          for (int i = 0; i < 3; ++i) vote.euler[i] = r.f64();
        }
      } else {
        node.split.u.x() = r.f64();
        node.split.u.y() = r.f64();
        node.split.v.x() = r.f64();
        node.split.v.y() = r.f64();
        node.split.tau = r.f64();
        node.left = r.i32();
        node.right = r.i32();
      }
    }
  }
  r.expect_end();
  return forest;
}

void write_growth_log(const Forest& forest, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error("cannot open for writing: " + csv_path);
  out << "tree,level,nodes,mean_gain\n";
  for (size_t t = 0; t < forest.trees.size(); ++t) {
    const Tree& tree = forest.trees[t];
    std::vector<int> depth(tree.nodes.size(), 0);
    std::map<int, std::pair<int, double>> levels;  // level -> (count, gain sum)
    for (size_t i = 0; i < tree.nodes.size(); ++i) {
      const TreeNode& node = tree.nodes[i];
      auto& [count, gain_sum] = levels[depth[i]];
      ++count;
      if (!node.is_leaf()) {
        gain_sum += node.gain;
        depth[node.left] = depth[i] + 1;
        depth[node.right] = depth[i] + 1;
      }
    }
    for (const auto& [level, stats] : levels)
      out << t << "," << level << "," << stats.first << ","
          << (stats.first ? stats.second / stats.first : 0.0) << "\n";
  }
}

}  // namespace isa
