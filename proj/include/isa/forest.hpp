#pragma once

#include <span>
#include <string>
#include <vector>

#include "isa/dataset.hpp"

namespace isa {

// Two-probe depth comparison split. Offsets are in px*m: the probe pixel is
// center + offset / center_depth, so the probe pattern is depth-normalized.
struct SplitCandidate {
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  double tau = 0.0;  // meters
};

// f(P) = D_P(w + u/D_P(w)) - D_P(w + v/D_P(w)) at the patch center w.
// Probes off the patch or on background read d_max. The center pixel must be
// foreground (InvalidPartError otherwise).
double split_feature(const Eigen::Vector2d& u, const Eigen::Vector2d& v,
                     const DepthPatch& patch, double d_max);

inline double split_feature(const SplitCandidate& phi, const DepthPatch& patch,
                            double d_max) {
  return split_feature(phi.u, phi.v, patch, d_max);
}

using PartRef = const Part*;
using PartList = std::vector<PartRef>;

// Left = feature < tau, right = complement; input order preserved.
void partition(const PartList& parts, const SplitCandidate& phi, double d_max,
               PartList* left, PartList* right);

struct QualityBreakdown {
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
  double q = 0.0;  // masked, weighted sum of the enabled terms
};

// Information-gain terms. Each is
//   log(det parent covariance) - sum_i (|child_i| / sum|children|) log(det child covariance)
// with every covariance regularized as Sigma + eps*I before the determinant.
//
// q1 uses the 6D pose payload: det(Sigma_offset) + det(Sigma_theta), with the
// view angles embedded as (cos, sin) per angle. q2 uses the link angles
// ((cos, sin) per link), q3 the flattened node-offset rows. For q2/q3 only
// links/rows valid in every sample of the parent set participate, so parent
// and children see one consistent dimensionality.
double q1(const PartList& parent, const PartList& left, const PartList& right,
          double eps);
double q2(const PartList& parent, const PartList& left, const PartList& right,
          double eps);
double q3(const PartList& parent, const PartList& left, const PartList& right,
          double eps);

struct ForestConfig {
  int tree_count = 8;
  int max_depth = 20;
  int min_samples = 20;
  int candidate_offsets = 20;     // sampled psi per node
  int candidate_thresholds = 10;  // sampled tau per psi
  double offset_radius = 30.0;    // px*m probe disc
  double subset_fraction = 0.5;   // rho, per-tree sample share
  int leaf_vote_cap = 50;         // K, reservoir-sampled votes per leaf
  double epsilon = 1e-6;          // covariance regularizer
  double gain_floor = 1e-7;
  double d_max = 10.0;            // meters, off-patch probe constant
  bool use_q1 = true;             // quality mask; q1 is mandatory
  bool use_q2 = true;
  bool use_q3 = true;
  double weight_q1 = 1.0;
  double weight_q2 = 1.0;
  double weight_q3 = 1.0;
  uint64_t seed = 0;

  void validate() const;
  std::string quality_tag() const;  // "q1", "q1q2", "q1q3" or "q1q2q3"
};

// Masked, weighted Q for one candidate split (Q = Q1 + Q2 + Q3 family).
QualityBreakdown split_quality(const PartList& parent, const PartList& left,
                               const PartList& right, const ForestConfig& cfg);

// Argmax of Q over the candidate list; ties break toward the lowest index.
// Candidates that leave a child empty are skipped. Returns false when no
// candidate is valid or the best gain does not clear the floor.
bool best_split(const PartList& parts, const std::vector<SplitCandidate>& candidates,
                const ForestConfig& cfg, int* best_index, QualityBreakdown* best_q);

struct LeafVote {
  Vec3 offset = Vec3::Zero();  // (du px, dv px, dz m) toward the object center
  Vec3 euler = Vec3::Zero();   // view rotation
};

struct TreeNode {
  int32_t left = -1;   // -1 on leaves
  int32_t right = -1;
  SplitCandidate split;         // internal nodes
  std::vector<LeafVote> votes;  // leaves
  uint64_t sample_count = 0;
  double gain = 0.0;  // training diagnostic, not serialized

  bool is_leaf() const { return left < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // index 0 is the root
};

struct ForestMetadata {
  std::string category;
  PartConfig part_config;
  int node_count = 0;
  int link_count = 0;
  CameraIntrinsics camera;
  uint64_t dataset_digest = 0;
};

struct Forest {
  ForestConfig config;
  ForestMetadata meta;
  std::vector<Tree> trees;
};

class Rng;

std::vector<SplitCandidate> sample_candidates(const PartList& parts,
                                              const ForestConfig& cfg, Rng& rng);

Tree train_tree(const PartList& parts, const ForestConfig& cfg, Rng& rng);

// Trains |F| trees on independent seeded subsets (fraction rho of S). Trees
// may train in parallel; outputs are byte-identical to the sequential run.
Forest train_forest(const TrainingSet& set, const ForestConfig& cfg, int jobs = 1);

// Traversal by stored split parameters and the part's own patch only.
int traverse(const Tree& tree, const DepthPatch& patch, double d_max);

// "ISAF" container, losslessly round-tripping.
void save_forest(const Forest& forest, const std::string& path);
Forest load_forest(const std::string& path);

// Growth log: per tree and depth level, node count and mean split gain.
void write_growth_log(const Forest& forest, const std::string& csv_path);

}  // namespace isa
