#pragma once

#include <string>
#include <vector>

#include "isa/geometry.hpp"

namespace isa {

// One scored test case. The cloud is the instance's sampled surface expressed
// in its SSC frame (origin at the SSC, axes parallel to the model axes), so
// the metric measures pose error about the category reference point.
struct EvalCase {
  PointCloud cloud;       // SSC frame, nonempty
  RigidPose ground_truth; // (R, T)
  RigidPose estimate;     // (R~, T~)
  double diameter = 0.0;  // Phi, meters
  double coarseness = 0.3;  // z

  void validate() const;
};

// Mean distance between the cloud under the two poses:
// omega = avg || (R X + T) - (R~ X + T~) ||.
double average_distance(const EvalCase& c);

// Correct iff omega <= z * Phi (inclusive).
bool is_correct(double omega, double coarseness, double diameter);

struct CaseResult {
  std::string id;
  double omega = 0.0;
  double threshold = 0.0;  // z * Phi
  bool correct = false;
  double score = 0.0;  // hypothesis score, echoed for diagnostics
};

struct EvalReport {
  std::string category;
  double coarseness = 0.3;
  int sample_density = 0;
  int top_k = 1;
  std::vector<CaseResult> cases;
  double recall_percent = 0.0;  // 100 * correct / total
};

// Scores each case's top-1 hypothesis. Case order does not affect the recall.
EvalReport recall(const std::string& category, double coarseness,
                  int sample_density, const std::vector<CaseResult>& cases);

void write_report_csv(const EvalReport& report, const std::string& path);
void write_report_json(const EvalReport& report, const std::string& path);

}  // namespace isa
