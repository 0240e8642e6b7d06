#include "isa/eval.hpp"

#include <fstream>

#include <json.hpp>

#include "isa/error.hpp"

namespace isa {

void EvalCase::validate() const {
  if (cloud.points.empty()) throw Error("evaluation cloud is empty");
  if (!(diameter > 0.0)) throw Error("model diameter must be positive");
  if (!(coarseness > 0.0)) throw Error("coarseness z must be positive");
}

double average_distance(const EvalCase& c) {
  c.validate();
  double sum = 0.0;
  for (const Vec3& x : c.cloud.points)
    sum += (c.ground_truth.apply(x) - c.estimate.apply(x)).norm();
  return sum / double(c.cloud.points.size());
}

bool is_correct(double omega, double coarseness, double diameter) {
  return omega <= coarseness * diameter;
}

EvalReport recall(const std::string& category, double coarseness,
                  int sample_density, const std::vector<CaseResult>& cases) {
  if (cases.empty()) throw Error("recall over zero cases");
  EvalReport report;
  report.category = category;
  report.coarseness = coarseness;
  report.sample_density = sample_density;
  report.cases = cases;
  size_t correct = 0;
  for (const CaseResult& c : cases) correct += c.correct;
  report.recall_percent = 100.0 * double(correct) / double(cases.size());
  return report;
}

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "case,omega_m,threshold_m,correct,score\n";
  out.precision(9);
  for (const CaseResult& c : report.cases)
    out << c.id << "," << c.omega << "," << c.threshold << ","
        << (c.correct ? 1 : 0) << "," << c.score << "\n";
  if (!out) throw Error("write failure: " + path);
}

void write_report_json(const EvalReport& report, const std::string& path) {
  nlohmann::json j;
  j["category"] = report.category;
  j["coarseness_z"] = report.coarseness;
  j["sample_density"] = report.sample_density;
  j["top_k"] = report.top_k;
  j["cases_total"] = report.cases.size();
  size_t correct = 0;
  for (const CaseResult& c : report.cases) correct += c.correct;
  j["cases_correct"] = correct;
  j["recall_percent"] = report.recall_percent;
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace isa
