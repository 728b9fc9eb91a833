#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "skyprobe/metrics.hpp"

namespace skyprobe {

// Stable identifiers used in CSV output, in report order.
inline constexpr std::array<std::string_view, 4> kReportClassifiers = {"tree", "logistic", "bayesnet", "majority"};

struct EvaluationRow {
  std::string classifier;  // one of kReportClassifiers
  ClassificationReport report;
  RocCurve roc;
};

struct ScatterPoint {
  std::string classifier;
  double avg_lgt = 0;
  double avg_iat = 0;
  ClassLabel predicted = ClassLabel::Normal;
  bool correct = false;
};

struct Evaluation {
  std::vector<EvaluationRow> rows;  // three members then the majority vote
  std::vector<ScatterPoint> scatter;
};

// Scores every instance with each model and the majority vote. The majority
// row's posterior is (score, 1 - score) with the vote's label.
Evaluation evaluate(const LabeledDataset& ds, const Ensemble& ensemble);

// Human-readable table laid out as one block per classifier with Skype and
// Normal rows.
std::string format_report_table(const Evaluation& ev);

// classifier,skype_tp_rate,skype_fp_rate,normal_tp_rate,normal_fp_rate,mae,rmse,auc
std::string report_csv(const Evaluation& ev);

struct ReportCsvRow {
  std::string classifier;
  double skype_tp_rate = 0, skype_fp_rate = 0, normal_tp_rate = 0, normal_fp_rate = 0;
  double mae = 0, rmse = 0, auc = 0;
};
std::vector<ReportCsvRow> parse_report_csv(std::string_view csv);

// classifier,fpr,tpr
std::string roc_csv(const Evaluation& ev);
std::map<std::string, std::vector<RocPoint>> parse_roc_csv(std::string_view csv);

// classifier,avg_lgt,avg_iat,predicted,correct
std::string scatter_csv(const Evaluation& ev);

}  // namespace skyprobe
