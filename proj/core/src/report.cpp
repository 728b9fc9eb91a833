#include "skyprobe/report.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

std::vector<std::vector<std::string_view>> split_csv(std::string_view csv, std::string_view header) {
  std::vector<std::vector<std::string_view>> rows;
  bool first = true;
  std::size_t line_no = 0;
  while (!csv.empty()) {
    const std::size_t eol = csv.find('\n');
    std::string_view line = csv.substr(0, eol);
    csv = eol == std::string_view::npos ? std::string_view{} : csv.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (first) {
      if (line != header) throw SchemaMismatch("unexpected header '" + std::string(line) + "'");
      first = false;
      continue;
    }
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      cols.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(cols));
  }
  if (first) throw SchemaMismatch("missing header");
  return rows;
}

double to_double(std::string_view s) {
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) throw SchemaMismatch("bad number '" + std::string(s) + "'");
  return v;
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string_view row_title(std::string_view id) {
  if (id == "tree") return "C4.5 Tree Classifier";
  if (id == "logistic") return "Logistic Classifier";
  if (id == "bayesnet") return "Bayesian Network Classifier";
  return "Majority Voting Classifier";
}

constexpr std::string_view kReportHeader =
    "classifier,skype_tp_rate,skype_fp_rate,normal_tp_rate,normal_fp_rate,mae,rmse,auc";
constexpr std::string_view kRocHeader = "classifier,fpr,tpr";
constexpr std::string_view kScatterHeader = "classifier,avg_lgt,avg_iat,predicted,correct";

}  // namespace

Evaluation evaluate(const LabeledDataset& ds, const Ensemble& ensemble) {
  ds.require_trainable();
  std::vector<ClassLabel> truth;
  std::array<std::vector<Prediction>, 4> preds;
  std::array<std::vector<double>, 4> scores;
  for (const auto& inst : ds.instances()) {
    truth.push_back(inst.label);
    const auto each = ensemble.predict_each(inst.features);
    std::array<Posterior, kVoters> ps{};
    for (std::size_t m = 0; m < kVoters; ++m) {
      preds[m].push_back(each[m]);
      scores[m].push_back(each[m].posterior.p_skype);
      ps[m] = each[m].posterior;
    }
    const EnsembleDecision d = majority_vote(ps);
    preds[3].push_back({d.label, Posterior::from_skype(d.score)});
    scores[3].push_back(d.score);
  }
  Evaluation ev;
  for (std::size_t m = 0; m < 4; ++m) {
    ev.rows.push_back({std::string(kReportClassifiers[m]), classification_report(truth, preds[m]),
                       roc_auc(truth, scores[m])});
    for (std::size_t i = 0; i < ds.size(); ++i) {
      ev.scatter.push_back({std::string(kReportClassifiers[m]), ds[i].features.avg_lgt, ds[i].features.avg_iat,
                            preds[m][i].label, preds[m][i].label == truth[i]});
    }
  }
  return ev;
}

std::string format_report_table(const Evaluation& ev) {
  std::ostringstream out;
  for (const auto& row : ev.rows) {
    const auto& r = row.report;
    out << "== " << row_title(row.classifier) << " ==\n";
    out << "Class    TP Rate  FP Rate  MAE     RMSE    AUC\n";
    out << "Skype    " << fixed(r.skype.tp_rate, 3) << "    " << fixed(r.skype.fp_rate, 3) << "    "
        << fixed(r.mae, 4) << "  " << fixed(r.rmse, 4) << "  " << fixed(row.roc.auc, 3) << "\n";
    out << "Normal   " << fixed(r.normal.tp_rate, 3) << "    " << fixed(r.normal.fp_rate, 3) << "\n\n";
  }
  return out.str();
}

std::string report_csv(const Evaluation& ev) {
  std::string out(kReportHeader);
  out += '\n';
  for (const auto& row : ev.rows) {
    const auto& r = row.report;
    out += row.classifier;
    for (double v : {r.skype.tp_rate, r.skype.fp_rate, r.normal.tp_rate, r.normal.fp_rate, r.mae, r.rmse,
                     row.roc.auc}) {
      out += ',';
      out += format_number(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<ReportCsvRow> parse_report_csv(std::string_view csv) {
  std::vector<ReportCsvRow> out;
  for (const auto& cols : split_csv(csv, kReportHeader)) {
    if (cols.size() != 8) throw SchemaMismatch("report row needs 8 columns");
    out.push_back({std::string(cols[0]), to_double(cols[1]), to_double(cols[2]), to_double(cols[3]),
                   to_double(cols[4]), to_double(cols[5]), to_double(cols[6]), to_double(cols[7])});
  }
  return out;
}

std::string roc_csv(const Evaluation& ev) {
  std::string out(kRocHeader);
  out += '\n';
  for (const auto& row : ev.rows)
    for (const auto& p : row.roc.points) out += row.classifier + ',' + format_number(p.fpr) + ',' + format_number(p.tpr) + '\n';
  return out;
}

std::map<std::string, std::vector<RocPoint>> parse_roc_csv(std::string_view csv) {
  std::map<std::string, std::vector<RocPoint>> out;
  for (const auto& cols : split_csv(csv, kRocHeader)) {
    if (cols.size() != 3) throw SchemaMismatch("ROC row needs 3 columns");
    out[std::string(cols[0])].push_back({to_double(cols[1]), to_double(cols[2])});
  }
  return out;
}

std::string scatter_csv(const Evaluation& ev) {
  std::string out(kScatterHeader);
  out += '\n';
  for (const auto& p : ev.scatter) {
    out += p.classifier + ',' + format_number(p.avg_lgt) + ',' + format_number(p.avg_iat) + ',' +
           std::string(to_string(p.predicted)) + ',' + (p.correct ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace skyprobe
