#include "skyprobe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ClassRates rates_for(ClassLabel ref, std::span<const ClassLabel> truth, std::span<const Prediction> preds) {
  ClassRates r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == ref;
    const bool predicted = preds[i].label == ref;
    if (actual && predicted) ++r.counts.tp;
    else if (actual) ++r.counts.fn;
    else if (predicted) ++r.counts.fp;
    else ++r.counts.tn;
  }
  r.tp_rate = ratio(r.counts.tp, r.counts.tp + r.counts.fn);
  r.fp_rate = ratio(r.counts.fp, r.counts.fp + r.counts.tn);
  return r;
}

}  // namespace

ClassificationReport classification_report(std::span<const ClassLabel> truth,
                                           std::span<const Prediction> predictions) {
  if (truth.size() != predictions.size()) throw LengthMismatch("truth and predictions differ in length");
  if (truth.empty()) throw EmptyInput("classification report of no instances");
  ClassificationReport rep;
  rep.instances = truth.size();
  rep.skype = rates_for(ClassLabel::Skype, truth, predictions);
  rep.normal = rates_for(ClassLabel::Normal, truth, predictions);
  double abs_sum = 0;
  double sq_sum = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double ys = truth[i] == ClassLabel::Skype ? 1.0 : 0.0;
    const double rs = predictions[i].posterior.p_skype - ys;
    const double rn = predictions[i].posterior.p_normal - (1.0 - ys);
    abs_sum += std::abs(rs) + std::abs(rn);
    sq_sum += rs * rs + rn * rn;
  }
  const double cells = static_cast<double>(truth.size() * kClassCount);
  rep.mae = abs_sum / cells;
  rep.rmse = std::sqrt(sq_sum / cells);
  return rep;
}

double trapezoid_area(std::span<const RocPoint> points) {
  double area = 0;
  for (std::size_t i = 1; i < points.size(); ++i)
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  return area;
}

RocCurve roc_auc(std::span<const ClassLabel> truth, std::span<const double> scores) {
  if (truth.size() != scores.size()) throw LengthMismatch("truth and scores differ in length");
  if (truth.empty()) throw EmptyInput("ROC of no instances");
  const auto pos = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), ClassLabel::Skype));
  const std::size_t neg = truth.size() - pos;
  if (pos == 0 || neg == 0) throw SingleClass("ROC needs both classes");
  if (!std::all_of(scores.begin(), scores.end(), [](double s) { return std::isfinite(s); }))
    throw std::invalid_argument("ROC scores must be finite");

  std::vector<std::size_t> idx(truth.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < idx.size();) {
    const double s = scores[idx[k]];
    while (k < idx.size() && scores[idx[k]] == s) {
      (truth[idx[k]] == ClassLabel::Skype ? tp : fp) += 1;
      ++k;
    }
    curve.points.push_back({ratio(fp, neg), ratio(tp, pos)});
  }
  curve.auc = trapezoid_area(curve.points);
  return curve;
}

ThresholdConfig calibrate_threshold(const LabeledDataset& validation, const Ensemble& ensemble, double r_th) {
  validation.require_trainable();
  std::vector<ClassLabel> truth;
  std::vector<double> scores;
  for (const auto& inst : validation.instances()) {
    truth.push_back(inst.label);
    scores.push_back(ensemble.decide(inst.features).score);
  }
  return ThresholdConfig{roc_auc(truth, scores).auc, r_th};
}

}  // namespace skyprobe
