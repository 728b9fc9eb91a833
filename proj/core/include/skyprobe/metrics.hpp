#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "skyprobe/voting.hpp"

namespace skyprobe {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct ClassRates {
  ConfusionCounts counts;
  double tp_rate = 0;  // TP / (TP + FN)
  double fp_rate = 0;  // FP / (FP + TN)
};

struct ClassificationReport {
  ClassRates skype;
  ClassRates normal;
  // Mean absolute / root mean squared residual between the predicted class
  // distribution and the one-hot truth, averaged over instances and classes.
  double mae = 0;
  double rmse = 0;
  std::size_t instances = 0;

  const ClassRates& rates(ClassLabel c) const noexcept { return c == ClassLabel::Skype ? skype : normal; }
};

// Throws LengthMismatch / EmptyInput.
ClassificationReport classification_report(std::span<const ClassLabel> truth,
                                           std::span<const Prediction> predictions);

struct RocPoint {
  double fpr = 0;
  double tpr = 0;
  bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) to (1,1)
  double auc = 0;
};

// Sweeps distinct scores from high to low (Skype is the positive class).
// Tied scores move along one diagonal segment; the trapezoidal area equals the
// Mann-Whitney statistic with ties counted as 1/2. Throws SingleClass when
// only one class is present and EmptyInput / LengthMismatch as usual.
RocCurve roc_auc(std::span<const ClassLabel> truth, std::span<const double> scores);

// Trapezoidal area under an arbitrary ROC polyline.
double trapezoid_area(std::span<const RocPoint> points);

struct ThresholdConfig {
  double auc_th = 0.905;
  double r_th = 1.0;
  bool operator==(const ThresholdConfig&) const = default;
};

// auc_th := AUC of the ensemble's mean-posterior score on `validation`.
ThresholdConfig calibrate_threshold(const LabeledDataset& validation, const Ensemble& ensemble,
                                    double r_th = 1.0);

}  // namespace skyprobe
