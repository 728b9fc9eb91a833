#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "skyprobe/errors.hpp"
#include "skyprobe/metrics.hpp"
#include "skyprobe/model.hpp"
#include "skyprobe/report.hpp"
#include "skyprobe/synth.hpp"

using namespace skyprobe;

namespace {

constexpr auto S = ClassLabel::Skype;
constexpr auto N = ClassLabel::Normal;

Prediction hard(ClassLabel c) {
  return {c, c == S ? Posterior{1, 0} : Posterior{0, 1}};
}

}  // namespace

TEST(Report, PerfectPredictor) {
  const std::vector<ClassLabel> truth{S, N, S, N};
  std::vector<Prediction> preds;
  for (auto c : truth) preds.push_back(hard(c));
  const auto r = classification_report(truth, preds);
  EXPECT_EQ(r.skype.tp_rate, 1.0);
  EXPECT_EQ(r.skype.fp_rate, 0.0);
  EXPECT_EQ(r.mae, 0.0);
  EXPECT_EQ(r.rmse, 0.0);
}

TEST(Report, ConstantHalfPosterior) {
  const std::vector<ClassLabel> truth{S, N, N, N, S};
  const std::vector<Prediction> preds(truth.size(), Prediction{N, {0.5, 0.5}});
  const auto r = classification_report(truth, preds);
  EXPECT_DOUBLE_EQ(r.mae, 0.5);
  EXPECT_DOUBLE_EQ(r.rmse, 0.5);
}

TEST(Report, ThreeRightOneWrong) {
  const std::vector<ClassLabel> truth{S, S, N, N};
  const std::vector<Prediction> preds{hard(S), hard(N), hard(N), hard(N)};
  const auto r = classification_report(truth, preds);
  EXPECT_EQ(r.skype.counts, (ConfusionCounts{1, 0, 2, 1}));
  EXPECT_DOUBLE_EQ(r.skype.tp_rate, 0.5);
  EXPECT_DOUBLE_EQ(r.skype.fp_rate, 0.0);
  EXPECT_DOUBLE_EQ(r.normal.tp_rate, 1.0);
  EXPECT_DOUBLE_EQ(r.normal.fp_rate, 0.5);
  EXPECT_DOUBLE_EQ(r.mae, 0.25);
  EXPECT_DOUBLE_EQ(r.rmse, 0.5);
}

TEST(Report, MaeNeverExceedsRmse) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ClassLabel> truth;
    std::vector<Prediction> preds;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 40); ++i) {
      truth.push_back(rng() % 2 ? S : N);
      const auto p = Posterior::from_skype(u(rng));
      preds.push_back({label_of(p), p});
    }
    const auto r = classification_report(truth, preds);
    EXPECT_LE(r.mae, r.rmse + 1e-15);
  }
}

TEST(Report, InputErrors) {
  const std::vector<ClassLabel> truth{S};
  EXPECT_THROW(classification_report(truth, std::vector<Prediction>{}), LengthMismatch);
  EXPECT_THROW(classification_report({}, {}), EmptyInput);
}

TEST(Auc, Examples) {
  const std::vector<ClassLabel> truth{S, S, N, N};
  EXPECT_DOUBLE_EQ(roc_auc(truth, std::vector<double>{0.9, 0.4, 0.6, 0.1}).auc, 0.75);
  EXPECT_EQ(roc_auc(truth, std::vector<double>{0.9, 0.8, 0.2, 0.1}).auc, 1.0);
  EXPECT_EQ(roc_auc(truth, std::vector<double>{0.3, 0.3, 0.3, 0.3}).auc, 0.5);
  EXPECT_THROW(roc_auc(std::vector<ClassLabel>{S, S}, std::vector<double>{1, 2}), SingleClass);
}

TEST(Auc, MatchesPairCountingWithTies) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<ClassLabel> truth;
    std::vector<double> scores;
    const unsigned levels = 1 + static_cast<unsigned>(rng() % 6);
    for (std::size_t i = 0; i < n; ++i) {
      truth.push_back(i == 0 ? S : i == 1 ? N : (rng() % 2 ? S : N));
      scores.push_back(static_cast<double>(rng() % levels) / levels);
    }
    const auto roc = roc_auc(truth, scores);
    EXPECT_NEAR(roc.auc, oracle::wilcoxon_auc(truth, scores), 1e-9);
    EXPECT_EQ(roc.points.front(), (RocPoint{0, 0}));
    EXPECT_EQ(roc.points.back(), (RocPoint{1, 1}));
    std::vector<double> reversed;
    for (double s : scores) reversed.push_back(-s);
    EXPECT_NEAR(roc_auc(truth, reversed).auc, 1 - roc.auc, 1e-9);
  }
}

TEST(Calibration, PerfectEnsembleOnSeparableData) {
  const auto ds = generate_corpus(300, 21);
  const Ensemble e(train_all(ds));
  const auto th = calibrate_threshold(ds, e, 1.0);
  EXPECT_EQ(th.auc_th, 1.0);
  EXPECT_EQ(th.r_th, 1.0);
}

TEST(Evaluation, FourRowsAndConsistentRocCsv) {
  const auto ds = generate_corpus(200, 5);
  const auto split = stratified_split(ds, 0.5, 5);
  const Ensemble e(train_all(split.train));
  const auto ev = evaluate(split.test, e);
  ASSERT_EQ(ev.rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(ev.rows[i].classifier, kReportClassifiers[i]);
  const auto curves = parse_roc_csv(roc_csv(ev));
  const auto table = parse_report_csv(report_csv(ev));
  ASSERT_EQ(table.size(), 4u);
  for (const auto& row : table) {
    ASSERT_TRUE(curves.count(row.classifier));
    EXPECT_NEAR(trapezoid_area(curves.at(row.classifier)), row.auc, 1e-9);
  }
  EXPECT_EQ(ev.scatter.size(), 4 * split.test.size());
}
