#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "skyprobe/posterior.hpp"
#include "skyprobe/transforms.hpp"

namespace skyprobe {

// Number of coefficients: intercept plus one weight per feature.
inline constexpr std::size_t kLogisticDim = kFeatureCount + 1;

// 1 / (1 + e^-z), evaluated without overflow for large |z|.
double sigmoid(double z) noexcept;

// Standardized design matrix with a leading 1 column, and 0/1 targets
// (1 = Skype).
struct LogisticProblem {
  std::vector<std::array<double, kLogisticDim>> rows;
  std::vector<double> targets;
  double l2 = 1e-8;

  static LogisticProblem from_dataset(const LabeledDataset& ds, const Standardizer& s, double l2 = 1e-8);

  // Mean log-likelihood minus (l2/2)·||w||² over the non-intercept weights.
  double objective(std::span<const double> beta) const;
  std::array<double, kLogisticDim> gradient(std::span<const double> beta) const;
};

struct LogisticParams {
  std::size_t max_iters = 2000;
  double tol = 1e-6;  // on the gradient's infinity norm
  double l2 = 1e-8;
};

class LogisticModel {
 public:
  LogisticModel() = default;
  LogisticModel(std::array<double, kLogisticDim> beta, Standardizer standardizer, std::size_t iterations = 0);

  // Full-batch gradient ascent on the penalized log-likelihood with a
  // backtracking step (halve until the objective improves, then double the
  // next trial step). Throws NonFinite if the coefficients ever diverge.
  static LogisticModel train(const LabeledDataset& ds, LogisticParams params = {});

  bool trained() const noexcept { return trained_; }
  Posterior posterior(const FeatureVector& v) const;

  const std::array<double, kLogisticDim>& beta() const noexcept { return beta_; }
  const Standardizer& standardizer() const noexcept { return standardizer_; }
  std::size_t iterations() const noexcept { return iterations_; }

  bool operator==(const LogisticModel&) const = default;

 private:
  std::array<double, kLogisticDim> beta_{};
  Standardizer standardizer_;
  std::size_t iterations_ = 0;
  bool trained_ = false;
};

inline LogisticModel train_logistic(const LabeledDataset& ds, std::size_t max_iters = 2000, double tol = 1e-6) {
  return LogisticModel::train(ds, LogisticParams{max_iters, tol});
}

}  // namespace skyprobe
