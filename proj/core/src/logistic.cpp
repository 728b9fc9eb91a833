#include "skyprobe/logistic.hpp"

#include <algorithm>
#include <cmath>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

// log(1 + e^z)
double softplus(double z) noexcept { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(const std::array<double, kLogisticDim>& x, std::span<const double> beta) noexcept {
  double z = 0;
  for (std::size_t j = 0; j < kLogisticDim; ++j) z += x[j] * beta[j];
  return z;
}

}  // namespace

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LogisticProblem LogisticProblem::from_dataset(const LabeledDataset& ds, const Standardizer& s, double l2) {
  LogisticProblem p;
  p.l2 = l2;
  p.rows.reserve(ds.size());
  p.targets.reserve(ds.size());
  for (const auto& inst : ds.instances()) {
    const auto z = s.transform(inst.features);
    std::array<double, kLogisticDim> row{};
    row[0] = 1.0;
    std::copy(z.begin(), z.end(), row.begin() + 1);
    p.rows.push_back(row);
    p.targets.push_back(inst.label == ClassLabel::Skype ? 1.0 : 0.0);
  }
  return p;
}

double LogisticProblem::objective(std::span<const double> beta) const {
  double ll = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double z = dot(rows[i], beta);
    ll += targets[i] * z - softplus(z);
  }
  ll /= static_cast<double>(rows.size());
  double penalty = 0;
  for (std::size_t j = 1; j < kLogisticDim; ++j) penalty += beta[j] * beta[j];
  return ll - 0.5 * l2 * penalty;
}

std::array<double, kLogisticDim> LogisticProblem::gradient(std::span<const double> beta) const {
  std::array<double, kLogisticDim> g{};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double r = targets[i] - sigmoid(dot(rows[i], beta));
    for (std::size_t j = 0; j < kLogisticDim; ++j) g[j] += r * rows[i][j];
  }
  const double n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < kLogisticDim; ++j) g[j] /= n;
  for (std::size_t j = 1; j < kLogisticDim; ++j) g[j] -= l2 * beta[j];
  return g;
}

LogisticModel::LogisticModel(std::array<double, kLogisticDim> beta, Standardizer standardizer,
                             std::size_t iterations)
    : beta_(beta), standardizer_(std::move(standardizer)), iterations_(iterations), trained_(true) {
  for (double b : beta_)
    if (!std::isfinite(b)) throw NonFinite("logistic coefficient is not finite");
}

LogisticModel LogisticModel::train(const LabeledDataset& ds, LogisticParams params) {
  ds.require_trainable();
  Standardizer s = Standardizer::fit(ds);
  const LogisticProblem problem = LogisticProblem::from_dataset(ds, s, params.l2);

  std::array<double, kLogisticDim> beta{};
  double f = problem.objective(beta);
  double step = 1.0;
  std::size_t it = 0;
  for (; it < params.max_iters; ++it) {
    const auto g = problem.gradient(beta);
    double gmax = 0;
    for (double gj : g) gmax = std::max(gmax, std::abs(gj));
    if (!std::isfinite(gmax)) throw NonFinite("logistic gradient diverged");
    if (gmax < params.tol) break;

    bool improved = false;
    std::array<double, kLogisticDim> trial{};
    for (; step > 1e-16; step /= 2) {
      for (std::size_t j = 0; j < kLogisticDim; ++j) trial[j] = beta[j] + step * g[j];
      const double ft = problem.objective(trial);
      if (ft > f) {
        beta = trial;
        f = ft;
        improved = true;
        break;
      }
    }
    if (!improved) break;  // no representable ascent step remains
    step *= 2;
  }
  return LogisticModel(beta, std::move(s), it);
}

Posterior LogisticModel::posterior(const FeatureVector& v) const {
  if (!trained_) throw UntrainedModel("logistic model is not trained");
  const auto z = standardizer_.transform(v);
  double t = beta_[0];
  for (std::size_t j = 0; j < kFeatureCount; ++j) t += beta_[j + 1] * z[j];
  const double p = sigmoid(t);
  return {p, 1.0 - p};
}

}  // namespace skyprobe
