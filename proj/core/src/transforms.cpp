#include "skyprobe/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "skyprobe/errors.hpp"

namespace skyprobe {

Standardizer::Standardizer(Row mean, Row stddev) : mean_(mean), stddev_(stddev) {
  for (double& s : stddev_)
    if (!(s > 0.0) || !std::isfinite(s)) s = 1.0;
}

Standardizer Standardizer::fit(const LabeledDataset& ds) {
  if (ds.empty()) throw DatasetEmpty("cannot fit a standardizer on an empty dataset");
  Row mean{};
  Row sd{};
  const double n = static_cast<double>(ds.size());
  for (const auto& inst : ds.instances()) {
    const auto v = inst.features.values();
    for (std::size_t j = 0; j < kFeatureCount; ++j) mean[j] += v[j];
  }
  for (double& m : mean) m /= n;
  for (const auto& inst : ds.instances()) {
    const auto v = inst.features.values();
    for (std::size_t j = 0; j < kFeatureCount; ++j) sd[j] += (v[j] - mean[j]) * (v[j] - mean[j]);
  }
  for (double& s : sd) s = std::sqrt(s / n);
  return Standardizer(mean, sd);
}

Standardizer::Row Standardizer::transform(const FeatureVector& v) const noexcept {
  Row z = v.values();
  for (std::size_t j = 0; j < kFeatureCount; ++j) z[j] = (z[j] - mean_[j]) / stddev_[j];
  return z;
}

FeatureVector Standardizer::inverse(const Row& z) const noexcept {
  Row x{};
  for (std::size_t j = 0; j < kFeatureCount; ++j) x[j] = z[j] * stddev_[j] + mean_[j];
  return FeatureVector::from_values(x);
}

Discretizer::Discretizer(std::array<Edges, kFeatureCount> edges) : edges_(std::move(edges)) {
  for (const auto& e : edges_) {
    if (e.empty()) throw std::invalid_argument("discretizer feature without edges");
    if (std::adjacent_find(e.begin(), e.end(), std::greater_equal<>()) != e.end())
      throw std::invalid_argument("discretizer edges must be strictly ascending");
  }
}

Discretizer::Edges Discretizer::fit_edges(std::vector<double> values, std::size_t bins) {
  if (values.empty()) throw DatasetEmpty("cannot fit bin edges on no values");
  if (bins == 0) throw std::invalid_argument("bins must be positive");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  Edges edges;
  for (std::size_t k = 0; k < bins; ++k) {
    const double e = values[k * n / bins];
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  return edges;
}

Discretizer Discretizer::fit(const LabeledDataset& ds, std::size_t bins) {
  if (ds.empty()) throw DatasetEmpty("cannot fit a discretizer on an empty dataset");
  std::array<Edges, kFeatureCount> edges;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    std::vector<double> col;
    col.reserve(ds.size());
    for (const auto& inst : ds.instances()) col.push_back(inst.features.values()[j]);
    edges[j] = fit_edges(std::move(col), bins);
  }
  return Discretizer(std::move(edges));
}

std::size_t Discretizer::bin(std::size_t feature, double value) const noexcept {
  const Edges& e = edges_[feature];
  const auto it = std::upper_bound(e.begin(), e.end(), value);
  if (it == e.begin()) return 0;
  return static_cast<std::size_t>(it - e.begin()) - 1;
}

std::array<std::size_t, kFeatureCount> Discretizer::transform(const FeatureVector& v) const noexcept {
  std::array<std::size_t, kFeatureCount> out{};
  const auto x = v.values();
  for (std::size_t j = 0; j < kFeatureCount; ++j) out[j] = bin(j, x[j]);
  return out;
}

}  // namespace skyprobe
