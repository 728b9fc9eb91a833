#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "skyprobe/dataset.hpp"

namespace skyprobe {

// Per-feature z-scoring fitted on training data. Zero-variance features keep
// std = 1 so they standardize to 0 instead of dividing by zero.
class Standardizer {
 public:
  using Row = std::array<double, kFeatureCount>;

  Standardizer() = default;
  Standardizer(Row mean, Row stddev);

  static Standardizer fit(const LabeledDataset& ds);

  Row transform(const FeatureVector& v) const noexcept;
  FeatureVector inverse(const Row& z) const noexcept;

  const Row& mean() const noexcept { return mean_; }
  const Row& stddev() const noexcept { return stddev_; }

  bool operator==(const Standardizer&) const = default;

 private:
  Row mean_{};
  Row stddev_ = [] {
    Row r;
    r.fill(1.0);
    return r;
  }();
};

// Equal-frequency binning fitted on training data. Bin i covers
// [edges[i], edges[i+1]); values outside the fitted range clamp to the first
// or last bin. Edges are strictly ascending after deduplication, so the bin
// count per feature may be lower than requested.
class Discretizer {
 public:
  using Edges = std::vector<double>;

  Discretizer() = default;
  explicit Discretizer(std::array<Edges, kFeatureCount> edges);

  static Discretizer fit(const LabeledDataset& ds, std::size_t bins = 10);
  static Edges fit_edges(std::vector<double> values, std::size_t bins);

  std::size_t bin(std::size_t feature, double value) const noexcept;
  std::array<std::size_t, kFeatureCount> transform(const FeatureVector& v) const noexcept;

  std::size_t cardinality(std::size_t feature) const noexcept { return edges_[feature].size(); }
  const std::array<Edges, kFeatureCount>& edges() const noexcept { return edges_; }
  bool fitted() const noexcept { return !edges_[0].empty(); }

  bool operator==(const Discretizer&) const = default;

 private:
  std::array<Edges, kFeatureCount> edges_;
};

}  // namespace skyprobe
