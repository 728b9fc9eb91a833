#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "skyprobe/posterior.hpp"

namespace skyprobe {

// Shannon entropy in bits of a class histogram; 0 log 0 is taken as 0.
// Throws EmptySet when all counts are zero.
double entropy(std::span<const std::size_t> class_counts);

struct SplitGain {
  double gain = 0;        // information gain in bits
  double gain_ratio = 0;  // gain / split entropy
};

// Gain of the binary test `attribute <= threshold` over `subset`. A threshold
// that leaves one side empty has zero gain.
SplitGain information_gain(std::span<const Instance> subset, std::size_t attribute, double threshold);

struct TreeParams {
  std::size_t min_leaf = 2;
};

// Binary decision tree grown C4.5-style on continuous attributes. Nodes live
// in a flat array; node 0 is the root.
class TreeModel {
 public:
  struct Node {
    static constexpr std::int32_t kLeaf = -1;
    std::int32_t attribute = kLeaf;
    double threshold = 0;
    std::uint32_t left = 0;   // attribute <= threshold
    std::uint32_t right = 0;  // attribute > threshold
    std::size_t skype = 0;    // training instances reaching the node
    std::size_t normal = 0;
    bool is_leaf() const noexcept { return attribute == kLeaf; }
    bool operator==(const Node&) const = default;
  };

  TreeModel() = default;
  TreeModel(std::vector<Node> nodes, bool degenerate);

  static TreeModel train(const LabeledDataset& ds, TreeParams params = {});

  bool trained() const noexcept { return !nodes_.empty(); }
  // True when the training data held a single class (one-leaf tree).
  bool degenerate() const noexcept { return degenerate_; }

  const Node& leaf_for(const FeatureVector& v) const;
  // Laplace-smoothed class distribution of the leaf reached by `v`.
  Posterior posterior(const FeatureVector& v) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& root() const { return nodes_.at(0); }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  bool operator==(const TreeModel&) const = default;

 private:
  std::vector<Node> nodes_;
  bool degenerate_ = false;
};

inline TreeModel train_tree(const LabeledDataset& ds, std::size_t min_leaf = 2) {
  return TreeModel::train(ds, TreeParams{min_leaf});
}

}  // namespace skyprobe
