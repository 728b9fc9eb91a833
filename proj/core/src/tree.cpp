#include "skyprobe/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

// Gains within this margin count as equal; the earlier candidate wins.
constexpr double kTieEps = 1e-12;

struct Counts {
  std::size_t skype = 0;
  std::size_t normal = 0;
  std::size_t total() const noexcept { return skype + normal; }
  void add(ClassLabel c) noexcept { (c == ClassLabel::Skype ? skype : normal) += 1; }
};

double entropy_of(Counts c) {
  const std::size_t counts[2] = {c.skype, c.normal};
  return entropy(counts);
}

SplitGain gain_from_counts(Counts parent, Counts left) {
  const Counts right{parent.skype - left.skype, parent.normal - left.normal};
  if (left.total() == 0 || right.total() == 0) return {};
  const double n = static_cast<double>(parent.total());
  const double wl = static_cast<double>(left.total()) / n;
  const double wr = static_cast<double>(right.total()) / n;
  const double gain = std::max(0.0, entropy_of(parent) - wl * entropy_of(left) - wr * entropy_of(right));
  const std::size_t sizes[2] = {left.total(), right.total()};
  return {gain, gain / entropy(sizes)};
}

double midpoint(double a, double b) {
  const double mid = a + (b - a) / 2.0;
  return mid < b ? mid : a;
}

struct Best {
  std::int32_t attribute = -1;
  double threshold = 0;
  SplitGain gain;
};

class Grower {
 public:
  Grower(const LabeledDataset& ds, TreeParams params) : ds_(ds), params_(params) {}

  std::uint32_t grow(std::vector<std::uint32_t> idx) {
    Counts c;
    for (auto i : idx) c.add(ds_[i].label);
    const auto self = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(TreeModel::Node{TreeModel::Node::kLeaf, 0, 0, 0, c.skype, c.normal});

    if (c.skype == 0 || c.normal == 0 || idx.size() < 2 * params_.min_leaf) return self;
    const Best best = best_split(idx, c);
    if (best.attribute < 0 || best.gain.gain_ratio <= kTieEps) return self;

    std::vector<std::uint32_t> left, right;
    for (auto i : idx) {
      (ds_[i].features.values()[static_cast<std::size_t>(best.attribute)] <= best.threshold ? left : right)
          .push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const std::uint32_t l = grow(std::move(left));
    const std::uint32_t r = grow(std::move(right));
    TreeModel::Node& node = nodes_[self];
    node.attribute = best.attribute;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return self;
  }

  std::vector<TreeModel::Node> take() { return std::move(nodes_); }

 private:
  Best best_split(const std::vector<std::uint32_t>& idx, Counts parent) const {
    Best best;
    std::vector<std::pair<double, ClassLabel>> col(idx.size());
    for (std::size_t a = 0; a < kFeatureCount; ++a) {
      for (std::size_t k = 0; k < idx.size(); ++k)
        col[k] = {ds_[idx[k]].features.values()[a], ds_[idx[k]].label};
      std::sort(col.begin(), col.end(),
                [](const auto& x, const auto& y) { return x.first < y.first; });
      Counts left;
      for (std::size_t k = 0; k + 1 < col.size(); ++k) {
        left.add(col[k].second);
        if (!(col[k].first < col[k + 1].first)) continue;
        const SplitGain g = gain_from_counts(parent, left);
        if (best.attribute < 0 || g.gain_ratio > best.gain.gain_ratio + kTieEps) {
          best = {static_cast<std::int32_t>(a), midpoint(col[k].first, col[k + 1].first), g};
        }
      }
    }
    return best;
  }

  const LabeledDataset& ds_;
  TreeParams params_;
  std::vector<TreeModel::Node> nodes_;
};

}  // namespace

double entropy(std::span<const std::size_t> class_counts) {
  const std::size_t total = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  if (total == 0) throw EmptySet("entropy of an empty set");
  double h = 0;
  for (std::size_t c : class_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

SplitGain information_gain(std::span<const Instance> subset, std::size_t attribute, double threshold) {
  Counts parent, left;
  for (const auto& inst : subset) {
    parent.add(inst.label);
    if (inst.features.values()[attribute] <= threshold) left.add(inst.label);
  }
  if (parent.total() == 0) return {};
  return gain_from_counts(parent, left);
}

TreeModel::TreeModel(std::vector<Node> nodes, bool degenerate)
    : nodes_(std::move(nodes)), degenerate_(degenerate) {}

TreeModel TreeModel::train(const LabeledDataset& ds, TreeParams params) {
  if (ds.empty()) throw DatasetEmpty("cannot train a tree on an empty dataset");
  if (params.min_leaf == 0) params.min_leaf = 1;
  std::vector<std::uint32_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0u);
  Grower g(ds, params);
  g.grow(std::move(idx));
  const bool single = ds.count(ClassLabel::Skype) == 0 || ds.count(ClassLabel::Normal) == 0;
  return TreeModel(g.take(), single);
}

const TreeModel::Node& TreeModel::leaf_for(const FeatureVector& v) const {
  if (nodes_.empty()) throw UntrainedModel("tree model has no nodes");
  const auto x = v.values();
  const Node* n = &nodes_[0];
  while (!n->is_leaf()) n = &nodes_[x[static_cast<std::size_t>(n->attribute)] <= n->threshold ? n->left : n->right];
  return *n;
}

Posterior TreeModel::posterior(const FeatureVector& v) const {
  const Node& leaf = leaf_for(v);
  const double total = static_cast<double>(leaf.skype + leaf.normal) + 2.0;
  const double ps = (static_cast<double>(leaf.skype) + 1.0) / total;
  return {ps, (static_cast<double>(leaf.normal) + 1.0) / total};
}

std::size_t TreeModel::depth() const {
  if (nodes_.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0u, 0u}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes_[i].is_leaf()) {
      stack.push_back({nodes_[i].left, d + 1});
      stack.push_back({nodes_[i].right, d + 1});
    }
  }
  return deepest;
}

std::size_t TreeModel::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

}  // namespace skyprobe
