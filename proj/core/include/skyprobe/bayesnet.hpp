#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "skyprobe/posterior.hpp"
#include "skyprobe/transforms.hpp"

namespace skyprobe {

// Row-major table of categorical observations; column c takes values in
// [0, cardinality[c]).
class DiscreteData {
 public:
  DiscreteData(std::vector<std::size_t> cardinality, std::vector<std::uint16_t> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t columns() const noexcept { return cardinality_.size(); }
  std::size_t cardinality(std::size_t c) const noexcept { return cardinality_[c]; }
  const std::vector<std::size_t>& cardinalities() const noexcept { return cardinality_; }
  std::uint16_t at(std::size_t r, std::size_t c) const noexcept { return values_[r * columns() + c]; }

 private:
  std::vector<std::size_t> cardinality_;
  std::vector<std::uint16_t> values_;
  std::size_t rows_ = 0;
};

// Column 0 is the class (Skype = 0), columns 1..9 the discretized features.
DiscreteData discretize_dataset(const LabeledDataset& ds, const Discretizer& d);

// Log Cooper-Herskovits marginal likelihood of `node` given `parents` under a
// uniform Dirichlet prior:
//   sum_j [ lnΓ(r) - lnΓ(N_j + r) + sum_k lnΓ(N_jk + 1) ].
double k2_score(const DiscreteData& data, std::size_t node, std::span<const std::size_t> parents);

// Mutual information (nats) between two columns.
double mutual_information(const DiscreteData& data, std::size_t a, std::size_t b);

struct K2Step {
  std::vector<std::size_t> parents;
  double score = 0;
};

// Greedy K2 parent search for one node. Starts from `initial` parents and
// repeatedly adds the candidate that most increases the score, stopping when
// nothing improves or `max_parents` is reached. Equal-scoring candidates are
// resolved in favour of the one listed first in `candidates`.
K2Step k2_search(const DiscreteData& data, std::size_t node, std::span<const std::size_t> candidates,
                 std::span<const std::size_t> initial, std::size_t max_parents);

struct BayesNetParams {
  std::size_t max_parents = 3;  // counts the class edge
  std::size_t bins = 10;
  // Start every attribute with the class as a parent before the K2 search.
  bool class_as_parent = true;
};

class BayesNetModel {
 public:
  struct NodeTable {
    std::vector<std::size_t> parents;  // column indices, in insertion order
    std::size_t cardinality = 0;
    std::vector<double> cpt;  // row = parent configuration (mixed radix over parents), col = value
    bool operator==(const NodeTable&) const = default;
  };

  BayesNetModel() = default;
  BayesNetModel(std::vector<std::size_t> order, std::vector<NodeTable> nodes, Discretizer discretizer);

  static BayesNetModel train(const LabeledDataset& ds, BayesNetParams params = {});

  // Structure learning + Laplace-smoothed CPTs over already-discretized data.
  // `order` must start with column 0 (the class) for classification use.
  static BayesNetModel fit(const DiscreteData& data, std::vector<std::size_t> order, BayesNetParams params,
                           Discretizer discretizer = {});

  bool trained() const noexcept { return !nodes_.empty(); }
  Posterior posterior(const FeatureVector& v) const;
  Posterior posterior_discrete(std::span<const std::size_t> attribute_bins) const;

  // Sum over nodes of log P(x_i | parents(x_i)) for a full configuration
  // (column 0 = class).
  double joint_log_probability(std::span<const std::size_t> config) const;

  const std::vector<std::size_t>& order() const noexcept { return order_; }
  const std::vector<NodeTable>& nodes() const noexcept { return nodes_; }
  const Discretizer& discretizer() const noexcept { return discretizer_; }

  bool operator==(const BayesNetModel&) const = default;

 private:
  std::size_t row_of(std::size_t node, std::span<const std::size_t> config) const noexcept;

  std::vector<std::size_t> order_;
  std::vector<NodeTable> nodes_;  // indexed by column
  Discretizer discretizer_;
};

// Class first, then attributes by decreasing mutual information with the class
// (ties by column index).
std::vector<std::size_t> mutual_information_order(const DiscreteData& data);

inline BayesNetModel train_bayesnet(const LabeledDataset& ds, std::size_t max_parents = 3) {
  BayesNetParams p;
  p.max_parents = max_parents;
  return BayesNetModel::train(ds, p);
}

}  // namespace skyprobe
