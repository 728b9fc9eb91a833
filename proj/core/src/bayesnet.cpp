#include "skyprobe/bayesnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

constexpr double kImproveEps = 1e-9;
constexpr std::size_t kMaxTableCells = std::size_t{1} << 26;

std::size_t config_count(const DiscreteData& data, std::span<const std::size_t> parents) {
  std::size_t q = 1;
  for (std::size_t p : parents) {
    q *= data.cardinality(p);
    if (q > kMaxTableCells) throw std::invalid_argument("parent configuration space too large");
  }
  return q;
}

// counts[j * r + k] = N_jk
std::vector<std::uint32_t> family_counts(const DiscreteData& data, std::size_t node,
                                         std::span<const std::size_t> parents) {
  const std::size_t r = data.cardinality(node);
  const std::size_t q = config_count(data, parents);
  std::vector<std::uint32_t> counts(q * r, 0);
  for (std::size_t row = 0; row < data.rows(); ++row) {
    std::size_t j = 0;
    for (std::size_t p : parents) j = j * data.cardinality(p) + data.at(row, p);
    ++counts[j * r + data.at(row, node)];
  }
  return counts;
}

}  // namespace

DiscreteData::DiscreteData(std::vector<std::size_t> cardinality, std::vector<std::uint16_t> values)
    : cardinality_(std::move(cardinality)), values_(std::move(values)) {
  if (cardinality_.empty()) throw std::invalid_argument("discrete data needs at least one column");
  if (values_.size() % cardinality_.size() != 0) throw std::invalid_argument("ragged discrete data");
  rows_ = values_.size() / cardinality_.size();
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] >= cardinality_[i % cardinality_.size()])
      throw std::invalid_argument("discrete value exceeds column cardinality");
}

DiscreteData discretize_dataset(const LabeledDataset& ds, const Discretizer& d) {
  std::vector<std::size_t> card(kFeatureCount + 1);
  card[0] = kClassCount;
  for (std::size_t j = 0; j < kFeatureCount; ++j) card[j + 1] = d.cardinality(j);
  std::vector<std::uint16_t> values;
  values.reserve(ds.size() * card.size());
  for (const auto& inst : ds.instances()) {
    values.push_back(static_cast<std::uint16_t>(inst.label));
    for (std::size_t b : d.transform(inst.features)) values.push_back(static_cast<std::uint16_t>(b));
  }
  return DiscreteData(std::move(card), std::move(values));
}

double k2_score(const DiscreteData& data, std::size_t node, std::span<const std::size_t> parents) {
  const std::size_t r = data.cardinality(node);
  const auto counts = family_counts(data, node, parents);
  const double lg_r = std::lgamma(static_cast<double>(r));
  double score = 0;
  for (std::size_t j = 0; j * r < counts.size(); ++j) {
    std::uint64_t nj = 0;
    double inner = 0;
    for (std::size_t k = 0; k < r; ++k) {
      const std::uint32_t njk = counts[j * r + k];
      nj += njk;
      inner += std::lgamma(static_cast<double>(njk) + 1.0);
    }
    if (nj == 0) continue;
    score += lg_r - std::lgamma(static_cast<double>(nj) + static_cast<double>(r)) + inner;
  }
  return score;
}

double mutual_information(const DiscreteData& data, std::size_t a, std::size_t b) {
  const std::size_t ra = data.cardinality(a);
  const std::size_t rb = data.cardinality(b);
  std::vector<double> joint(ra * rb, 0.0), pa(ra, 0.0), pb(rb, 0.0);
  const double n = static_cast<double>(data.rows());
  if (n == 0) return 0;
  for (std::size_t row = 0; row < data.rows(); ++row) {
    joint[data.at(row, a) * rb + data.at(row, b)] += 1.0 / n;
    pa[data.at(row, a)] += 1.0 / n;
    pb[data.at(row, b)] += 1.0 / n;
  }
  double mi = 0;
  for (std::size_t i = 0; i < ra; ++i)
    for (std::size_t j = 0; j < rb; ++j) {
      const double pij = joint[i * rb + j];
      if (pij > 0) mi += pij * std::log(pij / (pa[i] * pb[j]));
    }
  return std::max(0.0, mi);
}

K2Step k2_search(const DiscreteData& data, std::size_t node, std::span<const std::size_t> candidates,
                 std::span<const std::size_t> initial, std::size_t max_parents) {
  K2Step step{{initial.begin(), initial.end()}, 0};
  step.score = k2_score(data, node, step.parents);
  while (step.parents.size() < max_parents) {
    std::optional<std::size_t> best;
    double best_score = step.score;
    std::vector<std::size_t> trial = step.parents;
    trial.push_back(0);
    for (std::size_t z : candidates) {
      if (z == node || std::find(step.parents.begin(), step.parents.end(), z) != step.parents.end()) continue;
      trial.back() = z;
      const double s = k2_score(data, node, trial);
      if (s > best_score + kImproveEps) {
        best_score = s;
        best = z;
      }
    }
    if (!best) break;
    step.parents.push_back(*best);
    step.score = best_score;
  }
  return step;
}

std::vector<std::size_t> mutual_information_order(const DiscreteData& data) {
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t c = 1; c < data.columns(); ++c) scored.emplace_back(mutual_information(data, 0, c), c);
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<std::size_t> order{0};
  for (const auto& [mi, c] : scored) order.push_back(c);
  return order;
}

BayesNetModel::BayesNetModel(std::vector<std::size_t> order, std::vector<NodeTable> nodes,
                             Discretizer discretizer)
    : order_(std::move(order)), nodes_(std::move(nodes)), discretizer_(std::move(discretizer)) {
  for (const auto& n : nodes_) {
    std::size_t q = 1;
    for (std::size_t p : n.parents) {
      if (p >= nodes_.size()) throw ModelFormatError("parent index out of range");
      q *= nodes_[p].cardinality;
    }
    if (n.cardinality == 0 || n.cpt.size() != q * n.cardinality)
      throw ModelFormatError("conditional probability table has the wrong shape");
  }
}

BayesNetModel BayesNetModel::fit(const DiscreteData& data, std::vector<std::size_t> order, BayesNetParams params,
                                 Discretizer discretizer) {
  if (data.rows() == 0) throw DatasetEmpty("cannot fit a network on no rows");
  std::vector<NodeTable> nodes(data.columns());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t node = order[pos];
    const std::span<const std::size_t> preds(order.data(), pos);
    std::vector<std::size_t> initial;
    if (params.class_as_parent && node != 0 && order.front() == 0 && params.max_parents > 0) initial.push_back(0);
    K2Step chosen = k2_search(data, node, preds, initial, params.max_parents);

    NodeTable& t = nodes[node];
    t.parents = std::move(chosen.parents);
    t.cardinality = data.cardinality(node);
    const auto counts = family_counts(data, node, t.parents);
    t.cpt.resize(counts.size());
    const std::size_t r = t.cardinality;
    for (std::size_t j = 0; j * r < counts.size(); ++j) {
      double nj = 0;
      for (std::size_t k = 0; k < r; ++k) nj += counts[j * r + k];
      for (std::size_t k = 0; k < r; ++k)
        t.cpt[j * r + k] = (static_cast<double>(counts[j * r + k]) + 1.0) / (nj + static_cast<double>(r));
    }
  }
  return BayesNetModel(std::move(order), std::move(nodes), std::move(discretizer));
}

BayesNetModel BayesNetModel::train(const LabeledDataset& ds, BayesNetParams params) {
  if (ds.empty()) throw DatasetEmpty("cannot train a network on an empty dataset");
  Discretizer d = Discretizer::fit(ds, params.bins);
  const DiscreteData data = discretize_dataset(ds, d);
  return fit(data, mutual_information_order(data), params, std::move(d));
}

std::size_t BayesNetModel::row_of(std::size_t node, std::span<const std::size_t> config) const noexcept {
  std::size_t j = 0;
  for (std::size_t p : nodes_[node].parents) j = j * nodes_[p].cardinality + config[p];
  return j;
}

double BayesNetModel::joint_log_probability(std::span<const std::size_t> config) const {
  if (nodes_.empty()) throw UntrainedModel("bayesian network is not trained");
  double lp = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const NodeTable& t = nodes_[i];
    const std::size_t v = std::min(config[i], t.cardinality - 1);
    lp += std::log(t.cpt[row_of(i, config) * t.cardinality + v]);
  }
  return lp;
}

Posterior BayesNetModel::posterior_discrete(std::span<const std::size_t> attribute_bins) const {
  if (nodes_.empty()) throw UntrainedModel("bayesian network is not trained");
  std::vector<std::size_t> config(nodes_.size());
  std::copy_n(attribute_bins.begin(), std::min(attribute_bins.size(), config.size() - 1), config.begin() + 1);
  double lp[kClassCount];
  for (std::size_t c = 0; c < kClassCount; ++c) {
    config[0] = c;
    lp[c] = joint_log_probability(config);
  }
  const double m = std::max(lp[0], lp[1]);
  const double e0 = std::exp(lp[0] - m);
  const double e1 = std::exp(lp[1] - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

Posterior BayesNetModel::posterior(const FeatureVector& v) const {
  if (nodes_.empty()) throw UntrainedModel("bayesian network is not trained");
  const auto bins = discretizer_.transform(v);
  return posterior_discrete(bins);
}

}  // namespace skyprobe
