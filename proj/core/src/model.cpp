#include "skyprobe/model.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

using json = nlohmann::json;

template <typename T, std::size_t N>
std::array<T, N> to_array(const json& j) {
  if (!j.is_array() || j.size() != N) throw ModelFormatError("expected array of " + std::to_string(N));
  std::array<T, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<T>();
  return out;
}

json tree_json(const TreeModel& m) {
  json nodes = json::array();
  for (const auto& n : m.nodes())
    nodes.push_back({n.attribute, n.threshold, n.left, n.right, n.skype, n.normal});
  return {{"degenerate", m.degenerate()}, {"nodes", std::move(nodes)}};
}

TreeModel tree_from(const json& j) {
  std::vector<TreeModel::Node> nodes;
  for (const auto& n : j.at("nodes")) {
    if (!n.is_array() || n.size() != 6) throw ModelFormatError("tree node must have 6 fields");
    TreeModel::Node node{n[0].get<std::int32_t>(), n[1].get<double>(), n[2].get<std::uint32_t>(),
                         n[3].get<std::uint32_t>(), n[4].get<std::size_t>(), n[5].get<std::size_t>()};
    nodes.push_back(node);
  }
  for (const auto& n : nodes) {
    if (n.is_leaf()) continue;
    if (n.attribute >= static_cast<std::int32_t>(kFeatureCount) || n.left >= nodes.size() ||
        n.right >= nodes.size())
      throw ModelFormatError("tree node references out of range");
  }
  if (nodes.empty()) throw ModelFormatError("tree has no nodes");
  return TreeModel(std::move(nodes), j.at("degenerate").get<bool>());
}

json standardizer_json(const Standardizer& s) { return {{"mean", s.mean()}, {"stddev", s.stddev()}}; }

Standardizer standardizer_from(const json& j) {
  return Standardizer(to_array<double, kFeatureCount>(j.at("mean")), to_array<double, kFeatureCount>(j.at("stddev")));
}

json discretizer_json(const Discretizer& d) { return {{"edges", d.edges()}}; }

Discretizer discretizer_from(const json& j) {
  const json& e = j.at("edges");
  if (!e.is_array() || e.size() != kFeatureCount) throw ModelFormatError("discretizer needs 9 edge lists");
  std::array<Discretizer::Edges, kFeatureCount> edges;
  for (std::size_t i = 0; i < kFeatureCount; ++i) edges[i] = e[i].get<std::vector<double>>();
  try {
    return Discretizer(std::move(edges));
  } catch (const std::invalid_argument& ex) {
    throw ModelFormatError(ex.what());
  }
}

std::string_view kind_key(ModelKind k) { return to_string(k); }

}  // namespace

ModelKind kind_of(const TrainedModel& m) noexcept { return static_cast<ModelKind>(m.index()); }

std::string_view to_string(ModelKind k) noexcept {
  switch (k) {
    case ModelKind::Tree: return "tree";
    case ModelKind::Logistic: return "logistic";
    case ModelKind::BayesNet: return "bayesnet";
  }
  return "unknown";
}

std::string_view display_name(ModelKind k) noexcept {
  switch (k) {
    case ModelKind::Tree: return "C4.5 tree";
    case ModelKind::Logistic: return "Logistic";
    case ModelKind::BayesNet: return "Bayes network";
  }
  return "unknown";
}

Prediction predict(const TrainedModel& model, const FeatureVector& v) {
  const Posterior p = std::visit([&](const auto& m) { return m.posterior(v); }, model);
  return {label_of(p), p};
}

std::string model_to_json(const TrainedModel& model, const TrainingMetadata& meta) {
  const ModelKind kind = kind_of(model);
  json j;
  j["format"] = "skyprobe-model";
  j["version"] = kModelFormatVersion;
  j["kind"] = kind_key(kind);
  j["training"] = {{"instances", meta.instances}, {"seed", meta.seed}, {"timestamp", meta.timestamp}};
  if (const auto* t = std::get_if<TreeModel>(&model)) {
    if (!t->trained()) throw UntrainedModel("cannot save an untrained tree");
    j["tree"] = tree_json(*t);
  } else if (const auto* l = std::get_if<LogisticModel>(&model)) {
    if (!l->trained()) throw UntrainedModel("cannot save an untrained logistic model");
    j["logistic"] = {{"beta", l->beta()}, {"iterations", l->iterations()}};
    j["standardizer"] = standardizer_json(l->standardizer());
  } else if (const auto* b = std::get_if<BayesNetModel>(&model)) {
    if (!b->trained()) throw UntrainedModel("cannot save an untrained network");
    json nodes = json::array();
    for (const auto& n : b->nodes())
      nodes.push_back({{"parents", n.parents}, {"cardinality", n.cardinality}, {"cpt", n.cpt}});
    j["bayesnet"] = {{"order", b->order()}, {"nodes", std::move(nodes)}};
    j["discretizer"] = discretizer_json(b->discretizer());
  }
  return j.dump(1) + "\n";
}

TrainedModel model_from_json(std::string_view text, TrainingMetadata* meta) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelFormatError(std::string("model is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "skyprobe-model") throw ModelFormatError("not a skyprobe model file");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw ModelFormatError("unsupported model version " + j.at("version").dump());
    if (meta) {
      const json& t = j.at("training");
      meta->instances = t.at("instances").get<std::uint64_t>();
      meta->seed = t.at("seed").get<std::uint64_t>();
      meta->timestamp = t.at("timestamp").get<std::string>();
    }
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "tree") return tree_from(j.at("tree"));
    if (kind == "logistic") {
      const json& l = j.at("logistic");
      return LogisticModel(to_array<double, kLogisticDim>(l.at("beta")), standardizer_from(j.at("standardizer")),
                           l.at("iterations").get<std::size_t>());
    }
    if (kind == "bayesnet") {
      const json& b = j.at("bayesnet");
      std::vector<BayesNetModel::NodeTable> nodes;
      for (const auto& n : b.at("nodes")) {
        nodes.push_back({n.at("parents").get<std::vector<std::size_t>>(), n.at("cardinality").get<std::size_t>(),
                         n.at("cpt").get<std::vector<double>>()});
      }
      return BayesNetModel(b.at("order").get<std::vector<std::size_t>>(), std::move(nodes),
                           discretizer_from(j.at("discretizer")));
    }
    throw ModelFormatError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("malformed model: ") + e.what());
  }
}

void save_model_file(const std::string& path, const TrainedModel& model, const TrainingMetadata& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model '" + path + "'");
  out << model_to_json(model, meta);
}

TrainedModel load_model_file(const std::string& path, TrainingMetadata* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open model '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str(), meta);
}

ModelTriple train_all(const LabeledDataset& ds, const TrainConfig& config) {
  ds.require_trainable();
  return {TreeModel::train(ds, config.tree), LogisticModel::train(ds, config.logistic),
          BayesNetModel::train(ds, config.bayesnet)};
}

}  // namespace skyprobe
