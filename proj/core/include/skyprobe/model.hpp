#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "skyprobe/bayesnet.hpp"
#include "skyprobe/logistic.hpp"
#include "skyprobe/tree.hpp"

namespace skyprobe {

using TrainedModel = std::variant<TreeModel, LogisticModel, BayesNetModel>;

enum class ModelKind { Tree, Logistic, BayesNet };

ModelKind kind_of(const TrainedModel& m) noexcept;
std::string_view to_string(ModelKind k) noexcept;
// Display name used in reports.
std::string_view display_name(ModelKind k) noexcept;

// Posterior plus MAP label (ties go to Normal). Throws UntrainedModel.
Prediction predict(const TrainedModel& model, const FeatureVector& v);

struct TrainingMetadata {
  std::uint64_t instances = 0;
  std::uint64_t seed = 0;
  std::string timestamp;  // ISO-8601 UTC
  bool operator==(const TrainingMetadata&) const = default;
};

inline constexpr int kModelFormatVersion = 1;

// Versioned JSON model file: kind, parameters, standardizer/discretizer
// sidecar, and training metadata. Serialization is deterministic.
std::string model_to_json(const TrainedModel& model, const TrainingMetadata& meta);
TrainedModel model_from_json(std::string_view json, TrainingMetadata* meta = nullptr);

void save_model_file(const std::string& path, const TrainedModel& model, const TrainingMetadata& meta);
TrainedModel load_model_file(const std::string& path, TrainingMetadata* meta = nullptr);

// The three ensemble members in fixed order: tree, logistic, bayesnet.
using ModelTriple = std::array<TrainedModel, 3>;

struct TrainConfig {
  TreeParams tree;
  LogisticParams logistic;
  BayesNetParams bayesnet;
};

ModelTriple train_all(const LabeledDataset& ds, const TrainConfig& config = {});

}  // namespace skyprobe
