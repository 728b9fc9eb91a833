#pragma once

#include <string>

#include "skyprobe/metrics.hpp"
#include "skyprobe/model.hpp"

namespace skyprobe {

// The on-disk output of training: tree.json, logistic.json, bayesnet.json
// and threshold.json in one directory.
struct ModelBundle {
  ModelTriple models;
  ThresholdConfig threshold;
  TrainingMetadata meta;
};

std::string threshold_to_json(const ThresholdConfig& t);
ThresholdConfig threshold_from_json(std::string_view text);

void save_model_dir(const std::string& dir, const ModelBundle& bundle);
// Throws ModelFormatError for missing or malformed members.
ModelBundle load_model_dir(const std::string& dir);

}  // namespace skyprobe
