#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skyprobe/features.hpp"

namespace skyprobe {

enum class ClassLabel : std::uint8_t { Skype = 0, Normal = 1 };

inline constexpr std::size_t kClassCount = 2;

std::string_view to_string(ClassLabel c) noexcept;
// Case-insensitive "skype" / "normal".
std::optional<ClassLabel> parse_label(std::string_view text) noexcept;

struct Instance {
  FeatureVector features;
  ClassLabel label = ClassLabel::Normal;
  bool operator==(const Instance&) const = default;
};

class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(std::vector<Instance> instances) : instances_(std::move(instances)) {}

  const std::vector<Instance>& instances() const noexcept { return instances_; }
  std::size_t size() const noexcept { return instances_.size(); }
  bool empty() const noexcept { return instances_.empty(); }
  const Instance& operator[](std::size_t i) const { return instances_[i]; }

  void add(const FeatureVector& fv, ClassLabel label) { instances_.push_back({fv, label}); }

  std::size_t count(ClassLabel label) const noexcept;

  // Throws DatasetEmpty when empty and SingleClass when only one label occurs.
  void require_trainable() const;

  bool operator==(const LabeledDataset&) const = default;

 private:
  std::vector<Instance> instances_;
};

// Parses the feature CSV. Throws SchemaMismatch for a wrong header and
// RowParseError (with 1-based line number) for malformed rows.
LabeledDataset load_dataset(std::string_view csv);
LabeledDataset load_dataset_file(const std::string& path);

std::string to_csv(const LabeledDataset& ds);
void save_dataset_file(const std::string& path, const LabeledDataset& ds);

struct Split {
  LabeledDataset train;
  LabeledDataset test;
};

// Per-class holdout: each class contributes round(n_c * train_fraction)
// instances to train (kept within [1, n_c - 1] when n_c >= 2). Both halves
// keep the original row order. Deterministic for a given seed.
Split stratified_split(const LabeledDataset& ds, double train_fraction, std::uint64_t seed);

}  // namespace skyprobe
