#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "skyprobe/flows.hpp"

namespace skyprobe {

inline constexpr std::size_t kFeatureCount = 9;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "proto", "avg_lgt", "std_lgt", "min_lgt", "max_lgt", "avg_iat", "std_iat", "min_iat", "max_iat"};

// Statistical summary of one flow. Lengths in bytes, inter-arrival times in
// milliseconds, deviations are population (divide by n).
struct FeatureVector {
  double proto = 0;  // TCP = 0, UDP = 1
  double avg_lgt = 0;
  double std_lgt = 0;
  double min_lgt = 0;
  double max_lgt = 0;
  double avg_iat = 0;
  double std_iat = 0;
  double min_iat = 0;
  double max_iat = 0;

  std::array<double, kFeatureCount> values() const noexcept;
  static FeatureVector from_values(const std::array<double, kFeatureCount>& v) noexcept;

  bool operator==(const FeatureVector&) const = default;
};

// Throws SingletonFlow for flows with fewer than two packets.
FeatureVector extract_features(const FlowRecord& flow);

// CSV header shared by the extractor output and the dataset loader.
inline constexpr std::string_view kFeatureCsvHeader =
    "proto,avg_lgt,std_lgt,min_lgt,max_lgt,avg_iat,std_iat,min_iat,max_iat,label";

// Shortest round-trip, locale-independent decimal text.
std::string format_number(double v);

// One CSV row (no trailing newline) with the given label text.
std::string format_feature_row(const FeatureVector& fv, std::string_view label);

}  // namespace skyprobe
