#include "skyprobe/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

struct Moments {
  double mean, stddev, min, max;
};

template <typename T>
Moments moments(const std::vector<T>& xs) {
  const double n = static_cast<double>(xs.size());
  double sum = 0;
  for (T x : xs) sum += static_cast<double>(x);
  const double mean = sum / n;
  double ss = 0;
  for (T x : xs) {
    const double d = static_cast<double>(x) - mean;
    ss += d * d;
  }
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  // Clamp guards against the mean drifting outside [min, max] by one ulp.
  const double mn = static_cast<double>(*lo);
  const double mx = static_cast<double>(*hi);
  return {std::clamp(mean, mn, mx), std::sqrt(ss / n), mn, mx};
}

}  // namespace

std::array<double, kFeatureCount> FeatureVector::values() const noexcept {
  return {proto, avg_lgt, std_lgt, min_lgt, max_lgt, avg_iat, std_iat, min_iat, max_iat};
}

FeatureVector FeatureVector::from_values(const std::array<double, kFeatureCount>& v) noexcept {
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
}

FeatureVector extract_features(const FlowRecord& flow) {
  if (flow.packet_lengths.size() < 2 || flow.inter_arrival_ms.empty())
    throw SingletonFlow("flow has fewer than two packets");
  const Moments lgt = moments(flow.packet_lengths);
  const Moments iat = moments(flow.inter_arrival_ms);
  FeatureVector fv;
  fv.proto = flow.key.proto == Proto::Udp ? 1.0 : 0.0;
  fv.avg_lgt = lgt.mean;
  fv.std_lgt = lgt.stddev;
  fv.min_lgt = lgt.min;
  fv.max_lgt = lgt.max;
  fv.avg_iat = iat.mean;
  fv.std_iat = iat.stddev;
  fv.min_iat = iat.min;
  fv.max_iat = iat.max;
  return fv;
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc{} ? end : buf);
}

std::string format_feature_row(const FeatureVector& fv, std::string_view label) {
  std::string row;
  for (double v : fv.values()) {
    row += format_number(v);
    row += ',';
  }
  row += label;
  return row;
}

}  // namespace skyprobe
