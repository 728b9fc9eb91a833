#pragma once

// Reference computations written from the definitions, independent of core/.
// Nothing here calls into the library except for plain data types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "skyprobe/dataset.hpp"
#include "skyprobe/features.hpp"

namespace oracle {

inline double entropy(const std::vector<std::size_t>& counts) {
  double n = 0;
  for (auto c : counts) n += static_cast<double>(c);
  double h = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h += -p * std::log(p) / std::log(2.0);
  }
  return h;
}

struct SplitChoice {
  int attribute = -1;
  double threshold = 0;
  double gain_ratio = 0;
};

inline double gain_ratio(const skyprobe::LabeledDataset& ds, std::size_t attr, double thr) {
  std::size_t ls = 0, ln = 0, rs = 0, rn = 0;
  for (const auto& inst : ds.instances()) {
    const bool left = inst.features.values()[attr] <= thr;
    const bool skype = inst.label == skyprobe::ClassLabel::Skype;
    (left ? (skype ? ls : ln) : (skype ? rs : rn)) += 1;
  }
  const double n = static_cast<double>(ds.size());
  const double nl = static_cast<double>(ls + ln), nr = static_cast<double>(rs + rn);
  if (nl == 0 || nr == 0) return 0;
  const double gain = entropy({ls + rs, ln + rn}) - nl / n * entropy({ls, ln}) - nr / n * entropy({rs, rn});
  const double split_info = entropy({ls + ln, rs + rn});
  return std::max(0.0, gain) / split_info;
}

// Every midpoint of every attribute; earliest (attribute, threshold) wins ties.
inline SplitChoice best_split(const skyprobe::LabeledDataset& ds, double eps = 1e-12) {
  SplitChoice best;
  for (std::size_t a = 0; a < skyprobe::kFeatureCount; ++a) {
    std::vector<double> vals;
    for (const auto& inst : ds.instances()) vals.push_back(inst.features.values()[a]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      const double thr = vals[k] + (vals[k + 1] - vals[k]) / 2.0;
      const double gr = gain_ratio(ds, a, thr);
      if (best.attribute < 0 || gr > best.gain_ratio + eps) best = {static_cast<int>(a), thr, gr};
    }
  }
  return best;
}

// Probability that a random positive outscores a random negative, ties count half.
inline double wilcoxon_auc(const std::vector<skyprobe::ClassLabel>& truth, const std::vector<double>& scores) {
  double wins = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] != skyprobe::ClassLabel::Skype) continue;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (truth[j] != skyprobe::ClassLabel::Normal) continue;
      pairs += 1;
      if (scores[i] > scores[j]) wins += 1;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

inline double log_factorial(std::size_t n) {
  double s = 0;
  for (std::size_t i = 2; i <= n; ++i) s += std::log(static_cast<double>(i));
  return s;
}

// Cooper-Herskovits log metric from explicit per-configuration counts.
inline double k2_score(const std::vector<std::vector<int>>& rows, const std::vector<int>& card, std::size_t node,
                       const std::vector<std::size_t>& parents) {
  std::map<std::vector<int>, std::vector<std::size_t>> table;
  const auto r = static_cast<std::size_t>(card[node]);
  for (const auto& row : rows) {
    std::vector<int> cfg;
    for (auto p : parents) cfg.push_back(row[p]);
    auto& counts = table[cfg];
    if (counts.empty()) counts.assign(r, 0);
    counts[static_cast<std::size_t>(row[node])] += 1;
  }
  double score = 0;
  for (const auto& [cfg, counts] : table) {
    std::size_t nj = 0;
    for (auto c : counts) nj += c;
    score += log_factorial(r - 1) - log_factorial(nj + r - 1);
    for (auto c : counts) score += log_factorial(c);
  }
  return score;
}

struct GreedyPath {
  std::vector<std::size_t> parents;
  bool ambiguous = false;
};

// Greedy parent additions driven by a full table of subset scores.
inline GreedyPath k2_greedy(const std::vector<std::vector<int>>& rows, const std::vector<int>& card,
                            std::size_t node, const std::vector<std::size_t>& preds, std::size_t max_parents,
                            double margin) {
  std::map<std::vector<std::size_t>, double> scores;
  const std::size_t m = preds.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::vector<std::size_t> subset;
    for (std::size_t b = 0; b < m; ++b)
      if (mask & (std::size_t{1} << b)) subset.push_back(preds[b]);
    scores[subset] = k2_score(rows, card, node, subset);
  }
  auto key = [](std::vector<std::size_t> s) {
    std::sort(s.begin(), s.end());
    return s;
  };
  GreedyPath path;
  double current = scores[{}];
  while (path.parents.size() < max_parents) {
    std::vector<std::pair<double, std::size_t>> options;
    for (auto z : preds) {
      if (std::find(path.parents.begin(), path.parents.end(), z) != path.parents.end()) continue;
      auto trial = path.parents;
      trial.push_back(z);
      options.push_back({scores[key(trial)], z});
    }
    if (options.empty()) break;
    std::sort(options.begin(), options.end(), [](auto& a, auto& b) { return a.first > b.first; });
    if (options.size() > 1 && options[0].first - options[1].first < margin) path.ambiguous = true;
    if (std::abs(options[0].first - current) < margin) path.ambiguous = true;
    if (options[0].first <= current) break;
    path.parents.push_back(options[0].second);
    current = options[0].first;
  }
  return path;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto p = std::filesystem::temp_directory_path() / ("skyprobe-" + tag + "-" + std::to_string(rng() % 1000000000));
  std::filesystem::create_directories(p);
  return p;
}

// Hand-built classic pcap bytes, little endian, microsecond resolution, Ethernet link.
class PcapBuilder {
 public:
  PcapBuilder() {
    put32(0xa1b2c3d4);
    put16(2);
    put16(4);
    put32(0);
    put32(0);
    put32(65535);
    put32(1);
  }

  void udp(std::uint32_t sec, std::uint32_t usec, std::array<std::uint8_t, 4> src, std::array<std::uint8_t, 4> dst,
           std::uint16_t sport, std::uint16_t dport, std::uint16_t ip_len) {
    ipv4_record(sec, usec, 17, src, dst, sport, dport, ip_len, 8);
  }

  void tcp(std::uint32_t sec, std::uint32_t usec, std::array<std::uint8_t, 4> src, std::array<std::uint8_t, 4> dst,
           std::uint16_t sport, std::uint16_t dport, std::uint16_t ip_len) {
    ipv4_record(sec, usec, 6, src, dst, sport, dport, ip_len, 20);
  }

  void arp(std::uint32_t sec) {
    record_header(sec, 0, 14 + 28);
    ethernet(0x0806);
    for (int i = 0; i < 28; ++i) bytes_.push_back(0);
  }

  void truncated_record(std::uint32_t sec) {
    record_header(sec, 0, 10);  // shorter than an Ethernet header
    ethernet(0x0800);
    bytes_.resize(bytes_.size() - 4);
  }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  void put8(std::uint8_t v) { bytes_.push_back(v); }
  void put16(std::uint16_t v) {
    put8(static_cast<std::uint8_t>(v));
    put8(static_cast<std::uint8_t>(v >> 8));
  }
  void put32(std::uint32_t v) {
    put16(static_cast<std::uint16_t>(v));
    put16(static_cast<std::uint16_t>(v >> 16));
  }
  void be16(std::uint16_t v) {
    put8(static_cast<std::uint8_t>(v >> 8));
    put8(static_cast<std::uint8_t>(v));
  }
  void record_header(std::uint32_t sec, std::uint32_t usec, std::uint32_t len) {
    put32(sec);
    put32(usec);
    put32(len);
    put32(len);
  }
  void ethernet(std::uint16_t type) {
    for (int i = 0; i < 12; ++i) put8(static_cast<std::uint8_t>(i));
    be16(type);
  }
  void ipv4_record(std::uint32_t sec, std::uint32_t usec, std::uint8_t proto, std::array<std::uint8_t, 4> src,
                   std::array<std::uint8_t, 4> dst, std::uint16_t sport, std::uint16_t dport, std::uint16_t ip_len,
                   std::uint16_t l4_header) {
    record_header(sec, usec, 14u + ip_len);
    ethernet(0x0800);
    put8(0x45);
    put8(0);
    be16(ip_len);
    be16(0);
    be16(0);
    put8(64);
    put8(proto);
    be16(0);
    for (auto b : src) put8(b);
    for (auto b : dst) put8(b);
    be16(sport);
    be16(dport);
    if (proto == 17) {
      be16(static_cast<std::uint16_t>(ip_len - 20));
      be16(0);
    } else {
      for (int i = 0; i < 8; ++i) put8(0);
      put8(0x50);
      for (int i = 0; i < 7; ++i) put8(0);
    }
    for (std::uint16_t i = 0; i < ip_len - 20 - l4_header; ++i) put8(static_cast<std::uint8_t>('a' + i % 26));
  }

  std::vector<std::uint8_t> bytes_;
};

}  // namespace oracle
