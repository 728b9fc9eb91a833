#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "skyprobe/directive.hpp"
#include "skyprobe/packet.hpp"
#include "skyprobe/siem_event.hpp"

namespace skyprobe {

struct RiskParams {
  int asset_value = 0;        // 0..5
  int event_priority = 0;     // 0..5
  int event_reliability = 0;  // 0..10
  bool operator==(const RiskParams&) const = default;
};

// Exact risk asset*priority*reliability/25, kept as its numerator.
struct RiskValue {
  int numerator = 0;

  double value() const noexcept { return numerator / 25.0; }
  // Rounded half-up to one decimal: 45/25 -> 18, 75/25 -> 30.
  int tenths() const noexcept { return (numerator * 4 + 5) / 10; }
  std::string to_string() const;  // "1.8", "3.0"
  bool operator==(const RiskValue&) const = default;
  auto operator<=>(const RiskValue&) const = default;
};

// Throws OutOfRange when any field leaves its range.
RiskValue compute_risk(const RiskParams& p);

struct Alarm {
  std::uint64_t id = 0;  // assigned by the store
  int directive_id = 0;
  std::string directive_name;
  RiskParams params;
  RiskValue risk;
  std::vector<std::uint64_t> event_ids;
  TimestampUs created_at = 0;
  std::optional<std::string> host;  // userdata_1 of the completing event
  bool operator==(const Alarm&) const = default;
};

std::string alarm_to_json(const Alarm& a);
Alarm alarm_from_json(std::string_view json);

struct Activation {
  Ipv4Addr host;
  int directive_id = 0;
  bool operator==(const Activation&) const = default;
};

struct CorrelationConfig {
  double r_th = 1.0;
  std::set<int> activation_directives{501};  // directives whose alarms activate the probe
  TimestampUs instance_ttl_us = 600'000'000;
};

struct CorrelationOutcome {
  std::vector<Alarm> alarms;
  std::vector<Activation> activations;
};

// Walks every directive's rule tree. An event advances at most one live
// instance per directive; if none can use it and a first-level rule matches, a
// new instance starts. Completing a leaf raises an alarm whose reliability is
// that of the last rule matched. Instances older than instance_ttl_us are
// dropped.
class CorrelationEngine {
 public:
  CorrelationEngine(std::vector<Directive> directives, AssetTable assets, CorrelationConfig config = {});

  CorrelationOutcome process(const NormalizedEvent& ev, std::uint64_t event_id, TimestampUs now);

  std::size_t live_instances() const noexcept;
  const std::vector<Directive>& directives() const noexcept { return directives_; }
  const CorrelationConfig& config() const noexcept { return config_; }

 private:
  struct Instance {
    const std::vector<DirectiveRule>* level = nullptr;
    std::vector<int> counts;
    std::vector<std::uint64_t> events;
    int reliability = 0;
    TimestampUs started = 0;
  };
  enum class Step { Ignored, Advanced, Completed };

  Step advance(Instance& inst, const NormalizedEvent& ev, std::uint64_t event_id);
  Alarm raise(const Directive& d, const Instance& inst, const NormalizedEvent& ev, TimestampUs now) const;

  std::vector<Directive> directives_;
  AssetTable assets_;
  CorrelationConfig config_;
  std::vector<std::vector<Instance>> live_;  // parallel to directives_
};

}  // namespace skyprobe
