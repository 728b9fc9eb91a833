#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "skyprobe/ipv4.hpp"
#include "skyprobe/syslog.hpp"

namespace skyprobe {

inline constexpr int kPluginSnortAttach = 4059;
inline constexpr int kPluginSkypeSession = 4060;

enum class EventType { Detector, Monitor };
std::string_view to_string(EventType t) noexcept;

struct PluginInfo {
  int plugin_id = 0;
  int plugin_sid = 1;
  std::string_view tag;  // the INFO keyword in the syslog line
  std::string_view source;
  int priority = 1;
  EventType type = EventType::Detector;
};

// The two shipped plugins: SnortSkypeAttach (4059) and SkypeSession (4060).
const PluginInfo* find_plugin(int plugin_id) noexcept;
const PluginInfo* find_plugin_by_tag(std::string_view tag) noexcept;

struct NormalizedEvent {
  int plugin_id = 0;
  int plugin_sid = 0;
  EventType type = EventType::Detector;
  std::string date;  // datetime text as found in the line
  Ipv4Addr sensor{127, 0, 0, 1};
  std::string interface = "eth0";
  int priority = 1;
  std::string protocol;
  std::optional<Ipv4Addr> src_ip;
  std::optional<std::uint16_t> src_port;
  std::optional<Ipv4Addr> dst_ip;
  std::optional<std::uint16_t> dst_port;
  std::string log;
  std::array<std::optional<std::string>, 9> userdata;  // userdata_1 .. userdata_9

  const std::optional<std::string>& userdata_n(int n) const { return userdata.at(static_cast<std::size_t>(n - 1)); }
  bool operator==(const NormalizedEvent&) const = default;
};

// Applies the agent regex. userdata_1/2 receive the ipAddr and timestamp
// values (captures stop at ',', '#', whitespace or end of line). The plugin is
// chosen from the INFO keyword unless `plugin_id` forces one. Throws
// NormalizationFailed.
NormalizedEvent normalize(std::string_view raw, std::optional<int> plugin_id = std::nullopt,
                          Ipv4Addr sensor = Ipv4Addr{127, 0, 0, 1});

std::string event_to_json(const NormalizedEvent& ev);
NormalizedEvent event_from_json(std::string_view json);

}  // namespace skyprobe
