#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "skyprobe/packet.hpp"
#include "skyprobe/syslog.hpp"

namespace skyprobe {

// Case-sensitive payload substring rule.
struct ContentRule {
  Proto proto = Proto::Tcp;
  std::vector<std::uint8_t> content;
  std::uint32_t sid = 0;
  std::string msg;
  bool operator==(const ContentRule&) const = default;
};

// Supernode-scan probe: a UDP datagram whose payload size lies in
// [min_size, max_size] and whose byte at `offset` equals `value`.
struct UdpProbeRule {
  std::size_t offset = 12;
  std::uint8_t value = 0x02;
  std::size_t min_size = 25;
  std::size_t max_size = 39;
  std::uint32_t sid = 1031;
  std::string msg = "skype supernode scan";
  bool operator==(const UdpProbeRule&) const = default;
};

using TriggerRule = std::variant<ContentRule, UdpProbeRule>;

std::uint32_t sid_of(const TriggerRule& r) noexcept;

bool match_content(const PacketMeta& pkt, const ContentRule& rule) noexcept;
bool match_udp_login_probe(const PacketMeta& pkt, const UdpProbeRule& rule = {}) noexcept;
bool matches(const PacketMeta& pkt, const TriggerRule& rule) noexcept;

// Rule file, one rule per line ('#' comments allowed):
//   proto=tcp content="conn.skype.com" sid=1030 msg="skype login attempt"
//   probe=udp offset=12 value=0x02 dsize=25-39 sid=1031 msg="skype supernode scan"
// Throws RuleParseError (duplicate sids included).
std::vector<TriggerRule> parse_rules(std::string_view text);
std::vector<TriggerRule> load_rules_file(const std::string& path);
// The two login signatures: conn.skype.com over TCP (sid 1030) and the UDP
// supernode scan (sid 1031).
std::vector<TriggerRule> default_rules();

struct TriggerEvent {
  Ipv4Addr ip_addr;             // source of the matching packet
  TimestampUs packet_time = 0;  // rendered as the HH:MM:SS timestamp
  std::uint32_t sid = 0;
  TimestampUs wall_time = 0;    // rendered as the syslog datetime
  bool operator==(const TriggerEvent&) const = default;
};

// Syslog Snort log: {syslog} <DATETIME> INFO SnortSkypeAttach ipAddr=<IP>#timestamp=<HH:MM:SS>
std::string emit_trigger_syslog(const TriggerEvent& ev, const TimeZone& tz);

// Scans packets against a rule set. At most one event per packet (first
// matching rule wins).
class TriggerEngine {
 public:
  explicit TriggerEngine(std::vector<TriggerRule> rules = default_rules());

  std::optional<TriggerEvent> inspect(const PacketMeta& pkt) const;
  std::vector<TriggerEvent> scan(const std::vector<PacketMeta>& packets) const;

  const std::vector<TriggerRule>& rules() const noexcept { return rules_; }

 private:
  std::vector<TriggerRule> rules_;
};

}  // namespace skyprobe
