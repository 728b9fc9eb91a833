#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "skyprobe/ipv4.hpp"

namespace skyprobe {

// Microseconds since the Unix epoch.
using TimestampUs = std::int64_t;

enum class Proto : std::uint8_t { Tcp = 6, Udp = 17 };

std::string_view to_string(Proto p) noexcept;

// One IPv4 TCP/UDP packet as seen by the sensor.
struct PacketMeta {
  TimestampUs timestamp = 0;
  Ipv4Addr src_ip;
  Ipv4Addr dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Proto proto = Proto::Tcp;
  std::uint32_t length = 0;  // IP total length
  std::vector<std::uint8_t> payload;

  bool operator==(const PacketMeta&) const = default;
};

// Bytes of IPv4 (no options) plus transport header for `p`.
constexpr std::uint32_t header_bytes(Proto p) noexcept { return p == Proto::Tcp ? 40 : 28; }

}  // namespace skyprobe
