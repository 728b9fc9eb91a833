#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "skyprobe/packet.hpp"

namespace skyprobe {

struct Endpoint {
  Ipv4Addr ip;
  std::uint16_t port = 0;
  constexpr auto operator<=>(const Endpoint&) const = default;
};

// Direction-independent 5-tuple: both directions of a conversation share a key.
struct FlowKey {
  Proto proto = Proto::Tcp;
  Endpoint lo;
  Endpoint hi;

  static FlowKey of(const PacketMeta& pkt) noexcept;
  bool involves(Ipv4Addr host) const noexcept { return lo.ip == host || hi.ip == host; }

  constexpr auto operator<=>(const FlowKey&) const = default;
};

struct FlowRecord {
  FlowKey key;
  TimestampUs first_ts = 0;
  TimestampUs last_ts = 0;
  std::vector<std::uint32_t> packet_lengths;
  std::vector<double> inter_arrival_ms;  // size() == packet_lengths.size() - 1

  std::size_t packet_count() const noexcept { return packet_lengths.size(); }
  bool operator==(const FlowRecord&) const = default;
};

}  // namespace skyprobe

template <>
struct std::hash<skyprobe::FlowKey> {
  std::size_t operator()(const skyprobe::FlowKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.lo.ip.value()) * 0x9e3779b97f4a7c15ULL;
    h ^= (static_cast<std::uint64_t>(k.hi.ip.value()) << 1) + 0x632be59bd9b4e019ULL + (h << 6) + (h >> 2);
    h ^= (std::uint64_t{k.lo.port} << 32) | (std::uint64_t{k.hi.port} << 16) |
         static_cast<std::uint64_t>(k.proto);
    return static_cast<std::size_t>(h * 0xbf58476d1ce4e5b9ULL);
  }
};

namespace skyprobe {

// Groups packets into bidirectional flows. A flow closes when the next packet
// for its key arrives more than `idle_timeout` after the previous one.
// Stateful per capture source; feed packets in timestamp order.
class FlowAssembler {
 public:
  explicit FlowAssembler(double idle_timeout_seconds = 60.0);

  void push(const PacketMeta& pkt);

  // Closes flows idle for longer than the timeout as of `now`.
  void expire(TimestampUs now);

  // Closes every open flow and returns all flows not yet handed out, ordered
  // by first packet time (ties: order of creation).
  std::vector<FlowRecord> flush();

  // Returns flows already closed (by timeout or expire()) without touching
  // open ones, ordered as in flush().
  std::vector<FlowRecord> take_closed();

  std::size_t open_flows() const noexcept { return open_.size(); }

 private:
  struct Tagged {
    std::uint64_t seq;
    FlowRecord flow;
  };

  TimestampUs timeout_us_;
  std::uint64_t next_seq_ = 0;
  std::unordered_map<FlowKey, Tagged> open_;
  std::vector<Tagged> closed_;
};

std::vector<FlowRecord> assemble_flows(std::span<const PacketMeta> packets,
                                       double idle_timeout_seconds = 60.0);

}  // namespace skyprobe
