#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "skyprobe/dataset.hpp"
#include "skyprobe/packet.hpp"

namespace skyprobe {

// Per-class traffic generator. Lengths are IP total lengths drawn uniformly
// from [len_min, len_max]; inter-arrival times uniformly from
// [iat_min_ms, iat_max_ms].
struct TrafficProfile {
  std::uint32_t len_min, len_max;
  double iat_min_ms, iat_max_ms;
  double udp_probability;
  std::size_t packets_min = 5, packets_max = 40;
};

inline constexpr TrafficProfile kSkypeProfile{60, 160, 10.0, 40.0, 0.85};
inline constexpr TrafficProfile kNormalProfile{200, 1500, 1.0, 5000.0, 0.30};

const TrafficProfile& profile_for(ClassLabel label) noexcept;

// One bidirectional flow between `host` and a generated peer. `index` keeps
// the 5-tuples of flows from the same host distinct. Payloads are left empty
// (the capture encoder zero-fills them).
std::vector<PacketMeta> generate_flow(std::mt19937_64& rng, ClassLabel label, Ipv4Addr host, TimestampUs start,
                                      std::uint32_t index);

// `flows` flows of one class starting every `spacing_us` from `start`, merged
// in timestamp order.
std::vector<PacketMeta> generate_traffic(ClassLabel label, Ipv4Addr host, std::size_t flows, TimestampUs start,
                                         std::uint64_t seed, TimestampUs spacing_us = 2'000'000);

// Balanced labeled corpus (ceil(n/2) Skype, floor(n/2) Normal, interleaved)
// whose features are extracted from generated flows.
LabeledDataset generate_corpus(std::size_t n, std::uint64_t seed);

// TCP packet from `host` carrying "conn.skype.com" in an HTTP request.
PacketMeta login_packet(Ipv4Addr host, TimestampUs ts);
// UDP supernode-scan datagram: 30-byte payload with 0x02 at offset 12.
PacketMeta udp_probe_packet(Ipv4Addr host, TimestampUs ts);

// Merges packet lists by timestamp (stable across inputs).
std::vector<PacketMeta> merge_by_time(std::vector<std::vector<PacketMeta>> parts);

}  // namespace skyprobe
