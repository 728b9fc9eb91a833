#include "skyprobe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>

#include "skyprobe/features.hpp"
#include "skyprobe/flows.hpp"

namespace skyprobe {

const TrafficProfile& profile_for(ClassLabel label) noexcept {
  return label == ClassLabel::Skype ? kSkypeProfile : kNormalProfile;
}

std::vector<PacketMeta> generate_flow(std::mt19937_64& rng, ClassLabel label, Ipv4Addr host, TimestampUs start,
                                      std::uint32_t index) {
  const TrafficProfile& prof = profile_for(label);
  std::uniform_int_distribution<std::uint32_t> len(prof.len_min, prof.len_max);
  std::uniform_real_distribution<double> iat(prof.iat_min_ms, prof.iat_max_ms);
  std::uniform_int_distribution<std::size_t> count(prof.packets_min, prof.packets_max);
  std::bernoulli_distribution udp(prof.udp_probability);
  std::bernoulli_distribution outbound(0.5);
  std::uniform_int_distribution<int> octet(1, 254);

  const Proto proto = udp(rng) ? Proto::Udp : Proto::Tcp;
  const Ipv4Addr peer = label == ClassLabel::Skype
                            ? Ipv4Addr(10, static_cast<std::uint8_t>(octet(rng)), static_cast<std::uint8_t>(octet(rng)),
                                       static_cast<std::uint8_t>(octet(rng)))
                            : Ipv4Addr(93, 184, static_cast<std::uint8_t>(octet(rng)),
                                       static_cast<std::uint8_t>(octet(rng)));
  const std::uint16_t host_port = static_cast<std::uint16_t>(20000 + index % 40000);
  const std::uint16_t peer_port =
      label == ClassLabel::Skype ? static_cast<std::uint16_t>(1024 + octet(rng) * 200) : (proto == Proto::Tcp ? 443 : 53);

  std::vector<PacketMeta> out;
  const std::size_t n = count(rng);
  TimestampUs ts = start;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) ts += std::max<TimestampUs>(1, std::llround(iat(rng) * 1000.0));
    PacketMeta p;
    p.timestamp = ts;
    p.proto = proto;
    p.length = std::max<std::uint32_t>(len(rng), header_bytes(proto));
    const bool up = i == 0 || outbound(rng);
    p.src_ip = up ? host : peer;
    p.dst_ip = up ? peer : host;
    p.src_port = up ? host_port : peer_port;
    p.dst_port = up ? peer_port : host_port;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PacketMeta> merge_by_time(std::vector<std::vector<PacketMeta>> parts) {
  std::vector<PacketMeta> out;
  for (auto& p : parts) out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  std::stable_sort(out.begin(), out.end(),
                   [](const PacketMeta& a, const PacketMeta& b) { return a.timestamp < b.timestamp; });
  return out;
}

std::vector<PacketMeta> generate_traffic(ClassLabel label, Ipv4Addr host, std::size_t flows, TimestampUs start,
                                         std::uint64_t seed, TimestampUs spacing_us) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<PacketMeta>> parts;
  for (std::size_t i = 0; i < flows; ++i)
    parts.push_back(generate_flow(rng, label, host, start + static_cast<TimestampUs>(i) * spacing_us,
                                  static_cast<std::uint32_t>(i)));
  return merge_by_time(std::move(parts));
}

LabeledDataset generate_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LabeledDataset ds;
  const Ipv4Addr host(192, 168, 1, 200);
  for (std::size_t i = 0; i < n; ++i) {
    const ClassLabel label = i % 2 == 0 ? ClassLabel::Skype : ClassLabel::Normal;
    const auto packets = generate_flow(rng, label, host, 0, static_cast<std::uint32_t>(i));
    const auto flows = assemble_flows(packets);
    ds.add(extract_features(flows.front()), label);
  }
  return ds;
}

PacketMeta login_packet(Ipv4Addr host, TimestampUs ts) {
  constexpr std::string_view kRequest =
      "GET http://conn.skype.com/ HTTP/1.1\r\nHost: conn.skype.com\r\nUser-Agent: Skype\r\n\r\n";
  PacketMeta p;
  p.timestamp = ts;
  p.proto = Proto::Tcp;
  p.src_ip = host;
  p.dst_ip = Ipv4Addr(91, 190, 216, 17);
  p.src_port = 50123;
  p.dst_port = 80;
  p.payload.assign(kRequest.begin(), kRequest.end());
  p.length = header_bytes(Proto::Tcp) + static_cast<std::uint32_t>(p.payload.size());
  return p;
}

PacketMeta udp_probe_packet(Ipv4Addr host, TimestampUs ts) {
  PacketMeta p;
  p.timestamp = ts;
  p.proto = Proto::Udp;
  p.src_ip = host;
  p.dst_ip = Ipv4Addr(111, 221, 74, 18);
  p.src_port = 33033;
  p.dst_port = 33033;
  p.payload.assign(30, 0x11);
  p.payload[12] = 0x02;
  p.length = header_bytes(Proto::Udp) + 30;
  return p;
}

}  // namespace skyprobe
