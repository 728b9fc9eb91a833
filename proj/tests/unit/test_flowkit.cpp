#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "skyprobe/errors.hpp"
#include "skyprobe/features.hpp"
#include "skyprobe/flows.hpp"
#include "skyprobe/pcap.hpp"
#include "skyprobe/synth.hpp"

using namespace skyprobe;

namespace {

PacketMeta udp(TimestampUs ts, std::uint32_t len, std::uint16_t sport = 5000, std::uint16_t dport = 6000) {
  PacketMeta p;
  p.timestamp = ts;
  p.src_ip = Ipv4Addr{10, 0, 0, 1};
  p.dst_ip = Ipv4Addr{10, 0, 0, 2};
  p.src_port = sport;
  p.dst_port = dport;
  p.proto = Proto::Udp;
  p.length = len;
  return p;
}

FlowRecord flow_of(Proto proto, std::vector<std::uint32_t> lengths, std::vector<double> iats) {
  FlowRecord f;
  f.key.proto = proto;
  f.packet_lengths = std::move(lengths);
  f.inter_arrival_ms = std::move(iats);
  return f;
}

}  // namespace

TEST(Pcap, HeaderOnlyCaptureIsEmpty) {
  oracle::PcapBuilder b;
  const auto cap = decode_capture(b.bytes());
  EXPECT_TRUE(cap.packets.empty());
  EXPECT_EQ(cap.skipped, 0u);
}

TEST(Pcap, ArpIsSkipped) {
  oracle::PcapBuilder b;
  b.arp(1);
  const auto cap = decode_capture(b.bytes());
  EXPECT_TRUE(cap.packets.empty());
  EXPECT_EQ(cap.skipped, 1u);
}

TEST(Pcap, HandBuiltUdpRecordsReadBack) {
  oracle::PcapBuilder b;
  b.udp(100, 0, {192, 168, 1, 200}, {10, 0, 0, 9}, 4000, 33033, 60);
  b.udp(100, 250000, {192, 168, 1, 200}, {10, 0, 0, 9}, 4000, 33033, 80);
  b.udp(101, 500, {10, 0, 0, 9}, {192, 168, 1, 200}, 33033, 4000, 100);
  const auto cap = decode_capture(b.bytes());
  ASSERT_EQ(cap.packets.size(), 3u);
  EXPECT_EQ(cap.skipped, 0u);
  EXPECT_EQ(cap.packets[0].length, 60u);
  EXPECT_EQ(cap.packets[1].length, 80u);
  EXPECT_EQ(cap.packets[2].length, 100u);
  EXPECT_EQ(cap.packets[1].timestamp, 100'250'000);
  EXPECT_EQ(cap.packets[2].timestamp, 101'000'500);
  EXPECT_EQ(cap.packets[0].src_ip.to_string(), "192.168.1.200");
  EXPECT_EQ(cap.packets[0].dst_port, 33033);
  EXPECT_EQ(cap.packets[0].proto, Proto::Udp);
  EXPECT_EQ(cap.packets[0].payload.size(), 60u - 28u);
}

TEST(Pcap, TcpPayloadStartsAfterDataOffset) {
  oracle::PcapBuilder b;
  b.tcp(5, 0, {1, 2, 3, 4}, {5, 6, 7, 8}, 1234, 80, 50);
  const auto cap = decode_capture(b.bytes());
  ASSERT_EQ(cap.packets.size(), 1u);
  EXPECT_EQ(cap.packets[0].proto, Proto::Tcp);
  EXPECT_EQ(cap.packets[0].payload.size(), 10u);
  EXPECT_EQ(cap.packets[0].payload[0], 'a');
}

TEST(Pcap, ShortRecordIsSkippedNotFatal) {
  oracle::PcapBuilder b;
  b.truncated_record(1);
  b.udp(2, 0, {1, 1, 1, 1}, {2, 2, 2, 2}, 1, 2, 40);
  const auto cap = decode_capture(b.bytes());
  EXPECT_EQ(cap.packets.size(), 1u);
  EXPECT_EQ(cap.skipped, 1u);
}

TEST(Pcap, TornTailCountsAsSkipped) {
  oracle::PcapBuilder b;
  b.udp(2, 0, {1, 1, 1, 1}, {2, 2, 2, 2}, 1, 2, 40);
  auto bytes = b.bytes();
  bytes.resize(bytes.size() - 5);
  const auto cap = decode_capture(bytes);
  EXPECT_TRUE(cap.packets.empty());
  EXPECT_EQ(cap.skipped, 1u);
}

TEST(Pcap, BadMagicAndShortHeaderThrow) {
  std::vector<std::uint8_t> junk(24, 0x11);
  EXPECT_THROW(decode_capture(junk), MalformedCapture);
  std::vector<std::uint8_t> tiny(10, 0);
  EXPECT_THROW(decode_capture(tiny), MalformedCapture);
}

// The encoder zero-fills each frame up to its IP length, so that padding
// comes back as payload.
static std::vector<PacketMeta> padded(std::vector<PacketMeta> pkts) {
  for (auto& p : pkts) p.payload.resize(p.length - header_bytes(p.proto), 0);
  return pkts;
}

TEST(Pcap, EncodeDecodeRoundTrip) {
  auto pkts = generate_traffic(ClassLabel::Skype, Ipv4Addr{192, 168, 1, 200}, 5, 1'000'000'000, 3);
  const auto bytes = encode_capture(pkts);
  const auto cap = decode_capture(bytes);
  EXPECT_EQ(cap.skipped, 0u);
  EXPECT_EQ(cap.packets, padded(pkts));
}

TEST(Pcap, ChunkedFeedingMatchesWholeDecode) {
  auto pkts = generate_traffic(ClassLabel::Normal, Ipv4Addr{10, 1, 1, 1}, 8, 1'000'000'000, 9);
  const auto bytes = encode_capture(pkts);
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    PcapStreamDecoder dec;
    std::vector<PacketMeta> got;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
      const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1 + rng() % 97);
      auto part = dec.feed(std::span(bytes).subspan(pos, n));
      got.insert(got.end(), part.begin(), part.end());
      pos += n;
    }
    dec.finish();
    EXPECT_EQ(got, padded(pkts));
  }
}

TEST(Flows, NoPacketsNoFlows) { EXPECT_TRUE(assemble_flows({}).empty()); }

TEST(Flows, OneSecondGapIsOneFlow) {
  std::vector<PacketMeta> p{udp(0, 100), udp(1'000'000, 100)};
  const auto flows = assemble_flows(p, 60);
  ASSERT_EQ(flows.size(), 1u);
  ASSERT_EQ(flows[0].inter_arrival_ms.size(), 1u);
  EXPECT_DOUBLE_EQ(flows[0].inter_arrival_ms[0], 1000.0);
}

TEST(Flows, IdleGapBeyondTimeoutSplits) {
  std::vector<PacketMeta> p{udp(0, 100), udp(120'000'000, 100)};
  const auto flows = assemble_flows(p, 60);
  ASSERT_EQ(flows.size(), 2u);
  EXPECT_EQ(flows[0].packet_count(), 1u);
  EXPECT_EQ(flows[1].packet_count(), 1u);
}

TEST(Flows, BothDirectionsShareAKey) {
  auto a = udp(0, 100);
  auto b = udp(10, 90);
  std::swap(b.src_ip, b.dst_ip);
  std::swap(b.src_port, b.dst_port);
  EXPECT_EQ(FlowKey::of(a), FlowKey::of(b));
  const std::vector<PacketMeta> p{a, b};
  EXPECT_EQ(assemble_flows(p).size(), 1u);
}

TEST(Flows, PacketsAreConservedAndIatsAlign) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<PacketMeta> p;
    TimestampUs t = 0;
    const int n = 1 + static_cast<int>(rng() % 200);
    for (int i = 0; i < n; ++i) {
      t += static_cast<TimestampUs>(rng() % 90'000'000);
      p.push_back(udp(t, 40 + static_cast<std::uint32_t>(rng() % 1400),
                      static_cast<std::uint16_t>(1 + rng() % 3), static_cast<std::uint16_t>(1 + rng() % 3)));
    }
    const auto flows = assemble_flows(p, 60);
    std::size_t total = 0;
    for (const auto& f : flows) {
      total += f.packet_count();
      EXPECT_EQ(f.inter_arrival_ms.size() + 1, f.packet_count());
      for (double g : f.inter_arrival_ms) EXPECT_LE(g, 60'000.0);
    }
    EXPECT_EQ(total, p.size());
  }
}

TEST(Features, ConstantSequence) {
  const auto fv = extract_features(flow_of(Proto::Tcp, {100, 100, 100}, {10, 10}));
  EXPECT_DOUBLE_EQ(fv.avg_lgt, 100);
  EXPECT_DOUBLE_EQ(fv.std_lgt, 0);
  EXPECT_DOUBLE_EQ(fv.min_lgt, 100);
  EXPECT_DOUBLE_EQ(fv.max_lgt, 100);
  EXPECT_DOUBLE_EQ(fv.avg_iat, 10);
  EXPECT_DOUBLE_EQ(fv.std_iat, 0);
  EXPECT_DOUBLE_EQ(fv.proto, 0);
}

TEST(Features, PopulationStdOfTwoValues) {
  const auto fv = extract_features(flow_of(Proto::Udp, {50, 150}, {20}));
  EXPECT_DOUBLE_EQ(fv.avg_lgt, 100);
  EXPECT_DOUBLE_EQ(fv.std_lgt, 50);
  EXPECT_DOUBLE_EQ(fv.min_lgt, 50);
  EXPECT_DOUBLE_EQ(fv.max_lgt, 150);
  EXPECT_DOUBLE_EQ(fv.avg_iat, 20);
  EXPECT_DOUBLE_EQ(fv.std_iat, 0);
  EXPECT_DOUBLE_EQ(fv.proto, 1);
}

TEST(Features, SingletonFlowRejected) {
  EXPECT_THROW(extract_features(flow_of(Proto::Udp, {50}, {})), SingletonFlow);
}

TEST(Features, OrderingInvariantsOnRandomFlows) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 50;
    std::vector<std::uint32_t> lens;
    std::vector<double> iats;
    for (std::size_t i = 0; i < n; ++i) lens.push_back(28 + static_cast<std::uint32_t>(rng() % 1472));
    for (std::size_t i = 0; i + 1 < n; ++i) iats.push_back(static_cast<double>(rng() % 100000) / 7.0);
    const auto fv = extract_features(flow_of(Proto::Tcp, lens, iats));
    EXPECT_LE(fv.min_lgt, fv.avg_lgt);
    EXPECT_LE(fv.avg_lgt, fv.max_lgt);
    EXPECT_LE(fv.min_iat, fv.avg_iat);
    EXPECT_LE(fv.avg_iat, fv.max_iat);
    EXPECT_GE(fv.std_lgt, 0);
    EXPECT_GE(fv.std_iat, 0);
    double ss = 0;
    const double mean = std::accumulate(lens.begin(), lens.end(), 0.0) / static_cast<double>(n);
    for (auto l : lens) ss += (l - mean) * (l - mean);
    EXPECT_NEAR(fv.std_lgt, std::sqrt(ss / static_cast<double>(n)), 1e-9);
  }
}

TEST(Features, CsvRowUsesShortestRoundTrip) {
  const auto fv = extract_features(flow_of(Proto::Udp, {50, 150}, {0.1}));
  EXPECT_EQ(format_feature_row(fv, "Skype"), "1,100,50,50,150,0.1,0,0.1,0.1,Skype");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333333333");
}
