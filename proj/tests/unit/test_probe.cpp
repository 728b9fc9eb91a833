#include <gtest/gtest.h>

#include <sstream>
#include <thread>

#include "skyprobe/channel.hpp"
#include "skyprobe/errors.hpp"
#include "skyprobe/model.hpp"
#include "skyprobe/pcap.hpp"
#include "skyprobe/probe.hpp"
#include "skyprobe/siem_server.hpp"
#include "skyprobe/socket.hpp"
#include "skyprobe/synth.hpp"

using namespace skyprobe;

namespace {

const Ipv4Addr kHost{192, 168, 1, 200};
const Ipv4Addr kOther{10, 0, 0, 7};
// 2017-01-30 19:25:00 CET, a multiple of 300 s
constexpr TimestampUs kWindowStart = 1485800700LL * 1'000'000;

std::shared_ptr<const Ensemble> ensemble() {
  static const auto e = std::make_shared<const Ensemble>(train_all(generate_corpus(600, 1)));
  return e;
}

std::vector<PacketMeta> mixed_traffic() {
  return merge_by_time({generate_traffic(ClassLabel::Skype, kHost, 12, kWindowStart + 20'000'000, 11),
                        generate_traffic(ClassLabel::Normal, kOther, 12, kWindowStart + 20'000'000, 12)});
}

std::vector<WindowVerdict> run_engine(const std::vector<PacketMeta>& pkts, bool monitor) {
  ProbeConfig cfg;
  cfg.threshold.auc_th = 0.905;
  ProbeEngine engine(ensemble(), cfg);
  if (monitor) engine.hosts().add(kHost);
  std::vector<WindowVerdict> out;
  for (const auto& p : pkts) {
    auto v = engine.ingest(p);
    out.insert(out.end(), v.begin(), v.end());
  }
  auto tail = engine.finish();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

}  // namespace

TEST(Handshake, CompliantServer) {
  auto [client, server] = make_memory_channel_pair();
  std::thread srv([&, s = server.get()] { accept_probe_handshake(*s, Millis(2000)); });
  EXPECT_NO_THROW(client_handshake(*client));
  srv.join();
}

TEST(Handshake, RejectedReply) {
  auto [client, server] = make_memory_channel_pair();
  std::thread srv([s = server.get()] {
    s->recv_line(Millis(2000));
    s->send_line("Err id=1");
  });
  EXPECT_THROW(client_handshake(*client), HandshakeRejected);
  srv.join();
}

TEST(Handshake, SilentServerTimesOut) {
  auto [client, server] = make_memory_channel_pair();
  EXPECT_THROW(client_handshake(*client, kConnectLine, Millis(50)), Timeout);
}

TEST(Handshake, OverTcp) {
  auto listener = TcpListener::bind("127.0.0.1", 0);
  std::thread srv([&] {
    auto stream = listener.accept(Millis(5000));
    ASSERT_TRUE(stream);
    TcpLineChannel ch(std::move(*stream));
    accept_probe_handshake(ch, Millis(2000));
    ch.send_line(activation_line(kHost));
    auto reply = ch.recv_line(Millis(2000));
    ASSERT_TRUE(reply);
    EXPECT_EQ(*reply, "OK");
  });
  ProbeConfig cfg;
  cfg.server_port = listener.port();
  auto ch = connect_to_siem(cfg);
  HostSet hosts;
  // The server hangs up once it has read OK.
  try {
    while (hosts.empty()) pump_control(*ch, hosts, Millis(100));
  } catch (const ChannelClosed&) {
  }
  srv.join();
  EXPECT_TRUE(hosts.contains(kHost));
}

TEST(Handshake, RefusedConnection) {
  std::uint16_t port;
  {
    auto l = TcpListener::bind("127.0.0.1", 0);
    port = l.port();
  }
  ProbeConfig cfg;
  cfg.server_port = port;
  EXPECT_THROW(connect_to_siem(cfg), ConnectionRefused);
}

TEST(Activation, IdempotentAndValidated) {
  HostSet hosts;
  EXPECT_TRUE(activate(hosts, "192.168.1.200"));
  EXPECT_FALSE(activate(hosts, "192.168.1.200"));
  EXPECT_EQ(hosts.size(), 1u);
  EXPECT_THROW(activate(hosts, "192.168.1.300"), InvalidAddress);
  EXPECT_EQ(handle_control_line("ACTIVATE 10.0.0.1", hosts), "OK");
  EXPECT_EQ(handle_control_line("ACTIVATE 10.0.0.1", hosts), "OK");
  EXPECT_EQ(handle_control_line("ACTIVATE nope", hosts), "ERR invalid address");
  EXPECT_EQ(handle_control_line("DEACTIVATE 10.0.0.1", hosts), "ERR unknown command");
  EXPECT_EQ(hosts.snapshot(), (std::vector<Ipv4Addr>{Ipv4Addr{10, 0, 0, 1}, kHost}));
  EXPECT_EQ(parse_activation(activation_line(kHost)), kHost);
}

TEST(Verdict, ThresholdBoundary) {
  const auto all = make_verdict(kHost, 0, 1, 10, 10, 0.905);
  EXPECT_DOUBLE_EQ(all.score, 1.0);
  EXPECT_TRUE(all.fired);
  const auto nine = make_verdict(kHost, 0, 1, 10, 9, 0.905);
  EXPECT_DOUBLE_EQ(nine.score, 0.9);
  EXPECT_FALSE(nine.fired);
  const auto none = make_verdict(kHost, 0, 1, 0, 0, 0.905);
  EXPECT_EQ(none.score, 0.0);
  EXPECT_FALSE(none.fired);
  EXPECT_FALSE(make_verdict(kHost, 0, 1, 0, 0, 0.0).fired);
}

TEST(Verdict, EvaluateWindowSkipsSingletons) {
  auto pkts = generate_traffic(ClassLabel::Skype, kHost, 5, kWindowStart, 3);
  auto flows = assemble_flows(pkts);
  FlowRecord single;
  single.packet_lengths = {100};
  flows.push_back(single);
  const auto v = evaluate_window(kHost, kWindowStart, kWindowStart + 1, flows, *ensemble(), 0.905);
  EXPECT_EQ(v.flows_total, 5u);
  EXPECT_EQ(v.flows_skype, 5u);
  EXPECT_TRUE(v.fired);
}

TEST(SessionSyslog, MatchesLoggedForm) {
  // 2017-01-30 19:25:30 CET
  const auto v = make_verdict(kHost, 0, 1485800730LL * 1'000'000, 3, 3, 0.905);
  EXPECT_EQ(emit_session_syslog(v, *TimeZone::parse("CET")),
            "Syslog ESkyPRO log: {syslog} Mon Jan 30 19:25:30 CET 2017 INFO SkypeSession "
            "ipAddr=192.168.1.200#timestamp=19:25:30");
  EXPECT_THROW(emit_session_syslog(make_verdict(kHost, 0, 1, 3, 0, 0.905), TimeZone::utc()), std::logic_error);
}

TEST(ProbeEngine, EmptyMonitorSetClassifiesNothing) {
  ProbeEngine engine(ensemble(), ProbeConfig{});
  for (const auto& p : mixed_traffic()) EXPECT_TRUE(engine.ingest(p).empty());
  EXPECT_TRUE(engine.finish().empty());
  EXPECT_EQ(engine.classified_flows(), 0u);
}

TEST(ProbeEngine, OnlyMonitoredHostIsJudged) {
  const auto verdicts = run_engine(mixed_traffic(), true);
  ASSERT_EQ(verdicts.size(), 1u);
  EXPECT_EQ(verdicts[0].host, kHost);
  EXPECT_EQ(verdicts[0].flows_total, 12u);
  EXPECT_TRUE(verdicts[0].fired);
  EXPECT_EQ(verdicts[0].window_start, kWindowStart);
  EXPECT_EQ(verdicts[0].window_end, kWindowStart + 300'000'000);
}

TEST(ProbeEngine, WindowsTileTheTimeline) {
  std::vector<std::vector<PacketMeta>> parts;
  for (int w = 0; w < 3; ++w)
    parts.push_back(generate_traffic(ClassLabel::Skype, kHost, 4, kWindowStart + w * 300'000'000LL + 10'000'000,
                                     static_cast<std::uint64_t>(w)));
  const auto verdicts = run_engine(merge_by_time(parts), true);
  ASSERT_EQ(verdicts.size(), 3u);
  for (std::size_t i = 1; i < verdicts.size(); ++i) EXPECT_EQ(verdicts[i].window_start, verdicts[i - 1].window_end);
}

TEST(ProbeEngine, OfflineStreamMatchesLiveFeed) {
  const auto pkts = mixed_traffic();
  const auto live = run_engine(pkts, true);
  const auto bytes = encode_capture(pkts);
  for (std::size_t chunk : {7u, 64u, 65536u}) {
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    ProbeEngine engine(ensemble(), ProbeConfig{});
    engine.hosts().add(kHost);
    std::vector<WindowVerdict> offline;
    stream_packets(in, [&](const PacketMeta& p) {
      auto v = engine.ingest(p);
      offline.insert(offline.end(), v.begin(), v.end());
    }, chunk);
    auto tail = engine.finish();
    offline.insert(offline.end(), tail.begin(), tail.end());
    EXPECT_EQ(offline, live) << "chunk " << chunk;
  }
}

TEST(ProbeRuntime, ActivationOverControlChannelGatesOutput) {
  auto [probe_side, siem_side] = make_memory_channel_pair();
  MemorySyslogSink sink;
  ProbeConfig cfg;
  cfg.tz = *TimeZone::parse("CET");
  ProbeRuntime rt(ensemble(), cfg, sink);
  rt.attach(std::move(probe_side));
  siem_side->send_line(activation_line(kHost));
  const auto reply = siem_side->recv_line(Millis(2000));
  ASSERT_TRUE(reply);
  EXPECT_EQ(*reply, "OK");
  for (const auto& p : mixed_traffic()) rt.ingest(p);
  rt.finish();
  rt.stop();
  const auto lines = sink.lines();
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_NE(lines[0].find("INFO SkypeSession ipAddr=192.168.1.200#timestamp=19:30:00"), std::string::npos);
}

TEST(ProbeConfig, Validation) {
  ProbeConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.window_seconds = 0;
  EXPECT_ANY_THROW(cfg.validate());
  cfg = ProbeConfig{};
  cfg.threshold.auc_th = 1.5;
  EXPECT_ANY_THROW(cfg.validate());
}
