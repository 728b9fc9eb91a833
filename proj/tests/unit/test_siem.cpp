#include <gtest/gtest.h>

#include <fcntl.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "skyprobe/channel.hpp"
#include "skyprobe/correlation.hpp"
#include "skyprobe/directive.hpp"
#include "skyprobe/errors.hpp"
#include "skyprobe/probe.hpp"
#include "skyprobe/siem_event.hpp"
#include "skyprobe/siem_server.hpp"
#include "skyprobe/socket.hpp"
#include "skyprobe/store.hpp"

using namespace skyprobe;

namespace {

// The two log blocks as printed, each joined onto one line.
constexpr std::string_view kSnortLine =
    "Syslog Snort log: {syslog} Mon Jan  16:11:50 CET 2017 INFO SnortSkypeAttach "
    "ipAddr=192.168.1.200#timestamp=16:11:45";
constexpr std::string_view kSessionLine =
    "Syslog ESkyPRO log: {syslog} Mon Jan 30 19:25:23 CET 2017 INFO SkypeSession "
    "ipAddr=192.168.1.200#timestamp=19:25:30";

CorrelationEngine default_engine() { return CorrelationEngine(default_directives(), AssetTable(3)); }

template <typename Pred>
bool eventually(Pred pred, int ms = 5000) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return pred();
}

NormalizedEvent sample_event(int i) {
  auto ev = normalize(i % 2 ? kSnortLine : kSessionLine);
  ev.userdata[2] = "n" + std::to_string(i);
  return ev;
}

}  // namespace

TEST(AcceptProbe, ConnectLineGetsOk) {
  auto [probe, siem] = make_memory_channel_pair();
  probe->send_line(kConnectLine);
  accept_probe_handshake(*siem, Millis(1000));
  EXPECT_EQ(probe->recv_line(Millis(1000)), std::string(kConnectReply));
}

TEST(AcceptProbe, GarbageIsRejectedWithoutReply) {
  auto [probe, siem] = make_memory_channel_pair();
  probe->send_line("HELLO there");
  EXPECT_THROW(accept_probe_handshake(*siem, Millis(1000)), MalformedHandshake);
  EXPECT_THROW(probe->recv_line(Millis(200)), ChannelClosed);
}

TEST(Normalize, SnortLine) {
  const auto ev = normalize(kSnortLine);
  EXPECT_EQ(ev.plugin_id, kPluginSnortAttach);
  EXPECT_EQ(ev.plugin_sid, 1);
  EXPECT_EQ(ev.userdata_n(1), "192.168.1.200");
  EXPECT_EQ(ev.userdata_n(2), "16:11:45");
  EXPECT_EQ(ev.src_ip, (Ipv4Addr{192, 168, 1, 200}));
}

TEST(Normalize, SessionLine) {
  const auto ev = normalize(kSessionLine);
  EXPECT_EQ(ev.plugin_id, kPluginSkypeSession);
  EXPECT_EQ(ev.userdata_n(1), "192.168.1.200");
  EXPECT_EQ(ev.userdata_n(2), "19:25:30");
  EXPECT_EQ(normalize(kSessionLine, kPluginSkypeSession), ev);
}

TEST(Normalize, AcceptsCommaDelimiterAndRejectsMissingTimestamp) {
  const auto ev = normalize("Syslog Snort log: {syslog} x INFO SnortSkypeAttach ipAddr=10.1.2.3, timestamp=01:02:03");
  EXPECT_EQ(ev.userdata_n(1), "10.1.2.3");
  EXPECT_EQ(ev.userdata_n(2), "01:02:03");
  EXPECT_THROW(normalize("Syslog Snort log: INFO SnortSkypeAttach ipAddr=192.168.1.200"), NormalizationFailed);
  EXPECT_THROW(normalize(kSnortLine, 9999), NormalizationFailed);
}

TEST(Normalize, JsonRoundTrip) {
  for (auto line : {kSnortLine, kSessionLine}) {
    const auto ev = normalize(line);
    EXPECT_EQ(event_from_json(event_to_json(ev)), ev);
  }
}

TEST(Risk, WorkedValues) {
  EXPECT_EQ(compute_risk({3, 5, 3}).to_string(), "1.8");
  EXPECT_DOUBLE_EQ(compute_risk({3, 5, 3}).value(), 1.8);
  EXPECT_EQ(compute_risk({3, 5, 5}).to_string(), "3.0");
  EXPECT_EQ(compute_risk({3, 5, 5}).value(), 3.0);
  for (int p = 0; p <= 5; ++p)
    for (int r = 0; r <= 10; ++r) EXPECT_EQ(compute_risk({0, p, r}).value(), 0.0);
}

TEST(Risk, MonotoneBoundedAndValidated) {
  for (int a = 0; a <= 5; ++a)
    for (int p = 0; p <= 5; ++p)
      for (int r = 0; r <= 10; ++r) {
        const auto v = compute_risk({a, p, r});
        EXPECT_LE(v.value(), 10.0);
        EXPECT_EQ(v.numerator, a * p * r);
        if (a < 5) EXPECT_LE(v, compute_risk({a + 1, p, r}));
        if (p < 5) EXPECT_LE(v, compute_risk({a, p + 1, r}));
        if (r < 10) EXPECT_LE(v, compute_risk({a, p, r + 1}));
      }
  EXPECT_THROW(compute_risk({6, 1, 1}), OutOfRange);
  EXPECT_THROW(compute_risk({1, -1, 1}), OutOfRange);
  EXPECT_THROW(compute_risk({1, 1, 11}), OutOfRange);
}

TEST(Directives, ShippedConfigParses) {
  const auto ds = load_directives_file(std::string(SKYPROBE_CONFIG_DIR) + "/directives.xml");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds[0].id, 501);
  EXPECT_EQ(ds[0].priority, 5);
  EXPECT_EQ(ds[0].rules.at(0).reliability, 3);
  EXPECT_EQ(ds[0].rules.at(0).plugin_id, 4059);
  EXPECT_EQ(ds[1].id, 502);
  EXPECT_EQ(ds[1].rules.at(0).reliability, 5);
  EXPECT_EQ(ds[1].rules.at(0).plugin_id, 4060);
}

TEST(Directives, AliasNestingAndValidation) {
  const auto nested = parse_directives(R"(
    <directive id="7" name="two step" priority="2">
      <rule type="detector" name="a" reliability="1" occurrence="1" from="ANY" to="ANY"
            port_from="ANY" port_to="ANY" plugin_id="4059" plugin_sid="1">
        <rules>
          <rule type="detector" name="b" reliability="4" occurrence="2" from="192.168.1.200" to="ANY"
                port_form="ANY" port_to="ANY" plugin_id="4060" plugin_sid="1"/>
        </rules>
      </rule>
    </directive>)");
  ASSERT_EQ(nested.size(), 1u);
  ASSERT_EQ(nested[0].rules.size(), 1u);
  ASSERT_EQ(nested[0].rules[0].children.size(), 1u);
  EXPECT_EQ(nested[0].rules[0].children[0].occurrence, 2);

  const std::string rule =
      R"(<rule type="detector" name="a" reliability="3" occurrence="1" from="ANY" to="ANY" port_form="ANY" port_to="ANY" plugin_id="4059" plugin_sid="1"/>)";
  EXPECT_THROW(parse_directives("<directives><directive id=\"1\" name=\"x\" priority=\"1\">" + rule +
                                "</directive><directive id=\"1\" name=\"y\" priority=\"1\">" + rule +
                                "</directive></directives>"),
               DirectiveError);
  EXPECT_THROW(parse_directives("<directive id=\"1\" name=\"x\" priority=\"9\">" + rule + "</directive>"),
               DirectiveError);
  EXPECT_THROW(parse_directives("<directive id=\"1\" name=\"x\" priority=\"1\"></directive>"), DirectiveError);
  EXPECT_THROW(parse_directives("<directive"), DirectiveError);
}

TEST(Assets, TableParsing) {
  const auto t = AssetTable::parse("# comment\ndefault 2\n192.168.1.200 4\n");
  EXPECT_EQ(t.value_of(Ipv4Addr{192, 168, 1, 200}), 4);
  EXPECT_EQ(t.value_of(Ipv4Addr{1, 1, 1, 1}), 2);
  EXPECT_THROW(AssetTable::parse("10.0.0.1 6\n"), DirectiveError);
  EXPECT_THROW(AssetTable::parse("10.0.0.1\n"), DirectiveError);
}

TEST(Correlate, AttachAlarmActivatesProbe) {
  auto engine = default_engine();
  const auto out = engine.process(normalize(kSnortLine), 1, 0);
  ASSERT_EQ(out.alarms.size(), 1u);
  EXPECT_EQ(out.alarms[0].directive_id, 501);
  EXPECT_EQ(out.alarms[0].risk.to_string(), "1.8");
  EXPECT_EQ(out.alarms[0].params, (RiskParams{3, 5, 3}));
  EXPECT_EQ(out.alarms[0].host, "192.168.1.200");
  ASSERT_EQ(out.activations.size(), 1u);
  EXPECT_EQ(out.activations[0].host, (Ipv4Addr{192, 168, 1, 200}));
}

TEST(Correlate, SessionAlarmUpdatesRisk) {
  auto engine = default_engine();
  const auto out = engine.process(normalize(kSessionLine), 1, 0);
  ASSERT_EQ(out.alarms.size(), 1u);
  EXPECT_EQ(out.alarms[0].directive_id, 502);
  EXPECT_EQ(out.alarms[0].risk.to_string(), "3.0");
  EXPECT_TRUE(out.activations.empty());
}

TEST(Correlate, UnknownPluginChangesNothing) {
  auto engine = default_engine();
  auto ev = normalize(kSnortLine);
  ev.plugin_id = 9999;
  const auto out = engine.process(ev, 1, 0);
  EXPECT_TRUE(out.alarms.empty());
  EXPECT_TRUE(out.activations.empty());
  EXPECT_EQ(engine.live_instances(), 0u);
}

TEST(Correlate, ThresholdGatesActivation) {
  CorrelationConfig cfg;
  cfg.r_th = 2.0;
  CorrelationEngine engine(default_directives(), AssetTable(3), cfg);
  const auto out = engine.process(normalize(kSnortLine), 1, 0);
  EXPECT_EQ(out.alarms.size(), 1u);
  EXPECT_TRUE(out.activations.empty());
}

TEST(Correlate, OccurrenceAndChildrenAndExpiry) {
  const auto ds = parse_directives(R"(
    <directive id="9" name="repeat then session" priority="5">
      <rule type="detector" name="attach twice" reliability="1" occurrence="2" from="ANY" to="ANY"
            port_from="ANY" port_to="ANY" plugin_id="4059" plugin_sid="1">
        <rule type="detector" name="session" reliability="5" occurrence="1" from="ANY" to="ANY"
              port_from="ANY" port_to="ANY" plugin_id="4060" plugin_sid="1"/>
      </rule>
    </directive>)");
  CorrelationEngine engine(ds, AssetTable(3));
  const auto snort = normalize(kSnortLine);
  const auto session = normalize(kSessionLine);
  EXPECT_TRUE(engine.process(session, 1, 0).alarms.empty());
  EXPECT_TRUE(engine.process(snort, 2, 1).alarms.empty());
  EXPECT_TRUE(engine.process(snort, 3, 2).alarms.empty());
  const auto done = engine.process(session, 4, 3);
  ASSERT_EQ(done.alarms.size(), 1u);
  EXPECT_EQ(done.alarms[0].risk.to_string(), "3.0");
  EXPECT_EQ(done.alarms[0].event_ids, (std::vector<std::uint64_t>{2, 3, 4}));

  EXPECT_TRUE(engine.process(snort, 5, 10).alarms.empty());
  EXPECT_TRUE(engine.process(snort, 6, 10 + 601'000'000).alarms.empty());  // first instance expired
  EXPECT_TRUE(engine.process(session, 7, 10 + 602'000'000).alarms.empty());
}

TEST(Correlate, ReplayIsDeterministic) {
  std::mt19937_64 rng(5);
  std::vector<NormalizedEvent> evs;
  for (int i = 0; i < 200; ++i) evs.push_back(normalize(rng() % 2 ? kSnortLine : kSessionLine));
  auto run = [&] {
    auto engine = default_engine();
    std::vector<Alarm> all;
    for (std::size_t i = 0; i < evs.size(); ++i) {
      auto out = engine.process(evs[i], i + 1, static_cast<TimestampUs>(i));
      all.insert(all.end(), out.alarms.begin(), out.alarms.end());
    }
    return all;
  };
  const auto a = run();
  EXPECT_EQ(a, run());
  for (const auto& al : a) EXPECT_EQ(compute_risk(al.params), al.risk);
}

TEST(Store, RoundTripAndIncreasingIds) {
  const auto dir = oracle::temp_dir("store");
  const auto path = (dir / "siem.jsonl").string();
  std::vector<NormalizedEvent> events;
  std::vector<Alarm> alarms;
  {
    EventStore store(path);
    std::uint64_t last = 0;
    for (int i = 0; i < 1000; ++i) {
      std::uint64_t id;
      if (i % 3 == 2) {
        Alarm a;
        a.directive_id = 501;
        a.params = {3, 5, 3};
        a.risk = compute_risk(a.params);
        a.event_ids = {static_cast<std::uint64_t>(i)};
        a.host = "192.168.1.200";
        id = store.append_alarm(a);
        EXPECT_EQ(a.id, id);
        alarms.push_back(a);
      } else {
        events.push_back(sample_event(i));
        id = store.append_event(events.back());
      }
      EXPECT_GT(id, last);
      last = id;
    }
  }
  EventStore reopened(path);
  EXPECT_EQ(reopened.size(), 1000u);
  EXPECT_EQ(reopened.events(), events);
  EXPECT_EQ(reopened.alarms(), alarms);
  EXPECT_EQ(reopened.append_event(events[0]), 1001u);
  std::filesystem::remove_all(dir);
}

TEST(Store, CorruptMiddleLineIsFatal) {
  const auto dir = oracle::temp_dir("corrupt");
  const auto path = (dir / "s.jsonl").string();
  {
    EventStore s(path);
    s.append_event(sample_event(1));
  }
  {
    std::ofstream out(path, std::ios::app);
    out << "{garbage\n";
    out << R"({"id":3,"kind":"event","data":{}})" << "\n";
  }
  EXPECT_THROW(EventStore{path}, StoreFailure);
  std::filesystem::remove_all(dir);
}

TEST(Store, KillAfterNWritesRecoversExactlyN) {
  const auto dir = oracle::temp_dir("crash");
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 3; ++trial) {
    const auto path = (dir / ("t" + std::to_string(trial) + ".jsonl")).string();
    const int n = 1 + static_cast<int>(rng() % 200);
    int ready[2];
    ASSERT_EQ(pipe(ready), 0);
    const pid_t pid = fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
      close(ready[0]);
      EventStore s(path);
      for (int i = 0; i < n; ++i) s.append_event(sample_event(i));
      const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND);
      const char torn[] = R"({"id":999,"kind":"ev)";
      (void)!::write(fd, torn, sizeof torn - 1);
      (void)!::write(ready[1], "x", 1);
      pause();
      _exit(0);
    }
    close(ready[1]);
    char c;
    ASSERT_EQ(read(ready[0], &c, 1), 1);
    close(ready[0]);
    kill(pid, SIGKILL);
    int status = 0;
    waitpid(pid, &status, 0);
    EXPECT_TRUE(WIFSIGNALED(status));
    EventStore recovered(path);
    EXPECT_EQ(recovered.size(), static_cast<std::size_t>(n));
    EXPECT_GT(recovered.recovered_bytes(), 0u);
    EXPECT_EQ(recovered.append_event(sample_event(0)), static_cast<std::uint64_t>(n) + 1);
  }
  std::filesystem::remove_all(dir);
}

TEST(Store, WriteFailureStopsFurtherAppends) {
  const auto dir = oracle::temp_dir("full");
  const auto path = (dir / "s.jsonl").string();
  const pid_t pid = fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    signal(SIGXFSZ, SIG_IGN);
    rlimit lim{2048, 2048};
    setrlimit(RLIMIT_FSIZE, &lim);
    EventStore s(path);
    int code = 1;
    try {
      for (int i = 0; i < 1000; ++i) s.append_event(sample_event(i));
    } catch (const StoreFailure&) {
      code = s.failed() ? 2 : 3;
      try {
        s.append_event(sample_event(0));
        code = 4;
      } catch (const StoreFailure&) {
      }
    }
    _exit(code);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
  std::filesystem::remove_all(dir);
}

TEST(SiemServer, TwoConcurrentProbesBothGetActivation) {
  SiemCore core(default_engine());
  SiemServerConfig cfg;
  cfg.control_port = 0;
  SiemServer server(cfg, core);
  server.start();
  ProbeConfig pc;
  pc.server_port = server.control_port();
  auto a = connect_to_siem(pc);
  auto b = connect_to_siem(pc);
  ASSERT_TRUE(eventually([&] { return server.probe_count() == 2; }));
  server.submit(std::string(kSnortLine));
  server.drain();
  HostSet ha, hb;
  ASSERT_TRUE(eventually([&] {
    pump_control(*a, ha, Millis(20));
    pump_control(*b, hb, Millis(20));
    return ha.size() == 1 && hb.size() == 1;
  }));
  EXPECT_TRUE(ha.contains(Ipv4Addr{192, 168, 1, 200}));
  EXPECT_TRUE(eventually([&] { return server.probe_replies().size() == 2; }));
  a->send_line(kSessionLine);
  EXPECT_TRUE(eventually([&] { return server.status_text().find("alarms 2") != std::string::npos; }));
  server.stop();
}

TEST(SiemServer, UdpIntakeAndAdminStatus) {
  SiemCore core(default_engine());
  SiemServerConfig cfg;
  cfg.control_port = 0;
  cfg.syslog_port = 0;
  cfg.admin_port = 0;
  SiemServer server(cfg, core);
  server.start();
  auto sender = UdpSocket::bind("127.0.0.1", 0);
  sender.send_to("127.0.0.1", server.syslog_port(), kSessionLine);
  ASSERT_TRUE(eventually([&] { return server.status_text().find("alarms 1") != std::string::npos; }));
  auto conn = TcpStream::connect("127.0.0.1", server.admin_port(), Millis(2000));
  std::string text;
  while (auto line = conn.read_line(Millis(2000))) text += *line + "\n";
  EXPECT_NE(text.find("alarm directive=502 risk=3.0 host=192.168.1.200"), std::string::npos);
  server.stop();
}

TEST(SiemServer, TailedFileFeedsPipeline) {
  const auto dir = oracle::temp_dir("tail");
  const auto path = (dir / "syslog").string();
  { std::ofstream(path) << "old line before start\n"; }
  SiemCore core(default_engine());
  SiemServerConfig cfg;
  cfg.control_port = 0;
  cfg.tail_files = {path};
  SiemServer server(cfg, core);
  server.start();
  { std::ofstream(path, std::ios::app) << kSnortLine << "\n"; }
  EXPECT_TRUE(eventually([&] { return server.status_text().find("alarms 1") != std::string::npos; }));
  EXPECT_NE(server.status_text().find("received 1\n"), std::string::npos);
  server.stop();
  std::filesystem::remove_all(dir);
}
