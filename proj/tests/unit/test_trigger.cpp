#include <gtest/gtest.h>

#include <random>

#include "skyprobe/errors.hpp"
#include "skyprobe/synth.hpp"
#include "skyprobe/trigger.hpp"

using namespace skyprobe;

namespace {

// 2017-01-16 16:11:45 CET
constexpr TimestampUs kLoginAt = 1484579505LL * 1'000'000;

PacketMeta with_payload(Proto proto, std::string_view text) {
  PacketMeta p;
  p.proto = proto;
  p.src_ip = Ipv4Addr{192, 168, 1, 200};
  p.dst_ip = Ipv4Addr{91, 190, 216, 1};
  p.payload.assign(text.begin(), text.end());
  p.length = static_cast<std::uint32_t>(header_bytes(proto) + p.payload.size());
  return p;
}

PacketMeta udp_bytes(std::size_t size, std::uint8_t at12) {
  PacketMeta p;
  p.proto = Proto::Udp;
  p.payload.assign(size, 0);
  if (size > 12) p.payload[12] = at12;
  return p;
}

const ContentRule& login_rule() {
  static const ContentRule r = std::get<ContentRule>(default_rules()[0]);
  return r;
}

}  // namespace

TEST(ContentMatch, Examples) {
  EXPECT_TRUE(match_content(with_payload(Proto::Tcp, "GET http://conn.skype.com/ HTTP/1.1"), login_rule()));
  EXPECT_FALSE(match_content(with_payload(Proto::Tcp, ""), login_rule()));
  EXPECT_FALSE(match_content(with_payload(Proto::Tcp, "conn.skype.co"), login_rule()));
  EXPECT_FALSE(match_content(with_payload(Proto::Udp, "conn.skype.com"), login_rule()));
}

TEST(ContentMatch, AgreesWithNaiveSearchOnRandomPayloads) {
  std::mt19937_64 rng(17);
  const std::string needle = "conn.skype.com";
  const std::string alphabet = "conskype.m";
  for (int trial = 0; trial < 2000; ++trial) {
    std::string s(rng() % 64, ' ');
    for (auto& c : s) c = alphabet[rng() % alphabet.size()];
    if (rng() % 4 == 0 && s.size() >= needle.size()) s.replace(rng() % (s.size() - needle.size() + 1), needle.size(), needle);
    EXPECT_EQ(match_content(with_payload(Proto::Tcp, s), login_rule()), s.find(needle) != std::string::npos) << s;
  }
}

TEST(UdpProbe, Examples) {
  EXPECT_TRUE(match_udp_login_probe(udp_bytes(30, 0x02)));
  EXPECT_FALSE(match_udp_login_probe(udp_bytes(30, 0x03)));
  EXPECT_FALSE(match_udp_login_probe(udp_bytes(24, 0x02)));
  EXPECT_TRUE(match_udp_login_probe(udp_bytes(25, 0x02)));
  EXPECT_TRUE(match_udp_login_probe(udp_bytes(39, 0x02)));
  EXPECT_FALSE(match_udp_login_probe(udp_bytes(40, 0x02)));
  EXPECT_TRUE(match_udp_login_probe(udp_probe_packet(Ipv4Addr{1, 2, 3, 4}, 0)));
}

TEST(UdpProbe, ShortPayloadsNeverReadOutOfBounds) {
  UdpProbeRule r;
  r.offset = 50;
  r.min_size = 0;
  for (std::size_t n = 0; n < 60; ++n) EXPECT_EQ(match_udp_login_probe(udp_bytes(n, 0x02), r), false);
}

TEST(Rules, ParseShippedForms) {
  const auto rules = parse_rules(
      "# comment\n"
      "proto=tcp content=\"conn.skype.com\" sid=1030 msg=\"skype login attempt\"\n"
      "probe=udp offset=12 value=0x02 dsize=25-39 sid=1031 msg=\"skype supernode scan\"\n");
  ASSERT_EQ(rules.size(), 2u);
  EXPECT_EQ(rules, default_rules());
}

TEST(Rules, ParseErrors) {
  EXPECT_THROW(parse_rules("proto=tcp content=\"x\"\n"), RuleParseError);
  EXPECT_THROW(parse_rules("proto=tcp content=\"x\" sid=1 colour=red\n"), RuleParseError);
  EXPECT_THROW(parse_rules("proto=tcp content=\"x\" sid=1\nproto=tcp content=\"y\" sid=1\n"), RuleParseError);
  EXPECT_THROW(parse_rules("probe=udp sid=2 dsize=40-30\n"), RuleParseError);
  EXPECT_THROW(parse_rules("proto=icmp content=\"x\" sid=3\n"), RuleParseError);
  EXPECT_THROW(parse_rules("proto=tcp content=\"unterminated sid=3\n"), RuleParseError);
}

TEST(TriggerSyslog, MatchesLoggedForm) {
  const TriggerEvent ev{Ipv4Addr{192, 168, 1, 200}, kLoginAt, 1030, kLoginAt + 5'000'000};
  const auto line = emit_trigger_syslog(ev, *TimeZone::parse("CET"));
  EXPECT_EQ(line,
            "Syslog Snort log: {syslog} Mon Jan 16 16:11:50 CET 2017 INFO SnortSkypeAttach "
            "ipAddr=192.168.1.200#timestamp=16:11:45");
}

TEST(TriggerEngine, SameSecondEventsStayDistinct) {
  const TriggerEngine engine;
  const Ipv4Addr a{192, 168, 1, 200}, b{192, 168, 1, 201};
  const std::vector<PacketMeta> pkts{login_packet(a, kLoginAt), login_packet(b, kLoginAt + 10),
                                     with_payload(Proto::Tcp, "nothing here")};
  const auto events = engine.scan(pkts);
  ASSERT_EQ(events.size(), 2u);
  const auto tz = TimeZone::utc();
  EXPECT_NE(emit_trigger_syslog(events[0], tz), emit_trigger_syslog(events[1], tz));
  EXPECT_EQ(events[0].sid, 1030u);
  EXPECT_EQ(events[0].ip_addr, a);
}
