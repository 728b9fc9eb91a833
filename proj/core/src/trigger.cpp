#include "skyprobe/trigger.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

using Fields = std::map<std::string, std::string, std::less<>>;

Fields tokenize(std::string_view line, std::size_t line_no) {
  Fields out;
  std::size_t i = 0;
  auto fail = [&](const std::string& what) {
    throw RuleParseError("rule line " + std::to_string(line_no) + ": " + what);
  };
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    const std::size_t eq = line.find('=', i);
    if (eq == std::string_view::npos) fail("expected key=value");
    std::string key(line.substr(i, eq - i));
    if (key.empty() || key.find(' ') != std::string::npos) fail("bad key '" + key + "'");
    i = eq + 1;
    std::string value;
    if (i < line.size() && line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < line.size()) {
        const char c = line[i++];
        if (c == '\\' && i < line.size()) {
          value += line[i++];
        } else if (c == '"') {
          closed = true;
          break;
        } else {
          value += c;
        }
      }
      if (!closed) fail("unterminated quote");
    } else {
      const std::size_t end = std::min(line.find(' ', i), line.size());
      value = std::string(line.substr(i, end - i));
      i = end;
    }
    if (!out.emplace(std::move(key), std::move(value)).second) fail("duplicate key");
  }
  return out;
}

template <typename T>
T parse_uint(const std::string& s, std::size_t line_no, const char* what) {
  T v{};
  int base = 10;
  std::string_view text = s;
  if (text.starts_with("0x") || text.starts_with("0X")) {
    base = 16;
    text.remove_prefix(2);
  }
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v, base);
  if (text.empty() || ec != std::errc{} || end != text.data() + text.size())
    throw RuleParseError("rule line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  return v;
}

Proto parse_proto(const std::string& s, std::size_t line_no) {
  if (s == "tcp" || s == "TCP") return Proto::Tcp;
  if (s == "udp" || s == "UDP") return Proto::Udp;
  throw RuleParseError("rule line " + std::to_string(line_no) + ": unknown proto '" + s + "'");
}

}  // namespace

std::uint32_t sid_of(const TriggerRule& r) noexcept {
  return std::visit([](const auto& rule) { return rule.sid; }, r);
}

bool match_content(const PacketMeta& pkt, const ContentRule& rule) noexcept {
  if (pkt.proto != rule.proto || rule.content.empty() || pkt.payload.size() < rule.content.size()) return false;
  return std::search(pkt.payload.begin(), pkt.payload.end(),
                     std::boyer_moore_horspool_searcher(rule.content.begin(), rule.content.end())) !=
         pkt.payload.end();
}

bool match_udp_login_probe(const PacketMeta& pkt, const UdpProbeRule& rule) noexcept {
  if (pkt.proto != Proto::Udp) return false;
  const std::size_t n = pkt.payload.size();
  if (n < rule.min_size || n > rule.max_size || n <= rule.offset) return false;
  return pkt.payload[rule.offset] == rule.value;
}

bool matches(const PacketMeta& pkt, const TriggerRule& rule) noexcept {
  if (const auto* c = std::get_if<ContentRule>(&rule)) return match_content(pkt, *c);
  return match_udp_login_probe(pkt, std::get<UdpProbeRule>(rule));
}

std::vector<TriggerRule> parse_rules(std::string_view text) {
  std::vector<TriggerRule> rules;
  std::set<std::uint32_t> sids;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') continue;

    Fields f = tokenize(line, line_no);
    auto take = [&](std::string_view key) -> std::optional<std::string> {
      auto it = f.find(key);
      if (it == f.end()) return std::nullopt;
      std::string v = std::move(it->second);
      f.erase(it);
      return v;
    };
    const auto sid_text = take("sid");
    if (!sid_text) throw RuleParseError("rule line " + std::to_string(line_no) + ": missing sid");
    const auto sid = parse_uint<std::uint32_t>(*sid_text, line_no, "sid");
    const auto msg = take("msg").value_or("");

    TriggerRule rule;
    if (auto probe = take("probe")) {
      if (*probe != "udp") throw RuleParseError("rule line " + std::to_string(line_no) + ": probe must be udp");
      UdpProbeRule r;
      r.sid = sid;
      r.msg = msg;
      if (auto v = take("offset")) r.offset = parse_uint<std::size_t>(*v, line_no, "offset");
      if (auto v = take("value")) r.value = parse_uint<std::uint8_t>(*v, line_no, "value");
      if (auto v = take("dsize")) {
        const std::size_t dash = v->find('-');
        if (dash == std::string::npos) throw RuleParseError("rule line " + std::to_string(line_no) + ": dsize needs lo-hi");
        r.min_size = parse_uint<std::size_t>(v->substr(0, dash), line_no, "dsize");
        r.max_size = parse_uint<std::size_t>(v->substr(dash + 1), line_no, "dsize");
        if (r.min_size > r.max_size) throw RuleParseError("rule line " + std::to_string(line_no) + ": empty dsize range");
      }
      rule = r;
    } else {
      const auto proto = take("proto");
      const auto content = take("content");
      if (!proto || !content)
        throw RuleParseError("rule line " + std::to_string(line_no) + ": content rules need proto and content");
      if (content->empty()) throw RuleParseError("rule line " + std::to_string(line_no) + ": empty content");
      rule = ContentRule{parse_proto(*proto, line_no), {content->begin(), content->end()}, sid, msg};
    }
    if (!f.empty()) throw RuleParseError("rule line " + std::to_string(line_no) + ": unknown key '" + f.begin()->first + "'");
    if (!sids.insert(sid).second)
      throw RuleParseError("rule line " + std::to_string(line_no) + ": duplicate sid " + std::to_string(sid));
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<TriggerRule> load_rules_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuleParseError("cannot open rule file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str());
}

std::vector<TriggerRule> default_rules() {
  const std::string host = "conn.skype.com";
  return {ContentRule{Proto::Tcp, {host.begin(), host.end()}, 1030, "skype login attempt"}, UdpProbeRule{}};
}

std::string emit_trigger_syslog(const TriggerEvent& ev, const TimeZone& tz) {
  return "Syslog Snort log: {syslog} " + format_syslog_datetime(ev.wall_time, tz) +
         " INFO SnortSkypeAttach ipAddr=" + ev.ip_addr.to_string() + "#timestamp=" + format_hms(ev.packet_time, tz);
}

TriggerEngine::TriggerEngine(std::vector<TriggerRule> rules) : rules_(std::move(rules)) {}

std::optional<TriggerEvent> TriggerEngine::inspect(const PacketMeta& pkt) const {
  for (const auto& r : rules_)
    if (matches(pkt, r)) return TriggerEvent{pkt.src_ip, pkt.timestamp, sid_of(r), pkt.timestamp};
  return std::nullopt;
}

std::vector<TriggerEvent> TriggerEngine::scan(const std::vector<PacketMeta>& packets) const {
  std::vector<TriggerEvent> out;
  for (const auto& p : packets)
    if (auto ev = inspect(p)) out.push_back(*ev);
  std::stable_sort(out.begin(), out.end(),
                   [](const TriggerEvent& a, const TriggerEvent& b) { return a.packet_time < b.packet_time; });
  return out;
}

}  // namespace skyprobe
