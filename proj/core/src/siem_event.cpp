#include "skyprobe/siem_event.hpp"

#include <regex>

#include <nlohmann/json.hpp>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

using json = nlohmann::json;

constexpr PluginInfo kPlugins[] = {
    {kPluginSnortAttach, 1, "SnortSkypeAttach", "snort", 1, EventType::Detector},
    {kPluginSkypeSession, 1, "SkypeSession", "eskypro", 1, EventType::Detector},
};

template <typename T, typename F>
json opt_json(const std::optional<T>& v, F&& f) {
  return v ? json(f(*v)) : json(nullptr);
}

}  // namespace

std::string_view to_string(EventType t) noexcept { return t == EventType::Detector ? "detector" : "monitor"; }

const PluginInfo* find_plugin(int plugin_id) noexcept {
  for (const auto& p : kPlugins)
    if (p.plugin_id == plugin_id) return &p;
  return nullptr;
}

const PluginInfo* find_plugin_by_tag(std::string_view tag) noexcept {
  for (const auto& p : kPlugins)
    if (p.tag == tag) return &p;
  return nullptr;
}

NormalizedEvent normalize(std::string_view raw, std::optional<int> plugin_id, Ipv4Addr sensor) {
  static const std::regex fields(R"(ipAddr=([^,#\s]+)[,#\s]*.*?timestamp=([^,#\s]+))");
  static const std::regex tag(R"(\bINFO\s+([A-Za-z]+))");
  static const std::regex stamp(R"(\{syslog\}\s+(.*?)\s+INFO\b)");

  using It = std::string_view::const_iterator;
  std::match_results<It> m;
  if (!std::regex_search(raw.begin(), raw.end(), m, fields))
    throw NormalizationFailed("no ipAddr/timestamp tokens in '" + std::string(raw) + "'");

  const PluginInfo* plugin = nullptr;
  if (plugin_id) {
    plugin = find_plugin(*plugin_id);
    if (!plugin) throw NormalizationFailed("unknown plugin id " + std::to_string(*plugin_id));
  } else {
    std::match_results<It> t;
    if (std::regex_search(raw.begin(), raw.end(), t, tag)) plugin = find_plugin_by_tag(t[1].str());
    if (!plugin) throw NormalizationFailed("unrecognised event source in '" + std::string(raw) + "'");
  }

  NormalizedEvent ev;
  ev.plugin_id = plugin->plugin_id;
  ev.plugin_sid = plugin->plugin_sid;
  ev.type = plugin->type;
  ev.priority = plugin->priority;
  ev.sensor = sensor;
  ev.log = std::string(raw);
  ev.userdata[0] = m[1].str();
  ev.userdata[1] = m[2].str();
  ev.src_ip = Ipv4Addr::parse(m[1].str());

  std::match_results<It> d;
  if (std::regex_search(raw.begin(), raw.end(), d, stamp))
    ev.date = d[1].str();
  else if (parse_syslog_datetime(raw))
    ev.date = parse_syslog_datetime(raw)->to_string();
  return ev;
}

std::string event_to_json(const NormalizedEvent& ev) {
  auto ip = [](Ipv4Addr a) { return a.to_string(); };
  auto port = [](std::uint16_t p) { return p; };
  json ud = json::array();
  for (const auto& u : ev.userdata) ud.push_back(u ? json(*u) : json(nullptr));
  const json j{{"plugin_id", ev.plugin_id},
               {"plugin_sid", ev.plugin_sid},
               {"type", to_string(ev.type)},
               {"date", ev.date},
               {"sensor", ev.sensor.to_string()},
               {"interface", ev.interface},
               {"priority", ev.priority},
               {"protocol", ev.protocol},
               {"src_ip", opt_json(ev.src_ip, ip)},
               {"src_port", opt_json(ev.src_port, port)},
               {"dst_ip", opt_json(ev.dst_ip, ip)},
               {"dst_port", opt_json(ev.dst_port, port)},
               {"log", ev.log},
               {"userdata", ud}};
  return j.dump();
}

NormalizedEvent event_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    NormalizedEvent ev;
    ev.plugin_id = j.at("plugin_id").get<int>();
    ev.plugin_sid = j.at("plugin_sid").get<int>();
    ev.type = j.at("type").get<std::string>() == "monitor" ? EventType::Monitor : EventType::Detector;
    ev.date = j.at("date").get<std::string>();
    ev.sensor = Ipv4Addr::from_string(j.at("sensor").get<std::string>());
    ev.interface = j.at("interface").get<std::string>();
    ev.priority = j.at("priority").get<int>();
    ev.protocol = j.at("protocol").get<std::string>();
    auto ip = [&](const char* k) -> std::optional<Ipv4Addr> {
      if (j.at(k).is_null()) return std::nullopt;
      return Ipv4Addr::from_string(j.at(k).get<std::string>());
    };
    auto port = [&](const char* k) -> std::optional<std::uint16_t> {
      if (j.at(k).is_null()) return std::nullopt;
      return j.at(k).get<std::uint16_t>();
    };
    ev.src_ip = ip("src_ip");
    ev.src_port = port("src_port");
    ev.dst_ip = ip("dst_ip");
    ev.dst_port = port("dst_port");
    ev.log = j.at("log").get<std::string>();
    const json& ud = j.at("userdata");
    for (std::size_t i = 0; i < ev.userdata.size() && i < ud.size(); ++i)
      if (!ud[i].is_null()) ev.userdata[i] = ud[i].get<std::string>();
    return ev;
  } catch (const json::exception& e) {
    throw StoreFailure(std::string("malformed event record: ") + e.what());
  }
}

}  // namespace skyprobe
