#include "skyprobe/correlation.hpp"

#include <nlohmann/json.hpp>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

using json = nlohmann::json;

void check_range(int v, int hi, const char* what) {
  if (v < 0 || v > hi)
    throw OutOfRange(std::string(what) + " " + std::to_string(v) + " outside [0," + std::to_string(hi) + "]");
}

}  // namespace

std::string RiskValue::to_string() const {
  const int t = tenths();
  return std::to_string(t / 10) + "." + std::to_string(t % 10);
}

RiskValue compute_risk(const RiskParams& p) {
  check_range(p.asset_value, 5, "asset value");
  check_range(p.event_priority, 5, "event priority");
  check_range(p.event_reliability, 10, "event reliability");
  return RiskValue{p.asset_value * p.event_priority * p.event_reliability};
}

std::string alarm_to_json(const Alarm& a) {
  const json j{{"id", a.id},
               {"directive_id", a.directive_id},
               {"directive_name", a.directive_name},
               {"asset_value", a.params.asset_value},
               {"event_priority", a.params.event_priority},
               {"event_reliability", a.params.event_reliability},
               {"risk", a.risk.to_string()},
               {"risk_numerator", a.risk.numerator},
               {"event_ids", a.event_ids},
               {"created_at", a.created_at},
               {"host", a.host ? json(*a.host) : json(nullptr)}};
  return j.dump();
}

Alarm alarm_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    Alarm a;
    a.id = j.at("id").get<std::uint64_t>();
    a.directive_id = j.at("directive_id").get<int>();
    a.directive_name = j.at("directive_name").get<std::string>();
    a.params = {j.at("asset_value").get<int>(), j.at("event_priority").get<int>(),
                j.at("event_reliability").get<int>()};
    a.risk = RiskValue{j.at("risk_numerator").get<int>()};
    a.event_ids = j.at("event_ids").get<std::vector<std::uint64_t>>();
    a.created_at = j.at("created_at").get<TimestampUs>();
    if (!j.at("host").is_null()) a.host = j.at("host").get<std::string>();
    return a;
  } catch (const json::exception& e) {
    throw StoreFailure(std::string("malformed alarm record: ") + e.what());
  }
}

CorrelationEngine::CorrelationEngine(std::vector<Directive> directives, AssetTable assets, CorrelationConfig config)
    : directives_(std::move(directives)),
      assets_(std::move(assets)),
      config_(std::move(config)),
      live_(directives_.size()) {
  if (!(config_.r_th >= 0 && config_.r_th <= 10)) throw OutOfRange("r_th outside [0,10]");
}

std::size_t CorrelationEngine::live_instances() const noexcept {
  std::size_t n = 0;
  for (const auto& v : live_) n += v.size();
  return n;
}

CorrelationEngine::Step CorrelationEngine::advance(Instance& inst, const NormalizedEvent& ev,
                                                   std::uint64_t event_id) {
  const auto& rules = *inst.level;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (!rules[i].matches(ev)) continue;
    inst.events.push_back(event_id);
    if (++inst.counts[i] < rules[i].occurrence) return Step::Advanced;
    inst.reliability = rules[i].reliability;
    if (rules[i].children.empty()) return Step::Completed;
    inst.level = &rules[i].children;
    inst.counts.assign(inst.level->size(), 0);
    return Step::Advanced;
  }
  return Step::Ignored;
}

Alarm CorrelationEngine::raise(const Directive& d, const Instance& inst, const NormalizedEvent& ev,
                               TimestampUs now) const {
  Alarm a;
  a.directive_id = d.id;
  a.directive_name = d.name;
  a.params = {assets_.value_of(ev.src_ip), d.priority, inst.reliability};
  a.risk = compute_risk(a.params);
  a.event_ids = inst.events;
  a.created_at = now;
  a.host = ev.userdata[0];
  return a;
}

CorrelationOutcome CorrelationEngine::process(const NormalizedEvent& ev, std::uint64_t event_id, TimestampUs now) {
  CorrelationOutcome out;
  for (std::size_t d = 0; d < directives_.size(); ++d) {
    const Directive& dir = directives_[d];
    auto& live = live_[d];
    std::erase_if(live, [&](const Instance& i) { return now - i.started > config_.instance_ttl_us; });

    std::optional<std::size_t> completed;
    bool used = false;
    for (std::size_t k = 0; k < live.size() && !used; ++k) {
      const Step s = advance(live[k], ev, event_id);
      used = s != Step::Ignored;
      if (s == Step::Completed) completed = k;
    }
    if (!used) {
      Instance fresh{&dir.rules, std::vector<int>(dir.rules.size(), 0), {}, 0, now};
      const Step s = advance(fresh, ev, event_id);
      if (s == Step::Ignored) continue;
      live.push_back(std::move(fresh));
      if (s == Step::Completed) completed = live.size() - 1;
    }
    if (!completed) continue;

    Alarm alarm = raise(dir, live[*completed], ev, now);
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(*completed));
    if (config_.activation_directives.count(dir.id) &&
        alarm.risk.numerator >= config_.r_th * 25.0 - 1e-9 && alarm.host) {
      if (auto host = Ipv4Addr::parse(*alarm.host)) out.activations.push_back({*host, dir.id});
    }
    out.alarms.push_back(std::move(alarm));
  }
  return out;
}

}  // namespace skyprobe
