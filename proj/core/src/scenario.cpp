#include "skyprobe/scenario.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "skyprobe/bundle.hpp"
#include "skyprobe/correlation.hpp"
#include "skyprobe/errors.hpp"
#include "skyprobe/pcap.hpp"
#include "skyprobe/probe.hpp"
#include "skyprobe/siem_server.hpp"
#include "skyprobe/synth.hpp"
#include "skyprobe/trigger.hpp"

namespace skyprobe {
namespace {

namespace fs = std::filesystem;

[[noreturn]] void fail(const ScenarioStep& s, const std::string& what) {
  throw ScenarioError("scenario line " + std::to_string(s.line) + ": " + what + " ('" + s.text + "')");
}

std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_uint(std::string_view s) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || end != s.data() + s.size()) return std::nullopt;
  return v;
}

// key=value words from position `from` on; bare words are rejected.
std::map<std::string, std::string> key_values(const ScenarioStep& s, std::size_t from) {
  std::map<std::string, std::string> kv;
  for (std::size_t i = from; i < s.words.size(); ++i) {
    const std::size_t eq = s.words[i].find('=');
    if (eq == std::string::npos || eq == 0) fail(s, "expected key=value, got '" + s.words[i] + "'");
    kv[s.words[i].substr(0, eq)] = s.words[i].substr(eq + 1);
  }
  return kv;
}

void allow_keys(const ScenarioStep& s, const std::map<std::string, std::string>& kv,
                std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : kv) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) fail(s, "unknown key '" + k + "'");
  }
}

void need_args(const ScenarioStep& s, std::size_t n) {
  if (s.words.size() != n + 1) fail(s, "expected " + std::to_string(n) + " argument(s)");
}

void need_ip(const ScenarioStep& s, const std::string& text) {
  if (!Ipv4Addr::parse(text)) fail(s, "bad address '" + text + "'");
}

void need_number(const ScenarioStep& s, const std::string& text) {
  if (!to_double(text)) fail(s, "bad number '" + text + "'");
}

void validate_inject(const ScenarioStep& s) {
  if (s.words.size() < 2) fail(s, "inject needs a source");
  const std::string& what = s.words[1];
  if (what == "capture") {
    need_args(s, 2);
    return;
  }
  std::size_t kv_from = 2;
  if (what == "synth") {
    if (s.words.size() < 3 || (s.words[2] != "skype" && s.words[2] != "normal"))
      fail(s, "inject synth needs 'skype' or 'normal'");
    kv_from = 3;
  } else if (what != "login" && what != "udp-probe") {
    fail(s, "unknown inject source '" + what + "'");
  }
  const auto kv = key_values(s, kv_from);
  if (what == "synth") {
    allow_keys(s, kv, {"host", "flows", "at", "seed", "spacing"});
    if (!kv.count("flows") || !to_uint(kv.at("flows"))) fail(s, "inject synth needs flows=N");
  } else {
    allow_keys(s, kv, {"host", "at"});
  }
  if (!kv.count("host")) fail(s, "inject needs host=<ip>");
  need_ip(s, kv.at("host"));
  for (const char* k : {"at", "spacing"})
    if (kv.count(k)) need_number(s, kv.at(k));
  if (kv.count("seed") && !to_uint(kv.at("seed"))) fail(s, "bad seed");
}

void validate_expect(const ScenarioStep& s) {
  if (s.words.size() < 2) fail(s, "expect needs a predicate");
  const std::string& what = s.words[1];
  if (what == "syslog" || what == "no-syslog") {
    if (s.words.size() < 3) fail(s, "expect " + what + " needs text");
  } else if (what == "alarm" || what == "no-alarm") {
    const auto kv = key_values(s, 2);
    allow_keys(s, kv, {"directive", "risk", "host"});
    if (what == "alarm" && !kv.count("directive")) fail(s, "expect alarm needs directive=<id>");
    if (kv.count("directive") && !to_uint(kv.at("directive"))) fail(s, "bad directive id");
    if (kv.count("risk")) need_number(s, kv.at("risk"));
    if (kv.count("host")) need_ip(s, kv.at("host"));
  } else if (what == "activation") {
    need_args(s, 2);
    need_ip(s, s.words[2]);
  } else if (what == "no-activation") {
    need_args(s, 1);
  } else if (what == "verdict") {
    const auto kv = key_values(s, 2);
    allow_keys(s, kv, {"host", "fired", "flows", "skype"});
    if (!kv.count("host")) fail(s, "expect verdict needs host=<ip>");
    need_ip(s, kv.at("host"));
    if (kv.count("fired") && kv.at("fired") != "true" && kv.at("fired") != "false") fail(s, "fired must be true or false");
    for (const char* k : {"flows", "skype"})
      if (kv.count(k) && !to_uint(kv.at(k))) fail(s, std::string("bad ") + k);
  } else if (what == "classified") {
    need_args(s, 2);
    if (s.words[2] != "none" && !to_uint(s.words[2])) fail(s, "expect classified needs 'none' or a count");
  } else {
    fail(s, "unknown expectation '" + what + "'");
  }
}

void validate(const ScenarioStep& s) {
  const std::string& v = s.words[0];
  if (v == "timezone") {
    need_args(s, 1);
    if (!TimeZone::parse(s.words[1])) fail(s, "unknown time zone");
  } else if (v == "window" || v == "auc-th" || v == "r-th") {
    need_args(s, 1);
    need_number(s, s.words[1]);
    const double x = *to_double(s.words[1]);
    if (v == "window" && !(x > 0)) fail(s, "window must be positive");
    if (v == "auc-th" && !(x >= 0 && x <= 1)) fail(s, "auc-th must lie in [0,1]");
    if (v == "r-th" && !(x >= 0 && x <= 10)) fail(s, "r-th must lie in [0,10]");
  } else if (v == "start") {
    need_args(s, 1);
    if (!to_uint(s.words[1])) fail(s, "start needs unix seconds");
  } else if (v == "directives" || v == "assets" || v == "rules") {
    need_args(s, 1);
  } else if (v == "asset") {
    need_args(s, 2);
    need_ip(s, s.words[1]);
    if (!to_uint(s.words[2]) || *to_uint(s.words[2]) > 5) fail(s, "asset value must be 0..5");
  } else if (v == "models") {
    if (s.words.size() < 2) fail(s, "models needs a directory or 'synthetic'");
    if (s.words[1] == "synthetic") {
      const auto kv = key_values(s, 2);
      allow_keys(s, kv, {"n", "seed"});
      for (const auto& [k, val] : kv)
        if (!to_uint(val)) fail(s, "bad " + k);
    } else {
      need_args(s, 1);
    }
  } else if (v == "inject") {
    validate_inject(s);
  } else if (v == "advance") {
    need_args(s, 1);
    need_number(s, s.words[1]);
  } else if (v == "flush") {
    need_args(s, 0);
  } else if (v == "expect") {
    validate_expect(s);
  } else {
    fail(s, "unknown verb '" + v + "'");
  }
}

std::string describe(const Alarm& a) {
  return "directive=" + std::to_string(a.directive_id) + " risk=" + a.risk.to_string() +
         " host=" + a.host.value_or("-");
}

std::string describe(const WindowVerdict& v, const TimeZone& tz) {
  std::ostringstream os;
  os << "host=" << v.host.to_string() << " window=" << format_hms(v.window_start, tz) << "-"
     << format_hms(v.window_end, tz) << " flows=" << v.flows_total << " skype=" << v.flows_skype
     << " score=" << v.score << " fired=" << (v.fired ? "true" : "false");
  return os.str();
}

class Runner {
 public:
  Runner(const ScenarioScript& script, ScenarioTransport transport) : script_(script), transport_(transport) {}
  ~Runner() {
    if (siem_ch_) siem_ch_->close();
    if (probe_ch_) probe_ch_->close();
  }

  ScenarioResult run() {
    ScenarioResult result;
    for (const auto& step : script_.steps) {
      const std::string& verb = step.words[0];
      if (verb == "expect") {
        std::string observed;
        const bool ok = check(step, observed);
        log((ok ? "PASS " : "FAIL ") + step.text);
        if (!ok) {
          log("  observed " + observed);
          result.failed_line = step.line;
          result.transcript = std::move(transcript_);
          return result;
        }
      } else {
        log("step " + std::to_string(step.line) + ": " + step.text);
        execute(step);
      }
    }
    result.passed = true;
    result.transcript = std::move(transcript_);
    return result;
  }

 private:
  void log(std::string line) { transcript_.push_back(std::move(line)); }

  std::string resolve(const std::string& path) const {
    const fs::path p(path);
    return p.is_absolute() ? path : (fs::path(script_.base_dir) / p).string();
  }

  TimestampUs at(const std::map<std::string, std::string>& kv, const char* key) const {
    const double off = kv.count(key) ? *to_double(kv.at(key)) : 0.0;
    return start_us_ + std::llround(off * 1e6);
  }

  void configure(const ScenarioStep& s) {
    if (pipeline_) fail(s, "configuration must precede the first inject/advance/flush");
    const std::string& v = s.words[0];
    if (v == "timezone") tz_ = *TimeZone::parse(s.words[1]);
    else if (v == "window") window_s_ = *to_double(s.words[1]);
    else if (v == "auc-th") auc_th_ = *to_double(s.words[1]);
    else if (v == "r-th") r_th_ = *to_double(s.words[1]);
    else if (v == "start") start_us_ = static_cast<TimestampUs>(*to_uint(s.words[1])) * 1'000'000;
    else if (v == "directives") directives_ = load_directives_file(resolve(s.words[1]));
    else if (v == "assets") assets_ = AssetTable::load_file(resolve(s.words[1]));
    else if (v == "asset") assets_.set(Ipv4Addr::from_string(s.words[1]), static_cast<int>(*to_uint(s.words[2])));
    else if (v == "rules") rules_ = load_rules_file(resolve(s.words[1]));
    else if (v == "models") {
      if (s.words[1] == "synthetic") {
        const auto kv = key_values(s, 2);
        synth_n_ = kv.count("n") ? *to_uint(kv.at("n")) : synth_n_;
        synth_seed_ = kv.count("seed") ? *to_uint(kv.at("seed")) : synth_seed_;
        models_dir_.reset();
      } else {
        models_dir_ = resolve(s.words[1]);
      }
    }
  }

  void build() {
    if (pipeline_) return;
    pipeline_ = true;
    if (models_dir_) {
      ensemble_ = std::make_shared<Ensemble>(load_model_dir(*models_dir_).models);
      log("  models loaded from " + *models_dir_);
    } else {
      ensemble_ = std::make_shared<Ensemble>(train_all(generate_corpus(synth_n_, synth_seed_)));
      log("  models trained on synthetic corpus n=" + std::to_string(synth_n_) + " seed=" + std::to_string(synth_seed_));
    }
    CorrelationConfig cc;
    cc.r_th = r_th_;
    core_ = std::make_unique<SiemCore>(
        CorrelationEngine(directives_ ? *directives_ : default_directives(), assets_, cc));
    trigger_ = std::make_unique<TriggerEngine>(rules_ ? *rules_ : default_rules());

    ProbeConfig pc;
    pc.window_seconds = window_s_;
    pc.threshold.auc_th = auc_th_;
    pc.threshold.r_th = r_th_;
    pc.tz = tz_;
    probe_ = std::make_unique<ProbeEngine>(ensemble_, pc, hosts_);
    connect_channels();
  }

  void connect_channels() {
    if (transport_ == ScenarioTransport::Memory) {
      auto [a, b] = make_memory_channel_pair();
      siem_ch_ = std::move(a);
      probe_ch_ = std::move(b);
    } else {
      TcpListener listener = TcpListener::bind("127.0.0.1", 0);
      probe_ch_ = std::make_unique<TcpLineChannel>(TcpStream::connect("127.0.0.1", listener.port()));
      auto conn = listener.accept(Millis(5000));
      if (!conn) throw ScenarioError("loopback control connection was not accepted");
      siem_ch_ = std::make_unique<TcpLineChannel>(std::move(*conn));
    }
    std::exception_ptr server_error;
    std::thread server([&] {
      try {
        accept_probe_handshake(*siem_ch_);
      } catch (...) {
        server_error = std::current_exception();
      }
    });
    try {
      client_handshake(*probe_ch_);
    } catch (...) {
      server.join();
      throw;
    }
    server.join();
    if (server_error) std::rethrow_exception(server_error);
    log(std::string("  probe connected (") + (transport_ == ScenarioTransport::Memory ? "memory" : "tcp") +
        "): " + std::string(kConnectLine) + " -> " + std::string(kConnectReply));
  }

  void siem_ingest(const std::string& line, TimestampUs now) {
    syslog_.push_back(line);
    log("  syslog: " + line);
    IngestResult r = core_->ingest_line(line, now);
    if (!r.event) log("  siem: dropped unparseable line");
    for (const auto& a : r.alarms) {
      alarms_.push_back(a);
      log("  alarm: " + describe(a));
    }
    for (const auto& act : r.activations) {
      siem_ch_->send_line(activation_line(act.host));
      auto cmd = probe_ch_->recv_line(Millis(5000));
      if (!cmd) throw ScenarioError("activation did not reach the probe");
      probe_ch_->send_line(handle_control_line(*cmd, *hosts_));
      auto reply = siem_ch_->recv_line(Millis(5000));
      if (!reply) throw ScenarioError("probe did not acknowledge activation");
      activations_.push_back(act.host.to_string());
      log("  activation: " + *cmd + " -> " + *reply);
    }
  }

  void handle_verdicts(const std::vector<WindowVerdict>& vs) {
    for (const auto& v : vs) {
      verdicts_.push_back(v);
      log("  verdict: " + describe(v, tz_));
      if (v.fired) siem_ingest(emit_session_syslog(v, tz_), v.window_end);
    }
  }

  void feed(const std::vector<PacketMeta>& packets) {
    for (const auto& p : packets) {
      if (auto ev = trigger_->inspect(p)) siem_ingest(emit_trigger_syslog(*ev, tz_), p.timestamp);
      handle_verdicts(probe_->ingest(p));
    }
    log("  injected " + std::to_string(packets.size()) + " packet(s)");
  }

  void execute(const ScenarioStep& s) {
    const std::string& v = s.words[0];
    if (v != "inject" && v != "advance" && v != "flush") {
      configure(s);
      return;
    }
    build();
    if (v == "flush") {
      handle_verdicts(probe_->finish());
    } else if (v == "advance") {
      handle_verdicts(probe_->advance(start_us_ + std::llround(*to_double(s.words[1]) * 1e6)));
    } else if (s.words[1] == "capture") {
      feed(read_capture_file(resolve(s.words[2])).packets);
    } else {
      const std::size_t from = s.words[1] == "synth" ? 3 : 2;
      const auto kv = key_values(s, from);
      const Ipv4Addr host = Ipv4Addr::from_string(kv.at("host"));
      const TimestampUs t = at(kv, "at");
      if (s.words[1] == "login") {
        feed({login_packet(host, t)});
      } else if (s.words[1] == "udp-probe") {
        feed({udp_probe_packet(host, t)});
      } else {
        const ClassLabel label = s.words[2] == "skype" ? ClassLabel::Skype : ClassLabel::Normal;
        const std::uint64_t seed = kv.count("seed") ? *to_uint(kv.at("seed")) : s.line;
        const double spacing = kv.count("spacing") ? *to_double(kv.at("spacing")) : 2.0;
        feed(generate_traffic(label, host, *to_uint(kv.at("flows")), t, seed, std::llround(spacing * 1e6)));
      }
    }
  }

  template <typename T, typename Pred, typename Show>
  static bool consume(const std::vector<T>& items, std::size_t& cursor, Pred pred, Show show, std::string& observed) {
    for (std::size_t i = cursor; i < items.size(); ++i) {
      if (pred(items[i])) {
        cursor = i + 1;
        return true;
      }
    }
    observed = "(after " + std::to_string(cursor) + " matched) [";
    for (std::size_t i = 0; i < items.size(); ++i) observed += (i ? "; " : "") + show(items[i]);
    observed += "]";
    return false;
  }

  template <typename T, typename Pred, typename Show>
  static bool none(const std::vector<T>& items, Pred pred, Show show, std::string& observed) {
    for (const auto& it : items) {
      if (pred(it)) {
        observed = "unexpected " + show(it);
        return false;
      }
    }
    return true;
  }

  bool check(const ScenarioStep& s, std::string& observed) {
    const std::string& what = s.words[1];
    auto text_of = [&] {
      std::string t;
      for (std::size_t i = 2; i < s.words.size(); ++i) t += (i > 2 ? " " : "") + s.words[i];
      return t;
    };
    auto same = [](const std::string& x) { return x; };
    if (what == "syslog" || what == "no-syslog") {
      const std::string needle = text_of();
      auto has = [&](const std::string& l) { return l.find(needle) != std::string::npos; };
      return what == "syslog" ? consume(syslog_, syslog_cursor_, has, same, observed)
                              : none(syslog_, has, same, observed);
    }
    if (what == "alarm" || what == "no-alarm") {
      const auto kv = key_values(s, 2);
      auto match = [&](const Alarm& a) {
        if (kv.count("directive") && a.directive_id != static_cast<int>(*to_uint(kv.at("directive")))) return false;
        if (kv.count("risk") && a.risk.tenths() != std::llround(*to_double(kv.at("risk")) * 10)) return false;
        if (kv.count("host") && a.host != kv.at("host")) return false;
        return true;
      };
      auto show = [](const Alarm& a) { return describe(a); };
      return what == "alarm" ? consume(alarms_, alarm_cursor_, match, show, observed)
                             : none(alarms_, match, show, observed);
    }
    if (what == "activation") {
      auto match = [&](const std::string& ip) { return ip == s.words[2]; };
      return consume(activations_, activation_cursor_, match, same, observed);
    }
    if (what == "no-activation") return none(activations_, [](const std::string&) { return true; }, same, observed);
    if (what == "verdict") {
      const auto kv = key_values(s, 2);
      auto match = [&](const WindowVerdict& v) {
        if (v.host.to_string() != kv.at("host")) return false;
        if (kv.count("fired") && v.fired != (kv.at("fired") == "true")) return false;
        if (kv.count("flows") && v.flows_total != *to_uint(kv.at("flows"))) return false;
        if (kv.count("skype") && v.flows_skype != *to_uint(kv.at("skype"))) return false;
        return true;
      };
      auto show = [&](const WindowVerdict& v) { return describe(v, tz_); };
      return consume(verdicts_, verdict_cursor_, match, show, observed);
    }
    // classified
    const std::size_t got = probe_ ? probe_->classified_flows() : 0;
    const std::size_t want = s.words[2] == "none" ? 0 : *to_uint(s.words[2]);
    observed = "classified " + std::to_string(got);
    return got == want;
  }

  const ScenarioScript& script_;
  ScenarioTransport transport_;
  std::vector<std::string> transcript_;

  TimeZone tz_ = TimeZone::utc();
  double window_s_ = 300;
  double auc_th_ = 0.905;
  double r_th_ = 1.0;
  TimestampUs start_us_ = 0;
  std::optional<std::vector<Directive>> directives_;
  AssetTable assets_;
  std::optional<std::vector<TriggerRule>> rules_;
  std::optional<std::string> models_dir_;
  std::uint64_t synth_n_ = 1292;
  std::uint64_t synth_seed_ = 1;

  bool pipeline_ = false;
  std::shared_ptr<const Ensemble> ensemble_;
  std::unique_ptr<SiemCore> core_;
  std::unique_ptr<TriggerEngine> trigger_;
  std::shared_ptr<HostSet> hosts_ = std::make_shared<HostSet>();
  std::unique_ptr<ProbeEngine> probe_;
  std::unique_ptr<LineChannel> siem_ch_, probe_ch_;

  std::vector<std::string> syslog_;
  std::vector<Alarm> alarms_;
  std::vector<std::string> activations_;
  std::vector<WindowVerdict> verdicts_;
  std::size_t syslog_cursor_ = 0, alarm_cursor_ = 0, activation_cursor_ = 0, verdict_cursor_ = 0;
};

}  // namespace

ScenarioScript parse_scenario(std::string_view text, std::string base_dir) {
  ScenarioScript script;
  script.base_dir = std::move(base_dir);
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == '#' && (i == 0 || raw[i - 1] == ' ' || raw[i - 1] == '\t')) {
        raw.erase(i);
        break;
      }
    }
    ScenarioStep step;
    step.line = line_no;
    std::istringstream words(raw);
    for (std::string w; words >> w;) step.words.push_back(w);
    if (step.words.empty()) continue;
    for (const auto& w : step.words) step.text += (step.text.empty() ? "" : " ") + w;
    validate(step);
    script.steps.push_back(std::move(step));
  }
  if (script.steps.empty()) throw ScenarioError("scenario has no steps");
  return script;
}

ScenarioScript load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const fs::path parent = fs::path(path).parent_path();
  return parse_scenario(ss.str(), parent.empty() ? "." : parent.string());
}

ScenarioResult run_scenario(const ScenarioScript& script, ScenarioTransport transport) {
  Runner runner(script, transport);
  return runner.run();
}

}  // namespace skyprobe
