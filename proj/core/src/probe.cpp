#include "skyprobe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "skyprobe/errors.hpp"
#include "skyprobe/features.hpp"
#include "skyprobe/pcap.hpp"

namespace skyprobe {
namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  const std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void ProbeConfig::validate() const {
  if (!(window_seconds > 0) || !std::isfinite(window_seconds))
    throw std::invalid_argument("window_seconds must be positive");
  if (!(threshold.auc_th >= 0 && threshold.auc_th <= 1)) throw std::invalid_argument("auc_th must lie in [0,1]");
  if (!(flow_timeout_seconds > 0)) throw std::invalid_argument("flow timeout must be positive");
}

void client_handshake(LineChannel& ch, std::string_view connect_line, Millis timeout) {
  ch.send_line(connect_line);
  std::optional<std::string> reply;
  try {
    reply = ch.recv_line(timeout);
  } catch (const ChannelClosed&) {
    throw HandshakeRejected("server closed the connection during handshake");
  }
  if (!reply) throw Timeout("no handshake reply within " + std::to_string(timeout.count()) + " ms");
  if (trim(*reply) != kConnectReply) throw HandshakeRejected("unexpected handshake reply '" + *reply + "'");
}

std::unique_ptr<LineChannel> connect_to_siem(const ProbeConfig& cfg) {
  auto ch = std::make_unique<TcpLineChannel>(
      TcpStream::connect(cfg.server_host, cfg.server_port, cfg.handshake_timeout));
  client_handshake(*ch, cfg.connect_line, cfg.handshake_timeout);
  return ch;
}

bool HostSet::add(Ipv4Addr host) {
  std::lock_guard lock(mu_);
  return hosts_.insert(host).second;
}

bool HostSet::contains(Ipv4Addr host) const {
  std::lock_guard lock(mu_);
  return hosts_.count(host) != 0;
}

bool HostSet::empty() const {
  std::lock_guard lock(mu_);
  return hosts_.empty();
}

std::size_t HostSet::size() const {
  std::lock_guard lock(mu_);
  return hosts_.size();
}

std::vector<Ipv4Addr> HostSet::snapshot() const {
  std::vector<Ipv4Addr> out;
  {
    std::lock_guard lock(mu_);
    out.assign(hosts_.begin(), hosts_.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool activate(HostSet& hosts, std::string_view ip) { return hosts.add(Ipv4Addr::from_string(trim(ip))); }

std::string activation_line(Ipv4Addr host) { return "ACTIVATE " + host.to_string(); }

std::optional<Ipv4Addr> parse_activation(std::string_view line) {
  line = trim(line);
  constexpr std::string_view kCmd = "ACTIVATE";
  if (!line.starts_with(kCmd)) return std::nullopt;
  std::string_view rest = line.substr(kCmd.size());
  if (!rest.empty() && rest.front() != ' ' && rest.front() != '\t') return std::nullopt;
  return Ipv4Addr::from_string(trim(rest));
}

std::string handle_control_line(std::string_view line, HostSet& hosts) {
  try {
    if (auto host = parse_activation(line)) {
      hosts.add(*host);
      return "OK";
    }
  } catch (const InvalidAddress&) {
    return "ERR invalid address";
  }
  return "ERR unknown command";
}

std::size_t pump_control(LineChannel& ch, HostSet& hosts, Millis idle) {
  std::size_t handled = 0;
  while (auto line = ch.recv_line(idle)) {
    ch.send_line(handle_control_line(*line, hosts));
    ++handled;
  }
  return handled;
}

WindowVerdict make_verdict(Ipv4Addr host, TimestampUs start, TimestampUs end, std::size_t total,
                           std::size_t skype, double auc_th) {
  WindowVerdict v{host, start, end, total, skype, 0.0, false};
  if (total > 0) {
    v.score = static_cast<double>(skype) / static_cast<double>(total);
    v.fired = v.score >= auc_th;
  }
  return v;
}

WindowVerdict evaluate_window(Ipv4Addr host, TimestampUs start, TimestampUs end,
                              std::span<const FlowRecord> flows, const Ensemble& ensemble, double auc_th) {
  std::size_t total = 0, skype = 0;
  for (const auto& f : flows) {
    if (f.packet_count() < 2) continue;
    ++total;
    if (ensemble.decide(extract_features(f)).label == ClassLabel::Skype) ++skype;
  }
  return make_verdict(host, start, end, total, skype, auc_th);
}

std::string emit_session_syslog(const WindowVerdict& v, const TimeZone& tz) {
  if (!v.fired) throw std::logic_error("session syslog requested for a window that did not fire");
  return "Syslog ESkyPRO log: {syslog} " + format_syslog_datetime(v.window_end, tz) +
         " INFO SkypeSession ipAddr=" + v.host.to_string() + "#timestamp=" + format_hms(v.window_end, tz);
}

ProbeEngine::ProbeEngine(std::shared_ptr<const Ensemble> ensemble, ProbeConfig config,
                         std::shared_ptr<HostSet> hosts)
    : ensemble_(std::move(ensemble)),
      config_(std::move(config)),
      hosts_(std::move(hosts)),
      window_us_(0),
      assembler_(config_.flow_timeout_seconds) {
  config_.validate();
  if (!ensemble_) throw std::invalid_argument("probe engine needs an ensemble");
  if (!hosts_) hosts_ = std::make_shared<HostSet>();
  window_us_ = std::max<TimestampUs>(1, std::llround(config_.window_seconds * 1e6));
}

std::vector<WindowVerdict> ProbeEngine::ingest(const PacketMeta& pkt) {
  std::vector<WindowVerdict> out = advance(pkt.timestamp);
  if (!window_) window_ = floor_div(pkt.timestamp, window_us_);
  if (hosts_->contains(pkt.src_ip) || hosts_->contains(pkt.dst_ip)) assembler_.push(pkt);
  return out;
}

std::vector<WindowVerdict> ProbeEngine::advance(TimestampUs now) {
  if (!window_) return {};
  const std::int64_t idx = floor_div(now, window_us_);
  if (idx <= *window_) return {};
  std::vector<WindowVerdict> out = close_window();
  window_ = idx;
  return out;
}

std::vector<WindowVerdict> ProbeEngine::finish() {
  if (!window_) return {};
  std::vector<WindowVerdict> out = close_window();
  window_.reset();
  return out;
}

std::vector<WindowVerdict> ProbeEngine::close_window() {
  const TimestampUs start = *window_ * window_us_;
  const TimestampUs end = start + window_us_;
  const std::vector<FlowRecord> flows = assembler_.flush();
  std::vector<WindowVerdict> out;
  for (const Ipv4Addr host : hosts_->snapshot()) {
    std::vector<FlowRecord> mine;
    for (const auto& f : flows)
      if (f.key.involves(host) && f.packet_count() >= 2) mine.push_back(f);
    if (mine.empty()) continue;
    out.push_back(evaluate_window(host, start, end, mine, *ensemble_, config_.threshold.auc_th));
    classified_ += mine.size();
  }
  return out;
}

std::size_t stream_packets(std::istream& in, const std::function<void(const PacketMeta&)>& sink,
                           std::size_t chunk_size) {
  PcapStreamDecoder dec;
  std::vector<std::uint8_t> buf(std::max<std::size_t>(1, chunk_size));
  while (in) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    const auto n = static_cast<std::size_t>(in.gcount());
    if (n == 0) break;
    for (const auto& p : dec.feed(std::span(buf.data(), n))) sink(p);
  }
  dec.finish();
  return dec.skipped();
}

ProbeRuntime::ProbeRuntime(std::shared_ptr<const Ensemble> ensemble, ProbeConfig config, SyslogSink& sink)
    : engine_(std::move(ensemble), std::move(config)), sink_(sink) {}

ProbeRuntime::~ProbeRuntime() { stop(); }

void ProbeRuntime::attach(std::unique_ptr<LineChannel> control) {
  if (control_) throw std::logic_error("control session already attached");
  control_ = std::move(control);
  control_thread_ = std::thread([this] {
    try {
      while (!stopping_.load()) pump_control(*control_, engine_.hosts(), Millis(100));
    } catch (const ChannelClosed&) {
    }
  });
}

void ProbeRuntime::ingest(const PacketMeta& pkt) { publish(engine_.ingest(pkt)); }

void ProbeRuntime::finish() { publish(engine_.finish()); }

void ProbeRuntime::stop() {
  stopping_.store(true);
  if (control_) control_->close();
  if (control_thread_.joinable()) control_thread_.join();
}

std::vector<WindowVerdict> ProbeRuntime::verdicts() const {
  std::lock_guard lock(mu_);
  return verdicts_;
}

void ProbeRuntime::publish(const std::vector<WindowVerdict>& vs) {
  std::lock_guard lock(mu_);
  for (const auto& v : vs) {
    verdicts_.push_back(v);
    if (v.fired) sink_.emit(emit_session_syslog(v, engine_.config().tz));
  }
}

}  // namespace skyprobe
