#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include "skyprobe/channel.hpp"
#include "skyprobe/flows.hpp"
#include "skyprobe/metrics.hpp"
#include "skyprobe/syslog.hpp"
#include "skyprobe/voting.hpp"

namespace skyprobe {

inline constexpr std::string_view kConnectLine =
    R"(Connect id="1" type="web" version="3.1.4" hostname="ossim-server" tzone="1")";
inline constexpr std::string_view kConnectReply = "Ok id=1";
inline constexpr std::uint16_t kControlPort = 40001;

struct ProbeConfig {
  std::string server_host = "127.0.0.1";
  std::uint16_t server_port = kControlPort;
  double window_seconds = 300;
  ThresholdConfig threshold;
  std::string connect_line = std::string(kConnectLine);
  Millis handshake_timeout{5000};
  double flow_timeout_seconds = 60;
  TimeZone tz;

  // Throws std::invalid_argument.
  void validate() const;
};

// Sends the connect line and waits for "Ok id=1". Throws HandshakeRejected on
// any other reply (or a closed channel) and Timeout when none arrives.
void client_handshake(LineChannel& ch, std::string_view connect_line = kConnectLine,
                      Millis timeout = Millis(5000));
// TCP connect plus handshake. Throws ConnectionRefused, HandshakeRejected, Timeout.
std::unique_ptr<LineChannel> connect_to_siem(const ProbeConfig& cfg);

// Hosts the probe is allowed to classify; shared with the control session.
class HostSet {
 public:
  // True if newly added.
  bool add(Ipv4Addr host);
  bool contains(Ipv4Addr host) const;
  bool empty() const;
  std::size_t size() const;
  std::vector<Ipv4Addr> snapshot() const;  // ascending

 private:
  mutable std::mutex mu_;
  std::unordered_set<Ipv4Addr> hosts_;
};

// activate(host): throws InvalidAddress for a malformed address. Idempotent.
bool activate(HostSet& hosts, std::string_view ip);

std::string activation_line(Ipv4Addr host);
// "ACTIVATE <ip>" -> the address; nullopt for other commands. Throws
// InvalidAddress when the command is ACTIVATE but the address is malformed.
std::optional<Ipv4Addr> parse_activation(std::string_view line);
// Applies one control line and returns the reply: "OK" or "ERR <reason>".
std::string handle_control_line(std::string_view line, HostSet& hosts);
// Answers every control line that arrives within `idle` of the previous one.
// Returns the number of lines handled; throws ChannelClosed.
std::size_t pump_control(LineChannel& ch, HostSet& hosts, Millis idle);

struct WindowVerdict {
  Ipv4Addr host;
  TimestampUs window_start = 0;
  TimestampUs window_end = 0;
  std::size_t flows_total = 0;
  std::size_t flows_skype = 0;
  double score = 0;  // flows_skype / flows_total, 0 when empty
  bool fired = false;
  bool operator==(const WindowVerdict&) const = default;
};

WindowVerdict make_verdict(Ipv4Addr host, TimestampUs start, TimestampUs end, std::size_t total,
                           std::size_t skype, double auc_th);
// Classifies every multi-packet flow; singleton flows are ignored.
WindowVerdict evaluate_window(Ipv4Addr host, TimestampUs start, TimestampUs end,
                              std::span<const FlowRecord> flows, const Ensemble& ensemble, double auc_th);

// Syslog ESkyPRO log: {syslog} <DATETIME> INFO SkypeSession ipAddr=<IP>#timestamp=<HH:MM:SS>
// Both the datetime and the timestamp render window_end. Throws
// std::logic_error for a verdict that did not fire.
std::string emit_session_syslog(const WindowVerdict& v, const TimeZone& tz);

// Tumbling-window evaluator. Windows are aligned to multiples of
// window_seconds since the epoch; a window closes when a packet (or advance())
// reaches its end, and every flow still open at that point is assigned to it.
// Only packets with a monitored endpoint are retained.
class ProbeEngine {
 public:
  ProbeEngine(std::shared_ptr<const Ensemble> ensemble, ProbeConfig config,
              std::shared_ptr<HostSet> hosts = std::make_shared<HostSet>());

  std::vector<WindowVerdict> ingest(const PacketMeta& pkt);
  std::vector<WindowVerdict> advance(TimestampUs now);
  std::vector<WindowVerdict> finish();

  HostSet& hosts() noexcept { return *hosts_; }
  const ProbeConfig& config() const noexcept { return config_; }
  std::size_t classified_flows() const noexcept { return classified_; }

 private:
  std::vector<WindowVerdict> close_window();

  std::shared_ptr<const Ensemble> ensemble_;
  ProbeConfig config_;
  std::shared_ptr<HostSet> hosts_;
  TimestampUs window_us_;
  FlowAssembler assembler_;
  std::optional<std::int64_t> window_;
  std::size_t classified_ = 0;
};

// Reads a pcap byte stream incrementally (file, pipe or stdin) and hands each
// packet to `sink`. Returns the number of skipped records.
std::size_t stream_packets(std::istream& in, const std::function<void(const PacketMeta&)>& sink,
                           std::size_t chunk_size = 65536);

// Engine plus control session plus syslog emission. The control session runs
// on its own thread once attached; ingest() and finish() belong to one caller.
class ProbeRuntime {
 public:
  ProbeRuntime(std::shared_ptr<const Ensemble> ensemble, ProbeConfig config, SyslogSink& sink);
  ~ProbeRuntime();

  void attach(std::unique_ptr<LineChannel> control);
  void ingest(const PacketMeta& pkt);
  void finish();
  void stop();

  HostSet& hosts() noexcept { return engine_.hosts(); }
  std::vector<WindowVerdict> verdicts() const;

 private:
  void publish(const std::vector<WindowVerdict>& vs);

  ProbeEngine engine_;
  SyslogSink& sink_;
  std::unique_ptr<LineChannel> control_;
  std::thread control_thread_;
  std::atomic<bool> stopping_{false};
  mutable std::mutex mu_;
  std::vector<WindowVerdict> verdicts_;
};

}  // namespace skyprobe
