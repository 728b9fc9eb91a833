#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "skyprobe/channel.hpp"
#include "skyprobe/correlation.hpp"
#include "skyprobe/store.hpp"

namespace skyprobe {

// Server half of the probe handshake: a first line starting with
// `Connect id="1"` is answered with "Ok id=1". Anything else (or silence until
// the timeout) closes the channel and throws MalformedHandshake.
void accept_probe_handshake(LineChannel& ch, Millis timeout = Millis(5000));

struct SiemCounters {
  std::uint64_t received = 0;
  std::uint64_t normalized = 0;
  std::uint64_t dropped = 0;
  std::uint64_t alarms = 0;
  std::uint64_t activations = 0;
  bool operator==(const SiemCounters&) const = default;
};

struct IngestResult {
  std::optional<NormalizedEvent> event;
  std::uint64_t event_id = 0;
  std::vector<Alarm> alarms;
  std::vector<Activation> activations;
};

// Normalize -> persist -> correlate for one line at a time. Not thread-safe;
// it is meant to sit behind a single consumer.
class SiemCore {
 public:
  explicit SiemCore(CorrelationEngine engine, EventStore* store = nullptr);

  // Unparseable lines are counted as dropped and return an empty result.
  IngestResult ingest_line(std::string_view raw, TimestampUs now);

  const SiemCounters& counters() const noexcept { return counters_; }
  const std::vector<Alarm>& alarms() const noexcept { return alarms_; }
  const CorrelationEngine& engine() const noexcept { return engine_; }
  std::string status_text() const;

 private:
  CorrelationEngine engine_;
  EventStore* store_;
  SiemCounters counters_;
  std::vector<Alarm> alarms_;
  std::uint64_t next_event_id_ = 1;
};

struct SiemServerConfig {
  std::string bind_host = "127.0.0.1";
  std::uint16_t control_port = 40001;        // 0: ephemeral
  std::optional<std::uint16_t> syslog_port;  // UDP intake, usually 514
  std::vector<std::string> tail_files;       // followed from their current end
  std::optional<std::uint16_t> admin_port;   // plain-text status dump
  Millis handshake_timeout{5000};
};

// Network front end. Every intake path enqueues raw lines; one consumer
// thread drives the SiemCore and pushes `ACTIVATE <ip>` to every connected
// probe.
class SiemServer {
 public:
  SiemServer(SiemServerConfig config, SiemCore& core);
  ~SiemServer();
  SiemServer(const SiemServer&) = delete;
  SiemServer& operator=(const SiemServer&) = delete;

  void start();
  void stop();

  void submit(std::string line);
  // Blocks until every submitted line has been processed.
  void drain();

  std::uint16_t control_port() const noexcept { return control_port_; }
  std::uint16_t syslog_port() const noexcept { return syslog_port_; }
  std::uint16_t admin_port() const noexcept { return admin_port_; }
  std::size_t probe_count() const;
  std::vector<std::string> probe_replies() const;
  std::string status_text() const;
  bool failed() const noexcept { return failed_; }

 private:
  struct Session {
    std::unique_ptr<LineChannel> channel;
    std::thread reader;
    std::atomic<bool> alive{true};
  };

  void accept_loop();
  void udp_loop();
  void tail_loop(std::string path, std::int64_t offset);
  void admin_loop();
  void consume_loop();
  void session_loop(Session& s);
  void broadcast(const std::string& line);

  SiemServerConfig config_;
  SiemCore& core_;
  std::atomic<bool> running_{false};
  std::atomic<bool> failed_{false};  // store failure: fail-stop
  std::vector<std::thread> threads_;

  std::optional<TcpListener> control_;
  std::optional<UdpSocket> udp_;
  std::optional<TcpListener> admin_;
  std::uint16_t control_port_ = 0, syslog_port_ = 0, admin_port_ = 0;

  mutable std::mutex sessions_mu_;
  std::list<Session> sessions_;
  std::vector<std::string> replies_;

  mutable std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<std::string> queue_;
  bool busy_ = false;

  mutable std::mutex core_mu_;
};

}  // namespace skyprobe
