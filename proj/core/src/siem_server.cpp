#include "skyprobe/siem_server.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "skyprobe/errors.hpp"
#include "skyprobe/probe.hpp"

namespace skyprobe {
namespace {

constexpr Millis kPoll{100};

TimestampUs wall_clock_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

void accept_probe_handshake(LineChannel& ch, Millis timeout) {
  std::optional<std::string> line;
  try {
    line = ch.recv_line(timeout);
  } catch (const ChannelClosed&) {
    throw MalformedHandshake("probe disconnected before the handshake");
  }
  if (!line || !line->starts_with(R"(Connect id="1")")) {
    ch.close();
    throw MalformedHandshake(line ? "unexpected first line '" + *line + "'" : "no handshake before timeout");
  }
  ch.send_line(kConnectReply);
}

SiemCore::SiemCore(CorrelationEngine engine, EventStore* store) : engine_(std::move(engine)), store_(store) {}

IngestResult SiemCore::ingest_line(std::string_view raw, TimestampUs now) {
  ++counters_.received;
  IngestResult r;
  try {
    r.event = normalize(raw);
  } catch (const NormalizationFailed&) {
    ++counters_.dropped;
    return r;
  }
  ++counters_.normalized;
  r.event_id = store_ ? store_->append_event(*r.event) : next_event_id_++;
  CorrelationOutcome out = engine_.process(*r.event, r.event_id, now);
  for (auto& a : out.alarms) {
    if (store_) store_->append_alarm(a);
    alarms_.push_back(a);
  }
  counters_.alarms += out.alarms.size();
  counters_.activations += out.activations.size();
  r.alarms = std::move(out.alarms);
  r.activations = std::move(out.activations);
  return r;
}

std::string SiemCore::status_text() const {
  std::ostringstream os;
  os << "received " << counters_.received << "\n"
     << "normalized " << counters_.normalized << "\n"
     << "dropped " << counters_.dropped << "\n"
     << "alarms " << counters_.alarms << "\n"
     << "activations " << counters_.activations << "\n"
     << "live_instances " << engine_.live_instances() << "\n";
  if (store_) os << "stored " << store_->size() << "\n";
  for (const auto& a : alarms_)
    os << "alarm directive=" << a.directive_id << " risk=" << a.risk.to_string()
       << " host=" << a.host.value_or("-") << "\n";
  return os.str();
}

SiemServer::SiemServer(SiemServerConfig config, SiemCore& core) : config_(std::move(config)), core_(core) {}

SiemServer::~SiemServer() { stop(); }

void SiemServer::start() {
  if (running_.exchange(true)) return;
  control_ = TcpListener::bind(config_.bind_host, config_.control_port);
  control_port_ = control_->port();
  if (config_.syslog_port) {
    udp_ = UdpSocket::bind(config_.bind_host, *config_.syslog_port);
    syslog_port_ = udp_->port();
  }
  if (config_.admin_port) {
    admin_ = TcpListener::bind(config_.bind_host, *config_.admin_port);
    admin_port_ = admin_->port();
  }
  threads_.emplace_back([this] { consume_loop(); });
  threads_.emplace_back([this] { accept_loop(); });
  if (udp_) threads_.emplace_back([this] { udp_loop(); });
  if (admin_) threads_.emplace_back([this] { admin_loop(); });
  // Offsets are taken here, not in the thread, so lines appended after
  // start() returns are never skipped. A missing file is read from byte 0.
  for (const auto& path : config_.tail_files) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    const std::int64_t offset = ec ? 0 : static_cast<std::int64_t>(size);
    threads_.emplace_back([this, path, offset] { tail_loop(path, offset); });
  }
}

void SiemServer::stop() {
  if (!running_.exchange(false)) return;
  queue_cv_.notify_all();
  for (auto& t : threads_) t.join();
  threads_.clear();
  std::lock_guard lock(sessions_mu_);
  for (auto& s : sessions_) {
    s.alive = false;
    s.channel->close();
  }
  for (auto& s : sessions_)
    if (s.reader.joinable()) s.reader.join();
  sessions_.clear();
  control_.reset();
  udp_.reset();
  admin_.reset();
}

void SiemServer::submit(std::string line) {
  if (failed_) return;
  {
    std::lock_guard lock(queue_mu_);
    queue_.push_back(std::move(line));
  }
  queue_cv_.notify_one();
}

void SiemServer::drain() {
  std::unique_lock lock(queue_mu_);
  idle_cv_.wait(lock, [&] { return (queue_.empty() && !busy_) || !running_ || failed_; });
}

std::size_t SiemServer::probe_count() const {
  std::lock_guard lock(sessions_mu_);
  std::size_t n = 0;
  for (const auto& s : sessions_) n += s.alive ? 1 : 0;
  return n;
}

std::vector<std::string> SiemServer::probe_replies() const {
  std::lock_guard lock(sessions_mu_);
  return replies_;
}

std::string SiemServer::status_text() const {
  std::string text;
  {
    std::lock_guard lock(core_mu_);
    text = core_.status_text();
  }
  return text + "probes " + std::to_string(probe_count()) + "\n";
}

void SiemServer::accept_loop() {
  while (running_) {
    auto conn = control_->accept(kPoll);
    if (!conn) continue;
    auto channel = std::make_unique<TcpLineChannel>(std::move(*conn));
    try {
      accept_probe_handshake(*channel, config_.handshake_timeout);
    } catch (const Error& e) {
      std::cerr << "siem: rejected probe: " << e.what() << "\n";
      continue;
    }
    std::lock_guard lock(sessions_mu_);
    Session& s = sessions_.emplace_back();
    s.channel = std::move(channel);
    s.reader = std::thread([this, &s] { session_loop(s); });
  }
}

void SiemServer::session_loop(Session& s) {
  try {
    while (running_ && s.alive) {
      auto line = s.channel->recv_line(kPoll);
      if (!line) continue;
      if (line->starts_with("Syslog ")) {
        submit(*line);
      } else {
        std::lock_guard lock(sessions_mu_);
        replies_.push_back(*line);
      }
    }
  } catch (const Error&) {
  }
  s.alive = false;
}

void SiemServer::broadcast(const std::string& line) {
  std::lock_guard lock(sessions_mu_);
  for (auto& s : sessions_) {
    if (!s.alive) continue;
    try {
      s.channel->send_line(line);
    } catch (const Error&) {
      s.alive = false;
    }
  }
}

void SiemServer::udp_loop() {
  while (running_) {
    if (auto msg = udp_->receive(kPoll)) submit(std::move(*msg));
  }
}

void SiemServer::tail_loop(std::string path, std::int64_t start) {
  std::ifstream in;
  std::streamoff offset = start;
  std::string partial;
  while (running_) {
    if (!in.is_open()) in.open(path, std::ios::binary);
    if (in.is_open()) {
      in.clear();
      in.seekg(offset);
      std::string chunk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      offset += static_cast<std::streamoff>(chunk.size());
      partial += chunk;
      std::size_t nl;
      while ((nl = partial.find('\n')) != std::string::npos) {
        std::string line = partial.substr(0, nl);
        partial.erase(0, nl + 1);
        if (!line.empty()) submit(std::move(line));
      }
    }
    std::this_thread::sleep_for(kPoll);
  }
}

void SiemServer::admin_loop() {
  while (running_) {
    auto conn = admin_->accept(kPoll);
    if (!conn) continue;
    try {
      conn->write_all(status_text());
    } catch (const Error&) {
    }
    conn->shutdown();
  }
}

void SiemServer::consume_loop() {
  for (;;) {
    std::string line;
    {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait_for(lock, kPoll, [&] { return !queue_.empty() || !running_; });
      if (queue_.empty()) {
        if (!running_) break;
        continue;
      }
      line = std::move(queue_.front());
      queue_.pop_front();
      if (failed_) continue;
      busy_ = true;
    }
    IngestResult r;
    try {
      std::lock_guard lock(core_mu_);
      r = core_.ingest_line(line, wall_clock_us());
    } catch (const StoreFailure& e) {
      std::cerr << "siem: store failure, no longer accepting events: " << e.what() << "\n";
      failed_ = true;
    }
    for (const auto& a : r.activations) broadcast(activation_line(a.host));
    {
      std::lock_guard lock(queue_mu_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
  idle_cv_.notify_all();
}

}  // namespace skyprobe
