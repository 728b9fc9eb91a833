#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace skyprobe {

using Millis = std::chrono::milliseconds;

// Owning file descriptor.
class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) noexcept : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept;
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  int release() noexcept;
  void reset(int fd = -1) noexcept;

 private:
  int fd_ = -1;
};

// Blocking TCP stream with per-call deadlines and an internal line buffer.
class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(Fd fd) : fd_(std::move(fd)) {}

  // Throws ConnectionRefused (nothing listening / unreachable) or Timeout.
  static TcpStream connect(const std::string& host, std::uint16_t port, Millis timeout = Millis(5000));

  void write_all(std::string_view data);
  // One line without its terminator ("\n" or "\r\n"). nullopt on orderly EOF;
  // throws Timeout when nothing complete arrives in time.
  std::optional<std::string> read_line(Millis timeout);
  // Half-closes the write side and unblocks pending reads.
  void shutdown() noexcept;
  void close() noexcept { fd_.reset(); }
  bool is_open() const noexcept { return static_cast<bool>(fd_); }
  std::string peer() const;

 private:
  Fd fd_;
  std::string buffer_;
};

class TcpListener {
 public:
  // Port 0 picks an ephemeral port; see port().
  static TcpListener bind(const std::string& host, std::uint16_t port);

  std::uint16_t port() const noexcept { return port_; }
  // nullopt on timeout or after close().
  std::optional<TcpStream> accept(Millis timeout);
  void close() noexcept { fd_.reset(); }

 private:
  Fd fd_;
  std::uint16_t port_ = 0;
};

class UdpSocket {
 public:
  static UdpSocket bind(const std::string& host, std::uint16_t port);

  std::uint16_t port() const noexcept { return port_; }
  std::optional<std::string> receive(Millis timeout);
  void send_to(const std::string& host, std::uint16_t port, std::string_view data);
  void close() noexcept { fd_.reset(); }

 private:
  Fd fd_;
  std::uint16_t port_ = 0;
};

// "host:port" or ":port" / "port" (host defaults to 127.0.0.1).
struct HostPort {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};
HostPort parse_host_port(std::string_view text, std::uint16_t default_port);

}  // namespace skyprobe
