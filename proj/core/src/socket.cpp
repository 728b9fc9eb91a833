#include "skyprobe/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <stdexcept>
#include <utility>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (host.empty() || host == "0.0.0.0") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
    throw InvalidAddress("cannot resolve host '" + host + "'");
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

// Waits for `events`; false on timeout.
bool wait_fd(int fd, short events, Millis timeout) {
  pollfd p{fd, events, 0};
  for (;;) {
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc < 0) throw std::runtime_error("poll failed: " + errno_text());
    return rc > 0;
  }
}

std::uint16_t bound_port(int fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
    throw std::runtime_error("getsockname failed: " + errno_text());
  return ntohs(addr.sin_port);
}

}  // namespace

Fd& Fd::operator=(Fd&& o) noexcept {
  if (this != &o) reset(o.release());
  return *this;
}

int Fd::release() noexcept {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Fd::reset(int fd) noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = fd;
}

TcpStream TcpStream::connect(const std::string& host, std::uint16_t port, Millis timeout) {
  const sockaddr_in addr = resolve(host, port);
  Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0));
  if (!fd) throw std::runtime_error("socket failed: " + errno_text());
  if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    if (errno != EINPROGRESS) throw ConnectionRefused("connect to " + host + ":" + std::to_string(port) + ": " + errno_text());
    if (!wait_fd(fd.get(), POLLOUT, timeout))
      throw Timeout("connect to " + host + ":" + std::to_string(port) + " timed out");
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0)
      throw ConnectionRefused("connect to " + host + ":" + std::to_string(port) + ": " + std::strerror(err));
  }
  const int flags = ::fcntl(fd.get(), F_GETFL);
  ::fcntl(fd.get(), F_SETFL, flags & ~O_NONBLOCK);
  const int one = 1;
  ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return TcpStream(std::move(fd));
}

void TcpStream::write_all(std::string_view data) {
  if (!fd_) throw ChannelClosed("write on closed stream");
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd_.get(), data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ChannelClosed("send failed: " + errno_text());
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> TcpStream::read_line(Millis timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const std::size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (!fd_) return std::nullopt;
    const auto left = std::chrono::duration_cast<Millis>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0 || !wait_fd(fd_.get(), POLLIN, left)) throw Timeout("no complete line before deadline");
    char chunk[4096];
    const ssize_t n = ::recv(fd_.get(), chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      if (errno == ECONNRESET) return std::nullopt;
      throw ChannelClosed("recv failed: " + errno_text());
    }
    if (n == 0) {
      // A final unterminated line is still delivered.
      if (buffer_.empty()) return std::nullopt;
      return std::exchange(buffer_, {});
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void TcpStream::shutdown() noexcept {
  if (fd_) ::shutdown(fd_.get(), SHUT_RDWR);
}

std::string TcpStream::peer() const {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (!fd_ || ::getpeername(fd_.get(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) return "?";
  char buf[INET_ADDRSTRLEN] = {};
  ::inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof buf);
  return std::string(buf) + ":" + std::to_string(ntohs(addr.sin_port));
}

TcpListener TcpListener::bind(const std::string& host, std::uint16_t port) {
  const sockaddr_in addr = resolve(host, port);
  Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd) throw std::runtime_error("socket failed: " + errno_text());
  const int one = 1;
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd.get(), 16) != 0)
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port) + ": " + errno_text());
  TcpListener l;
  l.port_ = bound_port(fd.get());
  l.fd_ = std::move(fd);
  return l;
}

std::optional<TcpStream> TcpListener::accept(Millis timeout) {
  if (!fd_ || !wait_fd(fd_.get(), POLLIN, timeout)) return std::nullopt;
  Fd conn(::accept4(fd_.get(), nullptr, nullptr, SOCK_CLOEXEC));
  if (!conn) return std::nullopt;
  const int one = 1;
  ::setsockopt(conn.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return TcpStream(std::move(conn));
}

UdpSocket UdpSocket::bind(const std::string& host, std::uint16_t port) {
  const sockaddr_in addr = resolve(host, port);
  Fd fd(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0));
  if (!fd) throw std::runtime_error("socket failed: " + errno_text());
  if (::bind(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
    throw std::runtime_error("cannot bind udp " + host + ":" + std::to_string(port) + ": " + errno_text());
  UdpSocket s;
  s.port_ = bound_port(fd.get());
  s.fd_ = std::move(fd);
  return s;
}

std::optional<std::string> UdpSocket::receive(Millis timeout) {
  if (!fd_ || !wait_fd(fd_.get(), POLLIN, timeout)) return std::nullopt;
  std::string buf(65536, '\0');
  const ssize_t n = ::recv(fd_.get(), buf.data(), buf.size(), 0);
  if (n < 0) return std::nullopt;
  buf.resize(static_cast<std::size_t>(n));
  while (!buf.empty() && (buf.back() == '\n' || buf.back() == '\r' || buf.back() == '\0')) buf.pop_back();
  return buf;
}

void UdpSocket::send_to(const std::string& host, std::uint16_t port, std::string_view data) {
  const sockaddr_in addr = resolve(host, port);
  if (::sendto(fd_.get(), data.data(), data.size(), 0, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0)
    throw std::runtime_error("sendto failed: " + errno_text());
}

HostPort parse_host_port(std::string_view text, std::uint16_t default_port) {
  HostPort hp;
  hp.port = default_port;
  const std::size_t colon = text.rfind(':');
  std::string_view port_text;
  if (colon == std::string_view::npos) {
    if (!text.empty() && text.find_first_not_of("0123456789") == std::string_view::npos)
      port_text = text;
    else if (!text.empty())
      hp.host = std::string(text);
  } else {
    if (colon > 0) hp.host = std::string(text.substr(0, colon));
    port_text = text.substr(colon + 1);
  }
  if (!port_text.empty()) {
    unsigned v = 0;
    auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), v);
    if (ec != std::errc{} || end != port_text.data() + port_text.size() || v > 65535)
      throw InvalidAddress("bad port in '" + std::string(text) + "'");
    hp.port = static_cast<std::uint16_t>(v);
  }
  return hp;
}

}  // namespace skyprobe
