#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "skyprobe/socket.hpp"

namespace skyprobe {

// Bidirectional, line-delimited text channel between a probe and the SIEM.
// recv_line returns nullopt on timeout and throws ChannelClosed once the peer
// has gone away.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void send_line(std::string_view line) = 0;
  virtual std::optional<std::string> recv_line(Millis timeout) = 0;
  virtual void close() = 0;
};

// Two connected in-memory endpoints; closing either side closes both
// directions for the peer once its inbox drains.
std::pair<std::unique_ptr<LineChannel>, std::unique_ptr<LineChannel>> make_memory_channel_pair();

class TcpLineChannel final : public LineChannel {
 public:
  explicit TcpLineChannel(TcpStream stream) : stream_(std::move(stream)) {}
  ~TcpLineChannel() override { TcpLineChannel::close(); }

  void send_line(std::string_view line) override;
  std::optional<std::string> recv_line(Millis timeout) override;
  void close() override;

 private:
  TcpStream stream_;
};

}  // namespace skyprobe
