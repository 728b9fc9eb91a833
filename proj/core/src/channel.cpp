#include "skyprobe/channel.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

struct Mailbox {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> lines;
  bool closed = false;
};

class MemoryChannel final : public LineChannel {
 public:
  MemoryChannel(std::shared_ptr<Mailbox> inbox, std::shared_ptr<Mailbox> outbox)
      : inbox_(std::move(inbox)), outbox_(std::move(outbox)) {}
  ~MemoryChannel() override { MemoryChannel::close(); }

  void send_line(std::string_view line) override {
    {
      std::lock_guard lock(outbox_->mu);
      if (outbox_->closed) throw ChannelClosed("peer closed");
      outbox_->lines.emplace_back(line);
    }
    outbox_->cv.notify_all();
  }

  std::optional<std::string> recv_line(Millis timeout) override {
    std::unique_lock lock(inbox_->mu);
    inbox_->cv.wait_for(lock, timeout, [&] { return !inbox_->lines.empty() || inbox_->closed; });
    if (!inbox_->lines.empty()) {
      std::string line = std::move(inbox_->lines.front());
      inbox_->lines.pop_front();
      return line;
    }
    if (inbox_->closed) throw ChannelClosed("channel closed");
    return std::nullopt;
  }

  void close() override {
    for (auto* box : {inbox_.get(), outbox_.get()}) {
      {
        std::lock_guard lock(box->mu);
        box->closed = true;
      }
      box->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Mailbox> inbox_;
  std::shared_ptr<Mailbox> outbox_;
};

}  // namespace

std::pair<std::unique_ptr<LineChannel>, std::unique_ptr<LineChannel>> make_memory_channel_pair() {
  auto a = std::make_shared<Mailbox>();
  auto b = std::make_shared<Mailbox>();
  return {std::make_unique<MemoryChannel>(a, b), std::make_unique<MemoryChannel>(b, a)};
}

void TcpLineChannel::send_line(std::string_view line) {
  std::string buf(line);
  buf += '\n';
  stream_.write_all(buf);
}

std::optional<std::string> TcpLineChannel::recv_line(Millis timeout) {
  try {
    auto line = stream_.read_line(timeout);
    if (!line) throw ChannelClosed("connection closed by peer");
    return line;
  } catch (const Timeout&) {
    return std::nullopt;
  }
}

// Only shuts the socket down so a reader blocked on another thread wakes up;
// the descriptor itself is released by the destructor.
void TcpLineChannel::close() { stream_.shutdown(); }

}  // namespace skyprobe
