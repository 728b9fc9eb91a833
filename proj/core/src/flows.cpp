#include "skyprobe/flows.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace skyprobe {

FlowKey FlowKey::of(const PacketMeta& pkt) noexcept {
  Endpoint a{pkt.src_ip, pkt.src_port};
  Endpoint b{pkt.dst_ip, pkt.dst_port};
  if (b < a) std::swap(a, b);
  return FlowKey{pkt.proto, a, b};
}

FlowAssembler::FlowAssembler(double idle_timeout_seconds) {
  if (!(idle_timeout_seconds > 0.0)) throw std::invalid_argument("idle timeout must be positive");
  timeout_us_ = static_cast<TimestampUs>(std::llround(idle_timeout_seconds * 1e6));
}

void FlowAssembler::push(const PacketMeta& pkt) {
  const FlowKey key = FlowKey::of(pkt);
  auto it = open_.find(key);
  if (it != open_.end() && pkt.timestamp - it->second.flow.last_ts > timeout_us_) {
    closed_.push_back(std::move(it->second));
    open_.erase(it);
    it = open_.end();
  }
  if (it == open_.end()) {
    Tagged t{next_seq_++, FlowRecord{key, pkt.timestamp, pkt.timestamp, {pkt.length}, {}}};
    open_.emplace(key, std::move(t));
    return;
  }
  FlowRecord& f = it->second.flow;
  const TimestampUs gap = std::max<TimestampUs>(0, pkt.timestamp - f.last_ts);
  f.inter_arrival_ms.push_back(static_cast<double>(gap) / 1000.0);
  f.packet_lengths.push_back(pkt.length);
  f.last_ts = std::max(f.last_ts, pkt.timestamp);
}

void FlowAssembler::expire(TimestampUs now) {
  for (auto it = open_.begin(); it != open_.end();) {
    if (now - it->second.flow.last_ts > timeout_us_) {
      closed_.push_back(std::move(it->second));
      it = open_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<FlowRecord> FlowAssembler::take_closed() {
  std::sort(closed_.begin(), closed_.end(), [](const Tagged& a, const Tagged& b) {
    return a.flow.first_ts != b.flow.first_ts ? a.flow.first_ts < b.flow.first_ts : a.seq < b.seq;
  });
  std::vector<FlowRecord> out;
  out.reserve(closed_.size());
  for (auto& t : closed_) out.push_back(std::move(t.flow));
  closed_.clear();
  return out;
}

std::vector<FlowRecord> FlowAssembler::flush() {
  for (auto& [key, t] : open_) closed_.push_back(std::move(t));
  open_.clear();
  return take_closed();
}

std::vector<FlowRecord> assemble_flows(std::span<const PacketMeta> packets, double idle_timeout_seconds) {
  FlowAssembler assembler(idle_timeout_seconds);
  for (const auto& p : packets) assembler.push(p);
  return assembler.flush();
}

}  // namespace skyprobe
