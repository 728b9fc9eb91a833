#include "skyprobe/pcap.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

constexpr std::uint32_t kMagicMicro = 0xa1b2c3d4;
constexpr std::uint32_t kMagicNano = 0xa1b23c4d;
constexpr std::size_t kGlobalHeaderSize = 24;
constexpr std::size_t kRecordHeaderSize = 16;
constexpr std::uint32_t kLinuxSll = 113;

std::uint16_t be16(const std::uint8_t* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

std::uint32_t le32(const std::uint8_t* p) {
  return (std::uint32_t{p[3]} << 24) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[1]} << 8) |
         std::uint32_t{p[0]};
}

void put16be(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put16be(out, static_cast<std::uint16_t>(v >> 16));
  put16be(out, static_cast<std::uint16_t>(v));
}

void put16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put16le(out, static_cast<std::uint16_t>(v));
  put16le(out, static_cast<std::uint16_t>(v >> 16));
}

std::uint16_t ip_checksum(const std::uint8_t* hdr, std::size_t len) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i + 1 < len; i += 2) sum += be16(hdr + i);
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

}  // namespace

std::string_view to_string(Proto p) noexcept { return p == Proto::Tcp ? "TCP" : "UDP"; }

bool PcapStreamDecoder::parse_global_header() {
  const std::size_t avail = buffer_.size() - consumed_;
  if (avail < kGlobalHeaderSize) return false;
  const std::uint8_t* h = buffer_.data() + consumed_;
  const std::uint32_t magic_le = le32(h);
  const std::uint32_t magic_be = be32(h);
  if (magic_le == kMagicMicro || magic_le == kMagicNano) {
    swapped_ = false;
    nanosecond_ = magic_le == kMagicNano;
  } else if (magic_be == kMagicMicro || magic_be == kMagicNano) {
    swapped_ = true;
    nanosecond_ = magic_be == kMagicNano;
  } else {
    throw MalformedCapture("bad pcap magic");
  }
  raw_link_type_ = swapped_ ? be32(h + 20) : le32(h + 20);
  switch (raw_link_type_) {
    case 1: link_type_ = LinkType::Ethernet; break;
    case 101: link_type_ = LinkType::Raw; break;
    case 228: link_type_ = LinkType::Ipv4; break;
    default: link_type_.reset(); break;
  }
  consumed_ += kGlobalHeaderSize;
  header_done_ = true;
  return true;
}

std::vector<PacketMeta> PcapStreamDecoder::feed(std::span<const std::uint8_t> chunk) {
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
  std::vector<PacketMeta> out;
  if (!header_done_ && !parse_global_header()) return out;

  auto rd32 = [this](const std::uint8_t* p) { return swapped_ ? be32(p) : le32(p); };
  while (buffer_.size() - consumed_ >= kRecordHeaderSize) {
    const std::uint8_t* rec = buffer_.data() + consumed_;
    const std::uint32_t ts_sec = rd32(rec);
    const std::uint32_t ts_frac = rd32(rec + 4);
    const std::uint32_t incl_len = rd32(rec + 8);
    if (buffer_.size() - consumed_ - kRecordHeaderSize < incl_len) break;
    const TimestampUs ts =
        TimestampUs{ts_sec} * 1'000'000 + (nanosecond_ ? ts_frac / 1000 : ts_frac);
    auto pkt = decode_record({rec + kRecordHeaderSize, incl_len}, ts);
    if (pkt) {
      out.push_back(std::move(*pkt));
    } else {
      ++skipped_;
    }
    consumed_ += kRecordHeaderSize + incl_len;
  }
  if (consumed_ > 0 && consumed_ * 2 >= buffer_.size()) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(consumed_));
    consumed_ = 0;
  }
  return out;
}

void PcapStreamDecoder::finish() {
  if (!header_done_) throw MalformedCapture("truncated pcap global header");
  if (buffer_.size() > consumed_) {
    ++skipped_;
    buffer_.clear();
    consumed_ = 0;
  }
}

std::optional<PacketMeta> PcapStreamDecoder::decode_record(std::span<const std::uint8_t> data,
                                                           TimestampUs ts) {
  std::size_t off = 0;
  if (link_type_ == LinkType::Ethernet) {
    if (data.size() < 14) return std::nullopt;
    std::uint16_t ethertype = be16(data.data() + 12);
    off = 14;
    if (ethertype == 0x8100) {
      if (data.size() < 18) return std::nullopt;
      ethertype = be16(data.data() + 16);
      off = 18;
    }
    if (ethertype != 0x0800) return std::nullopt;
  } else if (link_type_ == LinkType::Raw || link_type_ == LinkType::Ipv4) {
    off = 0;
  } else if (raw_link_type_ == kLinuxSll) {
    if (data.size() < 16 || be16(data.data() + 14) != 0x0800) return std::nullopt;
    off = 16;
  } else {
    return std::nullopt;
  }

  const std::span<const std::uint8_t> ip = data.subspan(off);
  if (ip.size() < 20 || (ip[0] >> 4) != 4) return std::nullopt;
  const std::size_t ihl = std::size_t{ip[0] & 0x0fu} * 4;
  if (ihl < 20 || ip.size() < ihl) return std::nullopt;
  const std::uint16_t total_len = be16(ip.data() + 2);
  const std::uint16_t frag = be16(ip.data() + 6);
  if ((frag & 0x1fff) != 0) return std::nullopt;  // non-first fragment: no transport header

  PacketMeta pkt;
  pkt.timestamp = ts;
  pkt.src_ip = Ipv4Addr{be32(ip.data() + 12)};
  pkt.dst_ip = Ipv4Addr{be32(ip.data() + 16)};
  pkt.length = total_len;

  std::size_t th = 0;
  const std::span<const std::uint8_t> l4 = ip.subspan(ihl);
  if (ip[9] == 6) {
    if (l4.size() < 20) return std::nullopt;
    th = std::size_t{static_cast<std::uint8_t>(l4[12] >> 4)} * 4;
    if (th < 20 || l4.size() < th) return std::nullopt;
    pkt.proto = Proto::Tcp;
  } else if (ip[9] == 17) {
    if (l4.size() < 8) return std::nullopt;
    th = 8;
    pkt.proto = Proto::Udp;
  } else {
    return std::nullopt;
  }
  if (total_len < ihl + th) return std::nullopt;
  pkt.src_port = be16(l4.data());
  pkt.dst_port = be16(l4.data() + 2);

  const std::size_t ip_end = std::min<std::size_t>(total_len, ip.size());
  if (ip_end > ihl + th) {
    auto first = ip.begin() + static_cast<std::ptrdiff_t>(ihl + th);
    pkt.payload.assign(first, ip.begin() + static_cast<std::ptrdiff_t>(ip_end));
  }
  return pkt;
}

DecodedCapture decode_capture(std::span<const std::uint8_t> bytes) {
  PcapStreamDecoder dec;
  DecodedCapture out;
  out.packets = dec.feed(bytes);
  dec.finish();
  out.skipped = dec.skipped();
  out.link_type = dec.link_type().value_or(LinkType::Ethernet);
  return out;
}

DecodedCapture read_capture_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedCapture("cannot open capture '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_capture(bytes);
}

std::vector<std::uint8_t> encode_capture(std::span<const PacketMeta> packets, LinkType link) {
  std::vector<std::uint8_t> out;
  put32le(out, kMagicMicro);
  put16le(out, 2);
  put16le(out, 4);
  put32le(out, 0);
  put32le(out, 0);
  put32le(out, 65535);
  put32le(out, static_cast<std::uint32_t>(link));

  std::vector<std::uint8_t> frame;
  for (const PacketMeta& p : packets) {
    const std::uint32_t hdr = header_bytes(p.proto);
    if (p.length < hdr + p.payload.size() || p.length > 0xffff)
      throw std::invalid_argument("packet length does not fit headers and payload");
    frame.clear();
    if (link == LinkType::Ethernet) {
      const std::uint8_t macs[12] = {0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 1};
      frame.insert(frame.end(), std::begin(macs), std::end(macs));
      put16be(frame, 0x0800);
    }
    const std::size_t ip_off = frame.size();
    frame.push_back(0x45);
    frame.push_back(0);
    put16be(frame, static_cast<std::uint16_t>(p.length));
    put16be(frame, 0);
    put16be(frame, 0x4000);
    frame.push_back(64);
    frame.push_back(static_cast<std::uint8_t>(p.proto));
    put16be(frame, 0);
    put32be(frame, p.src_ip.value());
    put32be(frame, p.dst_ip.value());
    const std::uint16_t csum = ip_checksum(frame.data() + ip_off, 20);
    frame[ip_off + 10] = static_cast<std::uint8_t>(csum >> 8);
    frame[ip_off + 11] = static_cast<std::uint8_t>(csum);

    put16be(frame, p.src_port);
    put16be(frame, p.dst_port);
    if (p.proto == Proto::Tcp) {
      put32be(frame, 0);
      put32be(frame, 0);
      frame.push_back(0x50);
      frame.push_back(0x18);
      put16be(frame, 0xffff);
      put16be(frame, 0);
      put16be(frame, 0);
    } else {
      put16be(frame, static_cast<std::uint16_t>(p.length - 20));
      put16be(frame, 0);
    }
    frame.insert(frame.end(), p.payload.begin(), p.payload.end());
    frame.resize(ip_off + p.length, 0);

    const auto sec = static_cast<std::uint32_t>(p.timestamp / 1'000'000);
    const auto usec = static_cast<std::uint32_t>(p.timestamp % 1'000'000);
    put32le(out, sec);
    put32le(out, usec);
    put32le(out, static_cast<std::uint32_t>(frame.size()));
    put32le(out, static_cast<std::uint32_t>(frame.size()));
    out.insert(out.end(), frame.begin(), frame.end());
  }
  return out;
}

void write_capture_file(const std::string& path, std::span<const PacketMeta> packets, LinkType link) {
  const auto bytes = encode_capture(packets, link);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write capture '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace skyprobe
