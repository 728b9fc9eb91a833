#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skyprobe/packet.hpp"

namespace skyprobe {

enum class LinkType : std::uint32_t { Ethernet = 1, Raw = 101, Ipv4 = 228 };

struct DecodedCapture {
  std::vector<PacketMeta> packets;
  std::size_t skipped = 0;  // non-IPv4, non-TCP/UDP, or truncated records
  LinkType link_type = LinkType::Ethernet;
};

// Incremental pcap reader. Bytes may arrive in arbitrary chunks; the packets
// produced are the same as decoding the concatenated stream in one go.
class PcapStreamDecoder {
 public:
  // Returns the packets completed by this chunk. Throws MalformedCapture if
  // the global header turns out to be invalid.
  std::vector<PacketMeta> feed(std::span<const std::uint8_t> chunk);

  // Signals end of stream. A partial trailing record counts as skipped; a
  // stream too short to hold the global header is malformed.
  void finish();

  std::size_t skipped() const noexcept { return skipped_; }
  std::optional<LinkType> link_type() const noexcept { return link_type_; }

 private:
  bool parse_global_header();
  std::optional<PacketMeta> decode_record(std::span<const std::uint8_t> data, TimestampUs ts);

  std::vector<std::uint8_t> buffer_;
  std::size_t consumed_ = 0;
  bool header_done_ = false;
  bool swapped_ = false;
  bool nanosecond_ = false;
  std::optional<LinkType> link_type_;
  std::uint32_t raw_link_type_ = 0;
  std::size_t skipped_ = 0;
};

// Decodes a whole capture held in memory.
DecodedCapture decode_capture(std::span<const std::uint8_t> bytes);
DecodedCapture read_capture_file(const std::string& path);

// Serializes packets as a little-endian microsecond pcap with the given link
// type. Payload bytes are written after the transport header; if the packet's
// IP length exceeds headers + payload the remainder is zero-filled.
std::vector<std::uint8_t> encode_capture(std::span<const PacketMeta> packets,
                                         LinkType link = LinkType::Ethernet);
void write_capture_file(const std::string& path, std::span<const PacketMeta> packets,
                        LinkType link = LinkType::Ethernet);

}  // namespace skyprobe
