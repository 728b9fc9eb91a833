#include "skyprobe/ipv4.hpp"

#include <charconv>

#include "skyprobe/errors.hpp"

namespace skyprobe {

std::optional<Ipv4Addr> Ipv4Addr::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
    if (p == end || *p < '0' || *p > '9') return std::nullopt;
    unsigned part = 0;
    auto [next, ec] = std::from_chars(p, end, part);
    if (ec != std::errc{} || part > 255 || next - p > 3) return std::nullopt;
    p = next;
    value = (value << 8) | part;
  }
  if (p != end) return std::nullopt;
  return Ipv4Addr{value};
}

Ipv4Addr Ipv4Addr::from_string(std::string_view text) {
  if (auto a = parse(text)) return *a;
  throw InvalidAddress("invalid IPv4 address: '" + std::string(text) + "'");
}

std::string Ipv4Addr::to_string() const {
  return std::to_string(value_ >> 24) + '.' + std::to_string((value_ >> 16) & 0xff) + '.' +
         std::to_string((value_ >> 8) & 0xff) + '.' + std::to_string(value_ & 0xff);
}

}  // namespace skyprobe
