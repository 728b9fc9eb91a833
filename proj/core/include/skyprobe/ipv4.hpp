#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace skyprobe {

// IPv4 address in host byte order.
class Ipv4Addr {
 public:
  constexpr Ipv4Addr() = default;
  constexpr explicit Ipv4Addr(std::uint32_t value) : value_(value) {}
  constexpr Ipv4Addr(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) |
               std::uint32_t{d}) {}

  constexpr std::uint32_t value() const noexcept { return value_; }

  // Strict dotted-quad parse; no leading/trailing junk, each octet 0-255.
  static std::optional<Ipv4Addr> parse(std::string_view text);
  // Like parse() but throws InvalidAddress.
  static Ipv4Addr from_string(std::string_view text);

  std::string to_string() const;

  constexpr auto operator<=>(const Ipv4Addr&) const = default;

 private:
  std::uint32_t value_ = 0;
};

}  // namespace skyprobe

template <>
struct std::hash<skyprobe::Ipv4Addr> {
  std::size_t operator()(const skyprobe::Ipv4Addr& a) const noexcept {
    return std::hash<std::uint32_t>{}(a.value());
  }
};
