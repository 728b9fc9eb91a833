#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "skyprobe/ipv4.hpp"
#include "skyprobe/siem_event.hpp"

namespace skyprobe {

// Address or port constraint; nullopt means ANY.
using AddrSpec = std::optional<Ipv4Addr>;
using PortSpec = std::optional<std::uint16_t>;

struct DirectiveRule {
  std::string type = "detector";
  std::string name;
  int reliability = 0;  // 0..10
  int occurrence = 1;   // >= 1
  AddrSpec from, to;
  PortSpec port_from, port_to;
  int plugin_id = 0;
  int plugin_sid = 0;
  std::vector<DirectiveRule> children;  // next level of the rule tree

  bool matches(const NormalizedEvent& ev) const noexcept;
  bool operator==(const DirectiveRule&) const = default;
};

struct Directive {
  int id = 0;
  std::string name;
  int priority = 0;  // 0..5
  std::vector<DirectiveRule> rules;  // first level of the rule tree
  bool operator==(const Directive&) const = default;
};

// Parses <directives><directive ...><rule .../></directive></directives> (a
// bare <directive> root is accepted too). Nested rules may sit directly in a
// <rule> or inside a <rules> wrapper. Both `port_form` and `port_from` are
// read. Throws DirectiveError on malformed XML, out-of-range values or
// duplicate ids.
std::vector<Directive> parse_directives(std::string_view xml);
std::vector<Directive> load_directives_file(const std::string& path);

// The shipped pair: 501 "Skype attach" (plugin 4059, reliability 3) and 502
// "Skype session detection" (plugin 4060, reliability 5), both priority 5.
std::string_view default_directives_xml() noexcept;
std::vector<Directive> default_directives();

// Host -> asset value (0..5). Text format, one entry per line:
//   default 3
//   192.168.1.200 3
class AssetTable {
 public:
  explicit AssetTable(int default_value = 3);

  int value_of(std::optional<Ipv4Addr> host) const noexcept;
  void set(Ipv4Addr host, int value);
  int default_value() const noexcept { return default_; }

  static AssetTable parse(std::string_view text);
  static AssetTable load_file(const std::string& path);

 private:
  int default_;
  std::unordered_map<Ipv4Addr, int> values_;
};

}  // namespace skyprobe
