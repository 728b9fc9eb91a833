#include "skyprobe/directive.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

namespace pt = boost::property_tree;

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || end != s.data() + s.size())
    throw DirectiveError("bad " + what + " '" + s + "'");
  return v;
}

std::optional<std::string> attr(const pt::ptree& node, const char* name) {
  if (auto a = node.get_child_optional(std::string("<xmlattr>.") + name)) return a->data();
  return std::nullopt;
}

std::string require(const pt::ptree& node, const char* name, const std::string& where) {
  auto v = attr(node, name);
  if (!v) throw DirectiveError(where + ": missing attribute '" + name + "'");
  return *v;
}

int ranged(const std::string& s, const std::string& what, int lo, int hi) {
  const int v = parse_int(s, what);
  if (v < lo || v > hi)
    throw DirectiveError(what + " " + s + " outside [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
  return v;
}

AddrSpec addr_spec(const std::optional<std::string>& s, const std::string& what) {
  if (!s || *s == "ANY" || s->empty()) return std::nullopt;
  auto a = Ipv4Addr::parse(*s);
  if (!a) throw DirectiveError("bad " + what + " '" + *s + "'");
  return a;
}

PortSpec port_spec(const std::optional<std::string>& s, const std::string& what) {
  if (!s || *s == "ANY" || s->empty()) return std::nullopt;
  return static_cast<std::uint16_t>(ranged(*s, what, 0, 65535));
}

void collect_rules(const pt::ptree& parent, std::vector<DirectiveRule>& out, const std::string& where);

DirectiveRule parse_rule(const pt::ptree& node, const std::string& where) {
  DirectiveRule r;
  r.type = attr(node, "type").value_or("detector");
  r.name = attr(node, "name").value_or("");
  const std::string here = where + " rule '" + r.name + "'";
  r.reliability = ranged(require(node, "reliability", here), "reliability", 0, 10);
  r.occurrence = ranged(attr(node, "occurrence").value_or("1"), "occurrence", 1, 1'000'000);
  r.from = addr_spec(attr(node, "from"), "from");
  r.to = addr_spec(attr(node, "to"), "to");
  auto pf = attr(node, "port_form");
  if (!pf) pf = attr(node, "port_from");
  r.port_from = port_spec(pf, "port_from");
  r.port_to = port_spec(attr(node, "port_to"), "port_to");
  r.plugin_id = parse_int(require(node, "plugin_id", here), "plugin_id");
  r.plugin_sid = parse_int(require(node, "plugin_sid", here), "plugin_sid");
  collect_rules(node, r.children, here);
  return r;
}

void collect_rules(const pt::ptree& parent, std::vector<DirectiveRule>& out, const std::string& where) {
  for (const auto& [tag, child] : parent) {
    if (tag == "rule")
      out.push_back(parse_rule(child, where));
    else if (tag == "rules")
      collect_rules(child, out, where);
  }
}

Directive parse_directive(const pt::ptree& node) {
  Directive d;
  d.id = parse_int(require(node, "id", "directive"), "directive id");
  const std::string where = "directive " + std::to_string(d.id);
  d.name = attr(node, "name").value_or("");
  d.priority = ranged(require(node, "priority", where), "priority", 0, 5);
  collect_rules(node, d.rules, where);
  if (d.rules.empty()) throw DirectiveError(where + " has no rules");
  return d;
}

constexpr std::string_view kDefaultDirectives = R"(<directives>
  <directive id="501" name="Skype attach" priority="5">
    <rule type="detector" name="attach discovery" reliability="3" occurrence="1"
          from="ANY" to="ANY" port_form="ANY" port_to="ANY" plugin_id="4059" plugin_sid="1"/>
  </directive>
  <directive id="502" name="Skype session detection" priority="5">
    <rule type="detector" name="Skype session detected" reliability="5" occurrence="1"
          from="ANY" to="ANY" port_form="ANY" port_to="ANY" plugin_id="4060" plugin_sid="1"/>
  </directive>
</directives>
)";

}  // namespace

std::string_view default_directives_xml() noexcept { return kDefaultDirectives; }

std::vector<Directive> default_directives() { return parse_directives(kDefaultDirectives); }

bool DirectiveRule::matches(const NormalizedEvent& ev) const noexcept {
  if (ev.plugin_id != plugin_id || ev.plugin_sid != plugin_sid) return false;
  if (from && ev.src_ip != from) return false;
  if (to && ev.dst_ip != to) return false;
  if (port_from && ev.src_port != port_from) return false;
  if (port_to && ev.dst_port != port_to) return false;
  return true;
}

std::vector<Directive> parse_directives(std::string_view xml) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw DirectiveError(std::string("directive XML: ") + e.what());
  }
  std::vector<Directive> out;
  try {
    for (const auto& [tag, node] : tree) {
      if (tag == "directive") {
        out.push_back(parse_directive(node));
      } else if (tag == "directives") {
        for (const auto& [inner, d] : node)
          if (inner == "directive") out.push_back(parse_directive(d));
      }
    }
  } catch (const pt::ptree_error& e) {
    throw DirectiveError(std::string("directive XML: ") + e.what());
  }
  if (out.empty()) throw DirectiveError("no directives found");
  std::set<int> ids;
  for (const auto& d : out)
    if (!ids.insert(d.id).second) throw DirectiveError("duplicate directive id " + std::to_string(d.id));
  return out;
}

std::vector<Directive> load_directives_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DirectiveError("cannot open directive file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_directives(ss.str());
}

AssetTable::AssetTable(int default_value) : default_(default_value) {
  if (default_value < 0 || default_value > 5) throw OutOfRange("asset value outside [0,5]");
}

int AssetTable::value_of(std::optional<Ipv4Addr> host) const noexcept {
  if (host) {
    auto it = values_.find(*host);
    if (it != values_.end()) return it->second;
  }
  return default_;
}

void AssetTable::set(Ipv4Addr host, int value) {
  if (value < 0 || value > 5) throw OutOfRange("asset value outside [0,5]");
  values_[host] = value;
}

AssetTable AssetTable::parse(std::string_view text) {
  AssetTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string key, value, extra;
    if (!(fields >> key)) continue;
    if (!(fields >> value) || (fields >> extra))
      throw DirectiveError("asset table line " + std::to_string(line_no) + ": expected '<ip> <value>'");
    const int v = ranged(value, "asset value", 0, 5);
    if (key == "default") {
      table.default_ = v;
    } else {
      auto ip = Ipv4Addr::parse(key);
      if (!ip) throw DirectiveError("asset table line " + std::to_string(line_no) + ": bad address '" + key + "'");
      table.values_[*ip] = v;
    }
  }
  return table;
}

AssetTable AssetTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DirectiveError("cannot open asset table '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace skyprobe
