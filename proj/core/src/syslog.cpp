#include "skyprobe/syslog.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <regex>
#include <stdexcept>
#include <utility>

namespace skyprobe {
namespace {

struct KnownZone {
  std::string_view name;
  int offset;
};

constexpr std::array<KnownZone, 18> kZones = {{
    {"UTC", 0},         {"GMT", 0},          {"Z", 0},           {"WET", 0},
    {"WEST", 3600},     {"CET", 3600},       {"CEST", 7200},     {"EET", 7200},
    {"EEST", 10800},    {"MSK", 10800},      {"EST", -18000},    {"EDT", -14400},
    {"CST", -21600},    {"CDT", -18000},     {"MST", -25200},    {"MDT", -21600},
    {"PST", -28800},    {"PDT", -25200},
}};

std::tm civil(TimestampUs ts, const TimeZone& tz) {
  std::time_t secs = static_cast<std::time_t>(ts / 1'000'000) + tz.offset_seconds;
  if (ts < 0 && ts % 1'000'000 != 0) --secs;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  return tm;
}

constexpr std::array<std::string_view, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

int to_int(const std::string& s) {
  int v = 0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

}  // namespace

std::optional<int> zone_offset(std::string_view abbreviation) {
  for (const auto& z : kZones)
    if (z.name == abbreviation) return z.offset;
  return std::nullopt;
}

TimeZone TimeZone::local(TimestampUs at) {
  std::time_t secs = static_cast<std::time_t>(at / 1'000'000);
  std::tm tm{};
  localtime_r(&secs, &tm);
  return TimeZone{tm.tm_zone ? tm.tm_zone : "UTC", static_cast<int>(tm.tm_gmtoff)};
}

std::optional<TimeZone> TimeZone::parse(std::string_view text) {
  const std::size_t sign = text.find_first_of("+-");
  if (sign == std::string_view::npos) {
    if (auto off = zone_offset(text)) return TimeZone{std::string(text), *off};
    return std::nullopt;
  }
  const std::string_view name = text.substr(0, sign);
  std::string_view rest = text.substr(sign + 1);
  if (name.empty() || rest.empty()) return std::nullopt;
  int hours = 0, minutes = 0;
  const std::size_t colon = rest.find(':');
  const std::string_view hh = rest.substr(0, colon);
  auto r1 = std::from_chars(hh.data(), hh.data() + hh.size(), hours);
  if (r1.ec != std::errc{} || r1.ptr != hh.data() + hh.size() || hours > 14) return std::nullopt;
  if (colon != std::string_view::npos) {
    const std::string_view mm = rest.substr(colon + 1);
    auto r2 = std::from_chars(mm.data(), mm.data() + mm.size(), minutes);
    if (r2.ec != std::errc{} || r2.ptr != mm.data() + mm.size() || minutes > 59) return std::nullopt;
  }
  const int off = (hours * 3600 + minutes * 60) * (text[sign] == '-' ? -1 : 1);
  return TimeZone{std::string(name), off};
}

std::string format_syslog_datetime(TimestampUs ts, const TimeZone& tz) {
  const std::tm tm = civil(ts, tz);
  char buf[64];
  std::strftime(buf, sizeof buf, "%a %b %d %H:%M:%S", &tm);
  return std::string(buf) + ' ' + tz.name + ' ' + std::to_string(tm.tm_year + 1900);
}

std::string format_hms(TimestampUs ts, const TimeZone& tz) {
  const std::tm tm = civil(ts, tz);
  char buf[16];
  std::strftime(buf, sizeof buf, "%H:%M:%S", &tm);
  return buf;
}

std::string SyslogDate::to_string() const {
  char buf[64];
  if (day > 0)
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d", year, month, day, hour, minute, second);
  else
    std::snprintf(buf, sizeof buf, "%04d-%02d %02d:%02d:%02d", year, month, hour, minute, second);
  return zone.empty() ? std::string(buf) : std::string(buf) + ' ' + zone;
}

std::optional<SyslogDate> parse_syslog_datetime(std::string_view line) {
  static const std::regex re(
      R"((Mon|Tue|Wed|Thu|Fri|Sat|Sun) (Jan|Feb|Mar|Apr|May|Jun|Jul|Aug|Sep|Oct|Nov|Dec) +(?:(\d{1,2}) +)?(\d{2}):(\d{2}):(\d{2}) +([A-Za-z]+(?:[+-]\d{1,2}(?::\d{2})?)?) +(\d{4}))");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(line.begin(), line.end(), m, re)) return std::nullopt;
  SyslogDate d;
  for (std::size_t i = 0; i < kMonths.size(); ++i)
    if (kMonths[i] == m[2].str()) d.month = static_cast<int>(i) + 1;
  d.day = m[3].matched ? to_int(m[3].str()) : 0;
  d.hour = to_int(m[4].str());
  d.minute = to_int(m[5].str());
  d.second = to_int(m[6].str());
  d.zone = m[7].str();
  d.year = to_int(m[8].str());
  if (d.day > 31 || d.hour > 23 || d.minute > 59 || d.second > 60) return std::nullopt;
  return d;
}

void MemorySyslogSink::emit(std::string_view line) {
  std::lock_guard lock(mu_);
  lines_.emplace_back(line);
}

std::vector<std::string> MemorySyslogSink::lines() const {
  std::lock_guard lock(mu_);
  return lines_;
}

std::vector<std::string> MemorySyslogSink::take() {
  std::lock_guard lock(mu_);
  return std::exchange(lines_, {});
}

FileSyslogSink::FileSyslogSink(std::string path) : path_(std::move(path)) {
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw std::runtime_error("cannot open syslog file '" + path_ + "': " + std::strerror(errno));
}

FileSyslogSink::~FileSyslogSink() {
  if (fd_ >= 0) ::close(fd_);
}

void FileSyslogSink::emit(std::string_view line) {
  std::string buf(line);
  buf += '\n';
  std::lock_guard lock(mu_);
  std::size_t off = 0;
  while (off < buf.size()) {
    const ssize_t n = ::write(fd_, buf.data() + off, buf.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("syslog write failed: " + std::string(std::strerror(errno)));
    }
    off += static_cast<std::size_t>(n);
  }
}

UdpSyslogSink::UdpSyslogSink(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || !res)
    throw std::runtime_error("cannot resolve syslog host '" + host + "'");
  fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0 || ::connect(fd_, res->ai_addr, res->ai_addrlen) != 0) {
    ::freeaddrinfo(res);
    if (fd_ >= 0) ::close(fd_);
    throw std::runtime_error("cannot open UDP syslog socket: " + std::string(std::strerror(errno)));
  }
  ::freeaddrinfo(res);
}

UdpSyslogSink::~UdpSyslogSink() {
  if (fd_ >= 0) ::close(fd_);
}

void UdpSyslogSink::emit(std::string_view line) {
  if (::send(fd_, line.data(), line.size(), 0) < 0 && errno != ECONNREFUSED)
    throw std::runtime_error("syslog send failed: " + std::string(std::strerror(errno)));
}

std::unique_ptr<SyslogSink> make_syslog_sink(std::string_view spec) {
  if (spec.starts_with("udp:")) {
    std::string_view rest = spec.substr(4);
    std::uint16_t port = 514;
    const std::size_t colon = rest.rfind(':');
    if (colon != std::string_view::npos) {
      const std::string_view p = rest.substr(colon + 1);
      if (std::from_chars(p.data(), p.data() + p.size(), port).ec != std::errc{})
        throw std::invalid_argument("bad syslog port in '" + std::string(spec) + "'");
      rest = rest.substr(0, colon);
    }
    return std::make_unique<UdpSyslogSink>(std::string(rest), port);
  }
  if (spec.starts_with("file:")) spec.remove_prefix(5);
  return std::make_unique<FileSyslogSink>(std::string(spec));
}

}  // namespace skyprobe
