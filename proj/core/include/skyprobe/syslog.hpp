#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skyprobe/packet.hpp"

namespace skyprobe {

// Fixed-offset zone used to render local times. The abbreviation is printed
// verbatim in syslog datetimes.
struct TimeZone {
  std::string name = "UTC";
  int offset_seconds = 0;

  static TimeZone utc() { return {}; }
  // Zone of the running process (TZ / system setting) at `at`.
  static TimeZone local(TimestampUs at);
  // "UTC", a known abbreviation such as "CET", or "NAME+HH[:MM]" / "NAME-HH[:MM]".
  static std::optional<TimeZone> parse(std::string_view text);

  bool operator==(const TimeZone&) const = default;
};

// Offset for a well-known zone abbreviation (UTC, GMT, CET, CEST, EST, ...).
std::optional<int> zone_offset(std::string_view abbreviation);

// "Mon Jan 30 19:25:23 CET 2017"
std::string format_syslog_datetime(TimestampUs ts, const TimeZone& tz);
// "19:25:23"
std::string format_hms(TimestampUs ts, const TimeZone& tz);

// Civil datetime as printed in a syslog line. `day` is 0 when the line omits
// the day of month.
struct SyslogDate {
  int year = 1970, month = 1, day = 1, hour = 0, minute = 0, second = 0;
  std::string zone;
  std::string to_string() const;
  bool operator==(const SyslogDate&) const = default;
};

// Finds and parses the first "EEE MMM dd HH:mm:ss zzz yyyy" in `line`,
// tolerating a missing day of month.
std::optional<SyslogDate> parse_syslog_datetime(std::string_view line);

// Destination of emitted syslog lines.
class SyslogSink {
 public:
  virtual ~SyslogSink() = default;
  virtual void emit(std::string_view line) = 0;
};

class MemorySyslogSink final : public SyslogSink {
 public:
  void emit(std::string_view line) override;
  std::vector<std::string> lines() const;
  std::vector<std::string> take();

 private:
  mutable std::mutex mu_;
  std::vector<std::string> lines_;
};

// Appends one line per message and flushes.
class FileSyslogSink final : public SyslogSink {
 public:
  explicit FileSyslogSink(std::string path);
  ~FileSyslogSink() override;
  void emit(std::string_view line) override;

 private:
  std::mutex mu_;
  std::string path_;
  int fd_ = -1;
};

// One datagram per message.
class UdpSyslogSink final : public SyslogSink {
 public:
  UdpSyslogSink(const std::string& host, std::uint16_t port = 514);
  ~UdpSyslogSink() override;
  void emit(std::string_view line) override;

 private:
  int fd_ = -1;
};

// "file:<path>", "udp:<host>[:<port>]"; a bare path means file.
std::unique_ptr<SyslogSink> make_syslog_sink(std::string_view spec);

}  // namespace skyprobe
