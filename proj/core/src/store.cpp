#include "skyprobe/store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <nlohmann/json.hpp>

#include "skyprobe/errors.hpp"

namespace skyprobe {
namespace {

using json = nlohmann::json;

std::string record_line(std::uint64_t id, RecordKind kind, const std::string& data) {
  return "{\"id\":" + std::to_string(id) + ",\"kind\":\"" + std::string(to_string(kind)) + "\",\"data\":" + data +
         "}\n";
}

std::string with_id(const std::string& alarm_json, std::uint64_t id) {
  json j = json::parse(alarm_json);
  j["id"] = id;
  return j.dump();
}

}  // namespace

std::string_view to_string(RecordKind k) noexcept { return k == RecordKind::Event ? "event" : "alarm"; }

EventStore::EventStore(std::string path, bool sync_events) : path_(std::move(path)), sync_events_(sync_events) {
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw StoreFailure("cannot open store '" + path_ + "': " + std::strerror(errno));
  try {
    replay();
  } catch (...) {
    ::close(fd_);
    throw;
  }
}

EventStore::~EventStore() {
  if (fd_ >= 0) ::close(fd_);
}

void EventStore::replay() {
  std::string content;
  char buf[65536];
  if (::lseek(fd_, 0, SEEK_SET) < 0) throw StoreFailure("seek failed on '" + path_ + "'");
  for (;;) {
    const ssize_t n = ::read(fd_, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StoreFailure("read failed on '" + path_ + "': " + std::strerror(errno));
    }
    if (n == 0) break;
    content.append(buf, static_cast<std::size_t>(n));
  }
  const std::size_t complete = content.rfind('\n') == std::string::npos ? 0 : content.rfind('\n') + 1;
  if (complete < content.size()) {
    recovered_bytes_ = content.size() - complete;
    if (::ftruncate(fd_, static_cast<off_t>(complete)) != 0)
      throw StoreFailure("cannot truncate torn tail of '" + path_ + "'");
    content.resize(complete);
  }
  std::size_t pos = 0, line_no = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    const std::string_view line(content.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      StoredRecord r;
      r.id = j.at("id").get<std::uint64_t>();
      const std::string kind = j.at("kind").get<std::string>();
      if (kind != "event" && kind != "alarm") throw StoreFailure("unknown record kind '" + kind + "'");
      r.kind = kind == "event" ? RecordKind::Event : RecordKind::Alarm;
      r.data = j.at("data").dump();
      if (!records_.empty() && r.id <= records_.back().id) throw StoreFailure("record ids not increasing");
      records_.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw StoreFailure("corrupt store '" + path_ + "' line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  next_id_ = records_.empty() ? 1 : records_.back().id + 1;
}

std::uint64_t EventStore::append(RecordKind kind, const std::string& data, bool sync, Alarm* alarm) {
  std::lock_guard lock(mu_);
  if (failed_) throw StoreFailure("store '" + path_ + "' is in a failed state");
  const std::uint64_t id = next_id_;
  const std::string payload = alarm ? with_id(data, id) : data;
  const std::string line = record_line(id, kind, payload);
  std::size_t off = 0;
  while (off < line.size()) {
    const ssize_t n = ::write(fd_, line.data() + off, line.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      failed_ = true;
      throw StoreFailure("write to '" + path_ + "' failed: " + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
  if (sync && ::fsync(fd_) != 0) {
    failed_ = true;
    throw StoreFailure("fsync of '" + path_ + "' failed: " + std::strerror(errno));
  }
  if (alarm) alarm->id = id;
  records_.push_back({id, kind, payload});
  ++next_id_;
  return id;
}

std::uint64_t EventStore::append_event(const NormalizedEvent& ev) {
  return append(RecordKind::Event, event_to_json(ev), sync_events_, nullptr);
}

std::uint64_t EventStore::append_alarm(Alarm& alarm) {
  return append(RecordKind::Alarm, alarm_to_json(alarm), true, &alarm);
}

std::vector<StoredRecord> EventStore::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::vector<NormalizedEvent> EventStore::events() const {
  std::vector<NormalizedEvent> out;
  for (const auto& r : records())
    if (r.kind == RecordKind::Event) out.push_back(event_from_json(r.data));
  return out;
}

std::vector<Alarm> EventStore::alarms() const {
  std::vector<Alarm> out;
  for (const auto& r : records())
    if (r.kind == RecordKind::Alarm) out.push_back(alarm_from_json(r.data));
  return out;
}

std::size_t EventStore::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::uint64_t EventStore::last_id() const {
  std::lock_guard lock(mu_);
  return next_id_ - 1;
}

bool EventStore::failed() const {
  std::lock_guard lock(mu_);
  return failed_;
}

}  // namespace skyprobe
