#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "skyprobe/correlation.hpp"
#include "skyprobe/siem_event.hpp"

namespace skyprobe {

enum class RecordKind { Event, Alarm };
std::string_view to_string(RecordKind k) noexcept;

struct StoredRecord {
  std::uint64_t id = 0;
  RecordKind kind = RecordKind::Event;
  std::string data;  // compact JSON of the event or alarm
  bool operator==(const StoredRecord&) const = default;
};

// Append-only JSON-lines log, one {"id","kind","data"} object per line. Ids
// increase by one per record. Opening an existing file replays it; a torn
// final line (no newline) is cut off. Any write error puts the store in a
// failed state in which every further append throws StoreFailure.
class EventStore {
 public:
  explicit EventStore(std::string path, bool sync_events = false);
  ~EventStore();
  EventStore(const EventStore&) = delete;
  EventStore& operator=(const EventStore&) = delete;

  std::uint64_t append_event(const NormalizedEvent& ev);
  // Assigns alarm.id and fsyncs before returning.
  std::uint64_t append_alarm(Alarm& alarm);

  std::vector<StoredRecord> records() const;
  std::vector<NormalizedEvent> events() const;
  std::vector<Alarm> alarms() const;
  std::size_t size() const;
  std::uint64_t last_id() const;
  bool failed() const;
  // Bytes of torn tail dropped while opening.
  std::size_t recovered_bytes() const noexcept { return recovered_bytes_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::uint64_t append(RecordKind kind, const std::string& data, bool sync, Alarm* alarm);
  void replay();

  std::string path_;
  bool sync_events_;
  int fd_ = -1;
  mutable std::mutex mu_;
  std::vector<StoredRecord> records_;
  std::uint64_t next_id_ = 1;
  bool failed_ = false;
  std::size_t recovered_bytes_ = 0;
};

}  // namespace skyprobe
