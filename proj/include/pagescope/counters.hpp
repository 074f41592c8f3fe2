#pragma once

// Region-scoped hardware counter collection.
//
// A CounterSession reads a fixed event set from either the Linux perf_event
// interface or a deterministic simulated backend. A RegionCollector owns a
// session and attributes counter deltas to named, nestable regions. Parent
// regions are inclusive: their totals contain everything their children saw.
//
// Sessions and collectors belong to one thread at a time. Finished
// RegionRecords are plain values and can be merged anywhere.

#include <array>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <linux/perf_event.h>
#include <sys/syscall.h>
#include <unistd.h>

#include "pagescope/error.hpp"
#include "pagescope/events.hpp"

namespace pagescope {

struct CounterSample {
  std::array<std::uint64_t, kEventCount> values{};
  std::int64_t timestamp_ns = 0;

  [[nodiscard]] std::uint64_t operator[](EventId id) const noexcept { return values[index_of(id)]; }
};

struct RegionRecord {
  std::string name;
  std::uint64_t region_count = 0;
  std::map<EventId, std::uint64_t> totals;

  void merge(const RegionRecord& other) {
    region_count += other.region_count;
    for (const auto& [id, value] : other.totals) totals[id] += value;
  }

  [[nodiscard]] std::optional<std::uint64_t> total(EventId id) const {
    auto it = totals.find(id);
    if (it == totals.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const RegionRecord&, const RegionRecord&) = default;
};

// Deterministic backend: after N reads every event reads N * increment.
// Events without an entry stay at zero.
struct SimulatedBackend {
  std::map<EventId, std::uint64_t> increments;
  std::int64_t tick_ns = 1'000'000;
};

// Returns an fd (>= 0) or -errno. Injectable so error paths can be tested
// on hosts that do have counter access.
using PerfOpener = std::function<int(const perf_event_attr&)>;

inline int default_perf_opener(const perf_event_attr& attr) {
  perf_event_attr copy = attr;
  long fd = ::syscall(SYS_perf_event_open, &copy, 0 /* self */, -1 /* any cpu */, -1 /* no group */,
                      PERF_FLAG_FD_CLOEXEC);
  if (fd < 0) return -errno;
  return static_cast<int>(fd);
}

struct RealOsBackend {
  PerfOpener opener = default_perf_opener;
  // Children forked after the session opens are counted too, which is how
  // whole-process counts for external commands are gathered.
  bool inherit = false;
  bool exclude_kernel = true;
};

using CounterBackend = std::variant<RealOsBackend, SimulatedBackend>;

// perf_event_attr for one event, or nullopt when the event has no encoding
// on this architecture.
inline std::optional<perf_event_attr> perf_attr_for(EventId id) {
  perf_event_attr attr{};
  attr.size = sizeof(attr);
  switch (id) {
    case EventId::CpuCycles:
      attr.type = PERF_TYPE_HARDWARE;
      attr.config = PERF_COUNT_HW_CPU_CYCLES;
      break;
    case EventId::CacheMisses:
      attr.type = PERF_TYPE_HARDWARE;
      attr.config = PERF_COUNT_HW_CACHE_MISSES;
      break;
    case EventId::DtlbLoadMisses:
      attr.type = PERF_TYPE_HW_CACHE;
      attr.config = PERF_COUNT_HW_CACHE_DTLB | (PERF_COUNT_HW_CACHE_OP_READ << 8) |
                    (PERF_COUNT_HW_CACHE_RESULT_MISS << 16);
      break;
    case EventId::SveInstRetired:
#if defined(__aarch64__)
      attr.type = PERF_TYPE_RAW;
      attr.config = 0x8002;  // SVE_INST_RETIRED, Armv8.2 common event
      break;
#else
      return std::nullopt;
#endif
    case EventId::StalledCyclesBackend:
      attr.type = PERF_TYPE_HARDWARE;
      attr.config = PERF_COUNT_HW_STALLED_CYCLES_BACKEND;
      break;
    case EventId::StalledCyclesFrontend:
      attr.type = PERF_TYPE_HARDWARE;
      attr.config = PERF_COUNT_HW_STALLED_CYCLES_FRONTEND;
      break;
  }
  attr.read_format = PERF_FORMAT_TOTAL_TIME_ENABLED | PERF_FORMAT_TOTAL_TIME_RUNNING;
  return attr;
}

struct EventAvailability {
  EventId id;
  bool available = false;
  std::optional<Errc> error;
  std::string reason;
};

namespace detail {

inline Errc classify_perf_errno(int err) {
  return (err == EACCES || err == EPERM) ? Errc::PermissionDenied : Errc::UnsupportedEvent;
}

class FileDescriptor {
 public:
  FileDescriptor() = default;
  explicit FileDescriptor(int fd) : fd_(fd) {}
  FileDescriptor(FileDescriptor&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  FileDescriptor& operator=(FileDescriptor&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  FileDescriptor(const FileDescriptor&) = delete;
  FileDescriptor& operator=(const FileDescriptor&) = delete;
  ~FileDescriptor() { reset(); }

  [[nodiscard]] int get() const noexcept { return fd_; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline std::int64_t monotonic_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Attempts to program one event. On success the returned fd is live.
inline std::pair<FileDescriptor, EventAvailability> try_open(const RealOsBackend& backend, EventId id) {
  EventAvailability status;
  status.id = id;
  auto attr = perf_attr_for(id);
  if (!attr) {
    status.error = Errc::UnsupportedEvent;
    status.reason = "no encoding for this architecture";
    return {FileDescriptor{}, status};
  }
  attr->exclude_kernel = backend.exclude_kernel ? 1 : 0;
  attr->exclude_hv = 1;
  attr->inherit = backend.inherit ? 1 : 0;
  int fd = backend.opener(*attr);
  if (fd < 0) {
    status.error = classify_perf_errno(-fd);
    status.reason = std::strerror(-fd);
    return {FileDescriptor{}, status};
  }
  status.available = true;
  return {FileDescriptor{fd}, status};
}

}  // namespace detail

// Reports, per event, whether the OS interface can program it. Nothing stays
// open afterwards.
inline std::vector<EventAvailability> probe_events(const RealOsBackend& backend, const EventSet& events) {
  std::vector<EventAvailability> out;
  for (auto id : events) out.push_back(detail::try_open(backend, id).second);
  return out;
}

class CounterSession {
 public:
  CounterSession(const CounterSession&) = delete;
  CounterSession& operator=(const CounterSession&) = delete;
  CounterSession(CounterSession&&) noexcept = default;
  CounterSession& operator=(CounterSession&&) noexcept = default;
  ~CounterSession() = default;

  friend CounterSession open_session(const CounterBackend& backend, const EventSet& events);

  [[nodiscard]] const EventSet& events() const noexcept { return events_; }
  [[nodiscard]] bool simulated() const noexcept { return simulated_.has_value(); }

  // Cumulative counts since the session opened. Events outside the session's
  // set read as zero.
  CounterSample read() {
    CounterSample sample = simulated_ ? read_simulated() : read_os();
    for (auto id : events_) {
      if (sample[id] < last_[id]) {
        throw Error(Errc::CounterWentBackward,
                    std::string(event_name(id)) + " decreased from " + std::to_string(last_[id]) + " to " +
                        std::to_string(sample[id]));
      }
    }
    last_ = sample;
    return sample;
  }

 private:
  CounterSession() = default;

  CounterSample read_simulated() {
    ++reads_;
    CounterSample sample;
    for (auto id : events_) {
      auto it = simulated_->increments.find(id);
      if (it != simulated_->increments.end()) sample.values[index_of(id)] = reads_ * it->second;
    }
    sample.timestamp_ns = static_cast<std::int64_t>(reads_) * simulated_->tick_ns;
    return sample;
  }

  CounterSample read_raw_os() const {
    CounterSample sample;
    for (const auto& [id, fd] : fds_) {
      std::uint64_t buf[3] = {0, 0, 0};  // value, time_enabled, time_running
      if (::read(fd.get(), buf, sizeof(buf)) != static_cast<ssize_t>(sizeof(buf))) {
        throw Error(Errc::Io, std::string("reading ") + std::string(event_name(id)) + ": " + std::strerror(errno));
      }
      std::uint64_t value = buf[0];
      // Scale multiplexed counters up to the full enabled window.
      if (buf[2] > 0 && buf[2] < buf[1]) {
        value = static_cast<std::uint64_t>(static_cast<long double>(value) * buf[1] / buf[2]);
      }
      sample.values[index_of(id)] = value;
    }
    sample.timestamp_ns = detail::monotonic_ns();
    return sample;
  }

  CounterSample read_os() {
    CounterSample raw = read_raw_os();
    CounterSample sample;
    sample.timestamp_ns = raw.timestamp_ns;
    for (auto id : events_) {
      auto i = index_of(id);
      if (raw.values[i] < baseline_.values[i]) {
        throw Error(Errc::CounterWentBackward, std::string(event_name(id)) + " fell below the session baseline");
      }
      sample.values[i] = raw.values[i] - baseline_.values[i];
    }
    return sample;
  }

  EventSet events_;
  std::optional<SimulatedBackend> simulated_;
  std::uint64_t reads_ = 0;
  std::vector<std::pair<EventId, detail::FileDescriptor>> fds_;
  CounterSample baseline_;
  CounterSample last_;
};

// Opens a session over `events`. With the OS backend every requested event
// must be programmable; PermissionDenied wins over UnsupportedEvent when
// both occur since it usually explains the others.
inline CounterSession open_session(const CounterBackend& backend, const EventSet& events) {
  if (events.empty()) throw Error(Errc::UnsupportedEvent, "empty event set");
  CounterSession session;
  session.events_ = events;
  if (const auto* sim = std::get_if<SimulatedBackend>(&backend)) {
    session.simulated_ = *sim;
    return session;
  }
  const auto& os = std::get<RealOsBackend>(backend);
  std::optional<EventAvailability> first_failure;
  for (auto id : events) {
    auto [fd, status] = detail::try_open(os, id);
    if (!status.available) {
      if (!first_failure || (status.error == Errc::PermissionDenied && first_failure->error != Errc::PermissionDenied)) {
        first_failure = status;
      }
      continue;
    }
    session.fds_.emplace_back(id, std::move(fd));
  }
  if (first_failure) {
    throw Error(*first_failure->error,
                std::string(event_name(first_failure->id)) + " could not be opened: " + first_failure->reason);
  }
  session.baseline_ = session.read_raw_os();
  session.last_ = CounterSample{};
  return session;
}

struct RegionHandle {
  std::string name;
  std::size_t depth = 0;
};

class RegionCollector {
 public:
  explicit RegionCollector(CounterSession session) : session_(std::move(session)) {}

  RegionHandle begin(std::string name) {
    auto snapshot = session_.read();
    stack_.push_back(OpenRegion{name, snapshot});
    return RegionHandle{std::move(name), stack_.size()};
  }

  // Closes the innermost region, which must be `name`. Returns the delta for
  // this begin/end pair; the running record is updated as a side effect.
  RegionRecord end(std::string_view name) {
    if (stack_.empty()) throw Error(Errc::NoOpenRegion, "end(\"" + std::string(name) + "\") with no open region");
    if (stack_.back().name != name) {
      throw Error(Errc::MismatchedRegion,
                  "end(\"" + std::string(name) + "\") but innermost region is \"" + stack_.back().name + "\"");
    }
    auto now = session_.read();
    RegionRecord delta{stack_.back().name, 1, {}};
    for (auto id : session_.events()) delta.totals[id] = now[id] - stack_.back().start[id];
    stack_.pop_back();

    auto [it, inserted] = records_.try_emplace(delta.name, RegionRecord{delta.name, 0, {}});
    if (inserted) order_.push_back(delta.name);
    it->second.merge(delta);
    return delta;
  }

  [[nodiscard]] std::size_t depth() const noexcept { return stack_.size(); }

  [[nodiscard]] std::vector<std::string> open_regions() const {
    std::vector<std::string> names;
    for (const auto& r : stack_) names.push_back(r.name);
    return names;
  }

  // Finished records in first-completion order.
  [[nodiscard]] std::vector<RegionRecord> records() const {
    std::vector<RegionRecord> out;
    for (const auto& name : order_) out.push_back(records_.at(name));
    return out;
  }

  [[nodiscard]] const RegionRecord* find(std::string_view name) const {
    auto it = records_.find(std::string(name));
    return it == records_.end() ? nullptr : &it->second;
  }

  CounterSession& session() noexcept { return session_; }

 private:
  struct OpenRegion {
    std::string name;
    CounterSample start;
  };

  CounterSession session_;
  std::vector<OpenRegion> stack_;
  std::map<std::string, RegionRecord> records_;
  std::vector<std::string> order_;
};

// Begins a region on construction and ends it on destruction. Errors at
// destruction are swallowed; call finish() to observe them.
class ScopedRegion {
 public:
  ScopedRegion(RegionCollector& collector, std::string name) : collector_(&collector), name_(std::move(name)) {
    collector_->begin(name_);
  }
  ScopedRegion(const ScopedRegion&) = delete;
  ScopedRegion& operator=(const ScopedRegion&) = delete;

  RegionRecord finish() {
    auto* c = std::exchange(collector_, nullptr);
    if (c == nullptr) throw Error(Errc::NoOpenRegion, "region \"" + name_ + "\" already finished");
    return c->end(name_);
  }

  ~ScopedRegion() {
    if (collector_ != nullptr) {
      try {
        collector_->end(name_);
      } catch (const Error&) {
      }
    }
  }

 private:
  RegionCollector* collector_;
  std::string name_;
};

inline std::map<std::string, RegionRecord> aggregate(std::span<const RegionRecord> records) {
  std::map<std::string, RegionRecord> merged;
  for (const auto& r : records) {
    auto [it, inserted] = merged.try_emplace(r.name, RegionRecord{r.name, 0, {}});
    it->second.merge(r);
  }
  return merged;
}

}  // namespace pagescope
