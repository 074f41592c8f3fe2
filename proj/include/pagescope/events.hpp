#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "pagescope/error.hpp"

namespace pagescope {

// The fixed event set used to characterize a region: cycles, line fills,
// DTLB load misses, SVE retirement and the two stall counters.
enum class EventId : std::uint8_t {
  CpuCycles,
  CacheMisses,
  DtlbLoadMisses,
  SveInstRetired,
  StalledCyclesBackend,
  StalledCyclesFrontend,
};

inline constexpr std::size_t kEventCount = 6;

inline constexpr std::array<EventId, kEventCount> kAllEvents = {
    EventId::CpuCycles,      EventId::CacheMisses,          EventId::DtlbLoadMisses,
    EventId::SveInstRetired, EventId::StalledCyclesBackend, EventId::StalledCyclesFrontend,
};

using EventSet = std::set<EventId>;

constexpr std::size_t index_of(EventId id) noexcept { return static_cast<std::size_t>(id); }

// Platform event names. These strings appear in config files, the
// PAPI_EVENTS override and report labels, so they must not change.
constexpr std::string_view event_name(EventId id) noexcept {
  switch (id) {
    case EventId::CpuCycles: return "PERF_COUNT_HW_CPU_CYCLES";
    case EventId::CacheMisses: return "PERF_COUNT_HW_CACHE_MISSES";
    case EventId::DtlbLoadMisses: return "DTLB-LOAD-MISSES";
    case EventId::SveInstRetired: return "SVE_INST_RETIRED";
    case EventId::StalledCyclesBackend: return "PERF_COUNT_HW_STALLED_CYCLES_BACKEND";
    case EventId::StalledCyclesFrontend: return "PERF_COUNT_HW_STALLED_CYCLES_FRONTEND";
  }
  return "";
}

constexpr std::optional<EventId> event_from_name(std::string_view name) noexcept {
  for (auto id : kAllEvents) {
    if (event_name(id) == name) return id;
  }
  return std::nullopt;
}

inline EventSet all_event_set() { return EventSet(kAllEvents.begin(), kAllEvents.end()); }

// Parses a comma-separated list of event names. Whitespace around names is
// ignored; an unknown name is an UnsupportedEvent.
inline EventSet parse_event_list(std::string_view text) {
  EventSet out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    auto token = text.substr(pos, comma - pos);
    while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
    while (!token.empty() && (token.back() == ' ' || token.back() == '\t')) token.remove_suffix(1);
    if (!token.empty()) {
      auto id = event_from_name(token);
      if (!id) throw Error(Errc::UnsupportedEvent, "unknown event name '" + std::string(token) + "'");
      out.insert(*id);
    }
    pos = comma + 1;
  }
  return out;
}

inline std::string format_event_list(const EventSet& events) {
  std::string out;
  for (auto id : events) {
    if (!out.empty()) out += ',';
    out += event_name(id);
  }
  return out;
}

// PAPI_EVENTS, when set and non-empty, overrides the requested event set.
inline EventSet resolve_events(const EventSet& requested) {
  if (const char* env = std::getenv("PAPI_EVENTS"); env != nullptr && *env != '\0') {
    auto overridden = parse_event_list(env);
    if (!overridden.empty()) return overridden;
  }
  return requested;
}

}  // namespace pagescope
