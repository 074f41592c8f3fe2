#pragma once

// Derived performance measures computed from region counter totals, and
// with/without huge page ratios. Everything here is a pure function.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "pagescope/counters.hpp"
#include "pagescope/error.hpp"
#include "pagescope/events.hpp"

namespace pagescope {

struct CpuSpec {
  double freq_hz = 1.8e9;
  // Bytes moved per CacheMisses event. 256 is the A64FX line size.
  std::uint64_t cache_line_bytes = 256;

  void validate() const {
    if (!(freq_hz > 0.0) || !std::isfinite(freq_hz)) {
      throw Error(Errc::InvalidCpuSpec, "freq_hz must be positive and finite");
    }
    if (cache_line_bytes == 0 || !std::has_single_bit(cache_line_bytes)) {
      throw Error(Errc::InvalidCpuSpec, "cache_line_bytes must be a positive power of two");
    }
  }
};

struct DerivedMetrics {
  double hw_cycles = 0.0;
  double seconds = 0.0;
  std::optional<double> sve_per_cycle;
  std::optional<double> bandwidth_bytes_per_s;
  std::optional<double> dtlb_misses_per_s;

  friend bool operator==(const DerivedMetrics&, const DerivedMetrics&) = default;
};

enum class Measure : std::uint8_t { HwCycles, Seconds, SvePerCycle, Bandwidth, DtlbRate, ElapsedTimer };

inline constexpr std::array<Measure, 6> kAllMeasures = {Measure::HwCycles,  Measure::Seconds,
                                                        Measure::SvePerCycle, Measure::Bandwidth,
                                                        Measure::DtlbRate,  Measure::ElapsedTimer};

// Row labels of the comparison table.
constexpr std::string_view measure_label(Measure m) noexcept {
  switch (m) {
    case Measure::HwCycles: return "Hardware (cycles)";
    case Measure::Seconds: return "Time (s)";
    case Measure::SvePerCycle: return "SVE Instructions/cycle";
    case Measure::Bandwidth: return "Memory (Gbytes/s)";
    case Measure::DtlbRate: return "DTLB misses (1/s)";
    case Measure::ElapsedTimer: return "Elapsed Timer (s)";
  }
  return "";
}

// Stable machine keys for CSV and JSON.
constexpr std::string_view measure_key(Measure m) noexcept {
  switch (m) {
    case Measure::HwCycles: return "hw_cycles";
    case Measure::Seconds: return "seconds";
    case Measure::SvePerCycle: return "sve_per_cycle";
    case Measure::Bandwidth: return "bandwidth_bytes_per_s";
    case Measure::DtlbRate: return "dtlb_misses_per_s";
    case Measure::ElapsedTimer: return "elapsed_s";
  }
  return "";
}

inline std::optional<Measure> measure_from_key(std::string_view key) noexcept {
  for (auto m : kAllMeasures) {
    if (measure_key(m) == key) return m;
  }
  return std::nullopt;
}

inline std::optional<double> measure_value(const DerivedMetrics& d, Measure m) noexcept {
  switch (m) {
    case Measure::HwCycles: return d.hw_cycles;
    case Measure::Seconds: return d.seconds;
    case Measure::SvePerCycle: return d.sve_per_cycle;
    case Measure::Bandwidth: return d.bandwidth_bytes_per_s;
    case Measure::DtlbRate: return d.dtlb_misses_per_s;
    case Measure::ElapsedTimer: return std::nullopt;
  }
  return std::nullopt;
}

inline DerivedMetrics derive(const RegionRecord& record, const CpuSpec& cpu) {
  cpu.validate();
  auto cycles = record.total(EventId::CpuCycles);
  if (!cycles || *cycles == 0) {
    throw Error(Errc::ZeroCycles, "region \"" + record.name + "\" has no CPU cycles recorded");
  }
  DerivedMetrics d;
  d.hw_cycles = static_cast<double>(*cycles);
  d.seconds = d.hw_cycles / cpu.freq_hz;
  if (auto sve = record.total(EventId::SveInstRetired)) {
    d.sve_per_cycle = static_cast<double>(*sve) / d.hw_cycles;
  }
  if (auto misses = record.total(EventId::CacheMisses)) {
    d.bandwidth_bytes_per_s = static_cast<double>(*misses) * static_cast<double>(cpu.cache_line_bytes) / d.seconds;
  }
  if (auto dtlb = record.total(EventId::DtlbLoadMisses)) {
    d.dtlb_misses_per_s = static_cast<double>(*dtlb) / d.seconds;
  }
  return d;
}

struct WallInterval {
  double start_s = 0.0;
  double stop_s = 0.0;
};

inline double elapsed_timer(const WallInterval& interval) {
  if (interval.stop_s < interval.start_s) {
    throw Error(Errc::NegativeInterval, fmt::format("stop {} precedes start {}", interval.stop_s, interval.start_s));
  }
  return interval.stop_s - interval.start_s;
}

struct ElapsedPair {
  std::optional<double> with_hp;
  std::optional<double> without_hp;
};

// with / without. Equal zeros compare as 1; anything else over zero, or a
// missing side, has no ratio.
inline std::optional<double> ratio_of(std::optional<double> with_hp, std::optional<double> without_hp) {
  if (!with_hp || !without_hp) return std::nullopt;
  if (*without_hp > 0.0) return *with_hp / *without_hp;
  if (*without_hp == 0.0 && *with_hp == 0.0) return 1.0;
  return std::nullopt;
}

struct RatioRow {
  Measure measure = Measure::HwCycles;
  std::optional<double> with_hp;
  std::optional<double> without_hp;
  std::optional<double> ratio;

  friend bool operator==(const RatioRow&, const RatioRow&) = default;
};

inline std::vector<RatioRow> ratios(const DerivedMetrics& with_hp, const DerivedMetrics& without_hp,
                                    const ElapsedPair& timers) {
  std::vector<RatioRow> rows;
  rows.reserve(kAllMeasures.size());
  for (auto m : kAllMeasures) {
    RatioRow row;
    row.measure = m;
    if (m == Measure::ElapsedTimer) {
      row.with_hp = timers.with_hp;
      row.without_hp = timers.without_hp;
    } else {
      row.with_hp = measure_value(with_hp, m);
      row.without_hp = measure_value(without_hp, m);
    }
    row.ratio = ratio_of(row.with_hp, row.without_hp);
    rows.push_back(row);
  }
  return rows;
}

// --- rendering -------------------------------------------------------------

inline constexpr std::string_view kNotAvailable = "n/a";

// "1.25×10^11": three significant figures in scientific form.
inline std::string format_scientific3(double v) {
  if (!std::isfinite(v)) return std::string(kNotAvailable);
  auto text = fmt::format("{:.2e}", v);
  auto e = text.find('e');
  int exponent = std::stoi(text.substr(e + 1));
  return fmt::format("{}×10^{}", text.substr(0, e), exponent);
}

// Display form of a measure value as it appears in the comparison table:
// counts and rates in 3-significant-figure scientific form, per-cycle and
// bandwidth figures with two decimals, timers with three.
inline std::string format_measure(Measure m, std::optional<double> value) {
  if (!value || !std::isfinite(*value)) return std::string(kNotAvailable);
  switch (m) {
    case Measure::HwCycles:
    case Measure::Seconds:
    case Measure::DtlbRate: return format_scientific3(*value);
    case Measure::SvePerCycle: return fmt::format("{:.2f}", *value);
    case Measure::Bandwidth: return fmt::format("{:.2f}", *value / 1e9);
    case Measure::ElapsedTimer: return fmt::format("{:.3f}", *value);
  }
  return std::string(kNotAvailable);
}

inline std::string format_ratio(std::optional<double> ratio) {
  if (!ratio || !std::isfinite(*ratio)) return std::string(kNotAvailable);
  return fmt::format("{:.3f}", *ratio);
}

// Full-precision (round-trippable) form for machine output.
inline std::string format_full(std::optional<double> value) {
  if (!value || !std::isfinite(*value)) return std::string(kNotAvailable);
  return fmt::format("{}", *value);
}

}  // namespace pagescope
