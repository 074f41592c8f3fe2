#pragma once

// Data TLB model. Replays byte-offset traces against a set-associative LRU
// TLB at a chosen page size, plus an independent fully-associative
// reference computed from stack distances by naive rescanning.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>

#include "pagescope/error.hpp"

namespace pagescope {

inline constexpr std::uint64_t kKiB = 1024;
inline constexpr std::uint64_t kMiB = 1024 * kKiB;
inline constexpr std::uint64_t kGiB = 1024 * kMiB;

struct TlbConfig {
  std::uint64_t entries = 48;
  std::uint64_t associativity = 48;  // ways; equal to entries means fully associative
  std::uint64_t page_size_bytes = 4 * kKiB;

  // 48-entry fully associative L1 DTLB. The geometry is a stand-in; only
  // ratios between page sizes are meaningful.
  static TlbConfig illustrative(std::uint64_t page_size = 4 * kKiB) { return {48, 48, page_size}; }

  static TlbConfig fully_associative(std::uint64_t entries, std::uint64_t page_size) {
    return {entries, entries, page_size};
  }

  [[nodiscard]] std::uint64_t sets() const noexcept { return entries / associativity; }

  void validate() const {
    if (entries < 1) throw Error(Errc::InvalidTlbConfig, "entries must be at least 1");
    if (associativity < 1 || entries % associativity != 0) {
      throw Error(Errc::InvalidTlbConfig, fmt::format("associativity {} does not divide {} entries", associativity,
                                                      entries));
    }
    if (!std::has_single_bit(page_size_bytes) || page_size_bytes < 4 * kKiB || page_size_bytes > 512 * kMiB) {
      throw Error(Errc::InvalidTlbConfig,
                  fmt::format("page size {} is not a power of two in [4 KiB, 512 MiB]", page_size_bytes));
    }
  }
};

struct TlbStats {
  std::uint64_t accesses = 0;
  std::uint64_t misses = 0;
  std::uint64_t distinct_pages = 0;

  friend bool operator==(const TlbStats&, const TlbStats&) = default;
};

// Stateful TLB so long traces can be streamed without materializing them.
class TlbSimulator {
 public:
  explicit TlbSimulator(const TlbConfig& config) : config_(config) {
    config_.validate();
    page_shift_ = static_cast<unsigned>(std::countr_zero(config_.page_size_bytes));
    sets_.resize(config_.sets());
  }

  void access(std::uint64_t offset) {
    ++stats_.accesses;
    const std::uint64_t page = offset >> page_shift_;
    if (seen_.insert(page).second) ++stats_.distinct_pages;

    auto& set = sets_[page % sets_.size()];
    if (auto it = where_.find(page); it != where_.end()) {
      set.splice(set.begin(), set, it->second);  // hit: move to MRU
      return;
    }
    ++stats_.misses;
    if (set.size() == config_.associativity) {
      where_.erase(set.back());
      set.pop_back();
    }
    set.push_front(page);
    where_[page] = set.begin();
  }

  [[nodiscard]] const TlbStats& stats() const noexcept { return stats_; }

 private:
  TlbConfig config_;
  unsigned page_shift_ = 12;
  std::vector<std::list<std::uint64_t>> sets_;  // MRU first
  std::unordered_map<std::uint64_t, std::list<std::uint64_t>::iterator> where_;
  std::unordered_set<std::uint64_t> seen_;
  TlbStats stats_;
};

inline TlbStats simulate(const TlbConfig& config, std::span<const std::uint64_t> trace) {
  TlbSimulator tlb(config);
  for (auto off : trace) tlb.access(off);
  return tlb.stats();
}

// Fully-associative LRU by definition: an access misses iff its page was
// never touched before, or at least `entries` distinct other pages were
// touched since its previous access. Each access rescans history backwards.
inline TlbStats stack_distance_oracle(std::uint64_t entries, std::span<const std::uint64_t> trace,
                                      std::uint64_t page_size) {
  TlbStats stats;
  std::vector<std::uint64_t> pages(trace.size());
  for (std::size_t t = 0; t < trace.size(); ++t) pages[t] = trace[t] / page_size;

  std::unordered_set<std::uint64_t> between;
  for (std::size_t t = 0; t < pages.size(); ++t) {
    ++stats.accesses;
    between.clear();
    bool reused = false;
    for (std::size_t s = t; s-- > 0;) {
      if (pages[s] == pages[t]) {
        reused = true;
        break;
      }
      between.insert(pages[s]);
      if (between.size() >= entries) break;
    }
    if (!reused || between.size() >= entries) ++stats.misses;
  }
  stats.distinct_pages = std::unordered_set<std::uint64_t>(pages.begin(), pages.end()).size();
  return stats;
}

struct SweepRow {
  std::uint64_t page_size_bytes = 0;
  TlbStats stats;
  double ratio = 1.0;  // misses relative to the smallest size
};

inline std::vector<SweepRow> page_size_sweep(std::span<const std::uint64_t> trace, const TlbConfig& config_template,
                                             const std::vector<std::uint64_t>& sizes) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) {
    throw Error(Errc::InvalidTlbConfig, "page sizes must be sorted ascending");
  }
  std::vector<SweepRow> rows;
  for (auto size : sizes) {
    auto cfg = config_template;
    cfg.page_size_bytes = size;
    rows.push_back({size, simulate(cfg, trace), 1.0});
  }
  if (!rows.empty()) {
    const auto base = rows.front().stats.misses;
    for (auto& r : rows) {
      r.ratio = base == 0 ? (r.stats.misses == 0 ? 1.0 : 0.0) : static_cast<double>(r.stats.misses) / base;
    }
  }
  return rows;
}

// "4K" / "2M" / "512M" / "1G" / plain bytes.
inline std::uint64_t parse_size(std::string_view text) {
  if (text.empty()) throw Error(Errc::InvalidConfig, "empty size");
  std::uint64_t mult = 1;
  switch (text.back()) {
    case 'K': case 'k': mult = kKiB; break;
    case 'M': case 'm': mult = kMiB; break;
    case 'G': case 'g': mult = kGiB; break;
    default: break;
  }
  auto digits = mult == 1 ? text : text.substr(0, text.size() - 1);
  if (digits.empty()) throw Error(Errc::InvalidConfig, "bad size '" + std::string(text) + "'");
  std::uint64_t v = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') throw Error(Errc::InvalidConfig, "bad size '" + std::string(text) + "'");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v * mult;
}

inline std::vector<std::uint64_t> parse_size_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    auto token = text.substr(pos, comma - pos);
    if (!token.empty()) out.push_back(parse_size(token));
    pos = comma + 1;
  }
  return out;
}

inline std::string format_size(std::uint64_t bytes) {
  if (bytes % kGiB == 0) return fmt::format("{}G", bytes / kGiB);
  if (bytes % kMiB == 0) return fmt::format("{}M", bytes / kMiB);
  if (bytes % kKiB == 0) return fmt::format("{}K", bytes / kKiB);
  return fmt::format("{}", bytes);
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "size_bytes,accesses,misses,distinct_pages,ratio\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{}\n", r.page_size_bytes, r.stats.accesses, r.stats.misses,
                       r.stats.distinct_pages, r.ratio);
  }
  return out;
}

}  // namespace pagescope
