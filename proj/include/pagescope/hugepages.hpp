#pragma once

// Huge page state: procfs/sysfs parsing, THP control text, launch recipes
// for the supported enablement mechanisms, and usage verification from
// meminfo snapshots.
//
// All file access goes through FileSystem so that every operation can be
// replayed from fixtures without root or even Linux.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>

#include "pagescope/error.hpp"

namespace pagescope {

inline constexpr std::string_view kMeminfoPath = "/proc/meminfo";
inline constexpr std::string_view kThpEnabledPath = "/sys/kernel/mm/transparent_hugepage/enabled";
inline constexpr std::string_view kPerfParanoidPath = "/proc/sys/kernel/perf_event_paranoid";
inline constexpr std::string_view kKernelCmdlinePath = "/proc/cmdline";

// Monotonic nanoseconds.
using Clock = std::function<std::int64_t()>;

inline Clock steady_clock_ns() {
  return [] {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

// A clock that advances by a fixed step on every call. Used for
// reproducible runs.
inline Clock stepping_clock(std::int64_t step_ns) {
  auto t = std::make_shared<std::int64_t>(0);
  auto mu = std::make_shared<std::mutex>();
  return [t, mu, step_ns] {
    std::lock_guard lock(*mu);
    *t += step_ns;
    return *t;
  };
}

// --- filesystem abstraction ------------------------------------------------

class FileSystem {
 public:
  virtual ~FileSystem() = default;
  virtual std::optional<std::string> read_file(std::string_view path) = 0;
  virtual void write_file(std::string_view path, std::string_view content) = 0;
  [[nodiscard]] virtual bool has_executable(std::string_view name) const = 0;
};

class RealFileSystem final : public FileSystem {
 public:
  std::optional<std::string> read_file(std::string_view path) override {
    std::ifstream in{std::string(path)};
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write_file(std::string_view path, std::string_view content) override {
    std::ofstream out{std::string(path)};
    if (!out) throw Error(Errc::Io, "cannot open " + std::string(path) + " for writing");
    out << content;
    if (!out.flush()) throw Error(Errc::Io, "write to " + std::string(path) + " failed");
  }

  [[nodiscard]] bool has_executable(std::string_view name) const override {
    const char* path = std::getenv("PATH");
    if (path == nullptr) return false;
    std::string_view dirs(path);
    std::size_t pos = 0;
    while (pos <= dirs.size()) {
      auto colon = dirs.find(':', pos);
      if (colon == std::string_view::npos) colon = dirs.size();
      auto dir = dirs.substr(pos, colon - pos);
      if (!dir.empty()) {
        auto candidate = std::string(dir) + "/" + std::string(name);
        if (::access(candidate.c_str(), X_OK) == 0) return true;
      }
      pos = colon + 1;
    }
    return false;
  }
};

// In-memory files. A path may hold a sequence of contents: each read returns
// the next one and the last one repeats forever.
class FixtureFileSystem final : public FileSystem {
 public:
  FixtureFileSystem& set(std::string path, std::string content) {
    std::lock_guard lock(mu_);
    files_[std::move(path)] = std::deque<std::string>{std::move(content)};
    return *this;
  }

  FixtureFileSystem& set_sequence(std::string path, std::vector<std::string> contents) {
    std::lock_guard lock(mu_);
    files_[std::move(path)] = std::deque<std::string>(contents.begin(), contents.end());
    return *this;
  }

  FixtureFileSystem& add_executable(std::string name) {
    std::lock_guard lock(mu_);
    executables_.insert(std::move(name));
    return *this;
  }

  std::optional<std::string> read_file(std::string_view path) override {
    std::lock_guard lock(mu_);
    auto it = files_.find(std::string(path));
    if (it == files_.end() || it->second.empty()) return std::nullopt;
    auto content = it->second.front();
    if (it->second.size() > 1) it->second.pop_front();
    return content;
  }

  void write_file(std::string_view path, std::string_view content) override {
    std::lock_guard lock(mu_);
    writes_.emplace_back(std::string(path), std::string(content));
  }

  [[nodiscard]] bool has_executable(std::string_view name) const override {
    std::lock_guard lock(mu_);
    return executables_.count(std::string(name)) > 0;
  }

  [[nodiscard]] std::vector<std::pair<std::string, std::string>> writes() const {
    std::lock_guard lock(mu_);
    return writes_;
  }

  // Loads a directory tree that mirrors absolute paths: <dir>/proc/meminfo
  // becomes /proc/meminfo. A directory named "<file>.d" holds a sequence,
  // replayed in lexical order. An optional <dir>/executables file lists
  // tool names, one per line.
  static std::shared_ptr<FixtureFileSystem> load_directory(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw Error(Errc::Io, "fixture directory not found: " + dir.string());
    auto out = std::make_shared<FixtureFileSystem>();
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    std::map<std::string, std::vector<fs::path>> sequences;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      auto rel = fs::relative(entry.path(), dir);
      if (rel == "executables") {
        std::istringstream lines(slurp(entry.path()));
        for (std::string line; std::getline(lines, line);) {
          if (!line.empty()) out->add_executable(line);
        }
        continue;
      }
      auto parent = rel.parent_path();
      if (parent.extension() == ".d") {
        auto target = "/" + (parent.parent_path() / parent.stem()).generic_string();
        sequences[target].push_back(entry.path());
      } else {
        out->set("/" + rel.generic_string(), slurp(entry.path()));
      }
    }
    for (auto& [target, paths] : sequences) {
      std::sort(paths.begin(), paths.end());
      std::vector<std::string> contents;
      for (const auto& p : paths) contents.push_back(slurp(p));
      out->set_sequence(target, std::move(contents));
    }
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::deque<std::string>> files_;
  std::set<std::string> executables_;
  std::vector<std::pair<std::string, std::string>> writes_;
};

// --- /proc/meminfo -----------------------------------------------------------

struct MeminfoSnapshot {
  std::uint64_t anon_huge_kb = 0;
  std::uint64_t shmem_huge_kb = 0;
  std::uint64_t hugetlb_kb = 0;
  std::uint64_t hugepagesize_kb = 0;
  std::uint64_t hp_total = 0;
  std::uint64_t hp_free = 0;
  std::uint64_t hp_rsvd = 0;
  std::uint64_t hp_surp = 0;
  std::int64_t captured_at = 0;

  [[nodiscard]] bool same_counts(const MeminfoSnapshot& o) const noexcept {
    return anon_huge_kb == o.anon_huge_kb && shmem_huge_kb == o.shmem_huge_kb && hugetlb_kb == o.hugetlb_kb &&
           hugepagesize_kb == o.hugepagesize_kb && hp_total == o.hp_total && hp_free == o.hp_free &&
           hp_rsvd == o.hp_rsvd && hp_surp == o.hp_surp;
  }

  friend bool operator==(const MeminfoSnapshot&, const MeminfoSnapshot&) = default;
};

struct MeminfoField {
  std::string_view key;
  std::uint64_t MeminfoSnapshot::*member;
  bool kilobytes;
};

// The eight tracked lines, in kernel order.
inline constexpr std::array<MeminfoField, 8> kMeminfoFields = {{
    {"AnonHugePages", &MeminfoSnapshot::anon_huge_kb, true},
    {"ShmemHugePages", &MeminfoSnapshot::shmem_huge_kb, true},
    {"HugePages_Total", &MeminfoSnapshot::hp_total, false},
    {"HugePages_Free", &MeminfoSnapshot::hp_free, false},
    {"HugePages_Rsvd", &MeminfoSnapshot::hp_rsvd, false},
    {"HugePages_Surp", &MeminfoSnapshot::hp_surp, false},
    {"Hugepagesize", &MeminfoSnapshot::hugepagesize_kb, true},
    {"Hugetlb", &MeminfoSnapshot::hugetlb_kb, true},
}};

inline bool is_supported_hugepagesize(std::uint64_t kb) noexcept { return kb == 2048 || kb == 524288; }

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

}  // namespace detail

inline MeminfoSnapshot parse_meminfo(std::string_view text, std::int64_t captured_at = 0) {
  MeminfoSnapshot snap;
  snap.captured_at = captured_at;
  std::array<bool, kMeminfoFields.size()> seen{};
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw Error(Errc::MalformedLine, fmt::format("line {}: missing ':'", line_no));
    }
    auto key = detail::trim(line.substr(0, colon));
    for (std::size_t f = 0; f < kMeminfoFields.size(); ++f) {
      if (kMeminfoFields[f].key != key) continue;
      auto rest = detail::trim(line.substr(colon + 1));
      if (rest.ends_with("kB")) rest = detail::trim(rest.substr(0, rest.size() - 2));
      auto value = detail::parse_u64(rest);
      if (!value) throw Error(Errc::MalformedLine, fmt::format("line {}: bad value for {}", line_no, key));
      snap.*(kMeminfoFields[f].member) = *value;
      seen[f] = true;
    }
  }
  for (std::size_t f = 0; f < kMeminfoFields.size(); ++f) {
    if (!seen[f]) throw Error(Errc::MissingField, std::string(kMeminfoFields[f].key));
  }
  return snap;
}

// Renders the tracked fields in kernel layout. Only used to build fixtures.
inline std::string render_meminfo(const MeminfoSnapshot& snap) {
  std::string out;
  for (const auto& f : kMeminfoFields) {
    auto label = std::string(f.key) + ":";
    if (f.kilobytes) {
      out += fmt::format("{:<16}{:>8} kB\n", label, snap.*(f.member));
    } else {
      out += fmt::format("{:<16}{:>8}\n", label, snap.*(f.member));
    }
  }
  return out;
}

inline MeminfoSnapshot read_meminfo(FileSystem& fs, const Clock& clock) {
  auto text = fs.read_file(kMeminfoPath);
  if (!text) throw Error(Errc::Io, "cannot read " + std::string(kMeminfoPath));
  return parse_meminfo(*text, clock ? clock() : 0);
}

// --- transparent huge page control -----------------------------------------

enum class ThpMode : std::uint8_t { Always, Madvise, Never };

inline constexpr std::array<ThpMode, 3> kAllThpModes = {ThpMode::Always, ThpMode::Madvise, ThpMode::Never};

// The text written to the sysfs "enabled" file to select a mode.
constexpr std::string_view render_thp(ThpMode mode) noexcept {
  switch (mode) {
    case ThpMode::Always: return "always";
    case ThpMode::Madvise: return "madvise";
    case ThpMode::Never: return "never";
  }
  return "";
}

// The file's contents as the kernel reports them, e.g. "[always] madvise never".
inline std::string render_thp_state(ThpMode current) {
  std::string out;
  for (auto m : kAllThpModes) {
    if (!out.empty()) out += ' ';
    out += m == current ? "[" + std::string(render_thp(m)) + "]" : std::string(render_thp(m));
  }
  return out;
}

inline ThpMode parse_thp(std::string_view text) {
  std::optional<ThpMode> selected;
  std::set<ThpMode> present;
  std::istringstream in{std::string(text)};
  for (std::string token; in >> token;) {
    bool bracketed = token.size() >= 2 && token.front() == '[' && token.back() == ']';
    std::string_view word = bracketed ? std::string_view(token).substr(1, token.size() - 2) : std::string_view(token);
    std::optional<ThpMode> mode;
    for (auto m : kAllThpModes) {
      if (render_thp(m) == word) mode = m;
    }
    if (!mode) throw Error(Errc::MalformedThpState, "unexpected token '" + token + "'");
    if (!present.insert(*mode).second) throw Error(Errc::MalformedThpState, "duplicate token '" + token + "'");
    if (bracketed) {
      if (selected) throw Error(Errc::MalformedThpState, "more than one bracketed mode");
      selected = mode;
    }
  }
  if (present.size() != kAllThpModes.size()) throw Error(Errc::MalformedThpState, "expected always, madvise and never");
  if (!selected) throw Error(Errc::MalformedThpState, "no bracketed mode");
  return *selected;
}

inline std::optional<ThpMode> read_thp(FileSystem& fs) {
  auto text = fs.read_file(kThpEnabledPath);
  if (!text) return std::nullopt;
  return parse_thp(*text);
}

// Changing THP is a node-wide privileged operation and only happens when
// the caller passes allow_system_writes explicitly.
inline void write_thp(FileSystem& fs, ThpMode mode, bool allow_system_writes) {
  if (!allow_system_writes) {
    throw Error(Errc::SystemWriteForbidden, "refusing to write " + std::string(kThpEnabledPath) +
                                                " without --allow-system-writes");
  }
  fs.write_file(kThpEnabledPath, std::string(render_thp(mode)) + "\n");
}

// --- launch plans ------------------------------------------------------------

enum class HugePageMode : std::uint8_t {
  Off,
  Transparent,
  PreloadHugetlbfs,
  FujitsuHugetlbfs,
  FujitsuThp,
  FujitsuNone,
};

inline constexpr std::array<HugePageMode, 6> kAllHugePageModes = {
    HugePageMode::Off,        HugePageMode::Transparent, HugePageMode::PreloadHugetlbfs,
    HugePageMode::FujitsuHugetlbfs, HugePageMode::FujitsuThp,  HugePageMode::FujitsuNone,
};

constexpr std::string_view mode_name(HugePageMode mode) noexcept {
  switch (mode) {
    case HugePageMode::Off: return "off";
    case HugePageMode::Transparent: return "thp";
    case HugePageMode::PreloadHugetlbfs: return "preload";
    case HugePageMode::FujitsuHugetlbfs: return "fj-hugetlbfs";
    case HugePageMode::FujitsuThp: return "fj-thp";
    case HugePageMode::FujitsuNone: return "fj-none";
  }
  return "";
}

inline HugePageMode mode_from_name(std::string_view name) {
  for (auto m : kAllHugePageModes) {
    if (mode_name(m) == name) return m;
  }
  throw Error(Errc::InvalidConfig, "unknown huge page mode '" + std::string(name) + "'");
}

// Off and FujitsuNone both request base pages only.
constexpr bool requests_huge_pages(HugePageMode mode) noexcept {
  return mode != HugePageMode::Off && mode != HugePageMode::FujitsuNone;
}

struct LaunchPlan {
  std::map<std::string, std::string> env;
  std::vector<std::string> wrapper_argv;
  std::vector<std::string> notes;

  [[nodiscard]] bool empty() const noexcept { return env.empty() && wrapper_argv.empty(); }

  [[nodiscard]] std::vector<std::string> argv_for(const std::vector<std::string>& command) const {
    std::vector<std::string> out = wrapper_argv;
    out.insert(out.end(), command.begin(), command.end());
    return out;
  }

  // "KEY=value ... wrapper... command..." as one shell line.
  [[nodiscard]] std::string shell_line(const std::vector<std::string>& command) const {
    std::string out;
    auto append = [&out](std::string_view part) {
      if (!out.empty()) out += ' ';
      out += part;
    };
    for (const auto& [k, v] : env) append(k + "=" + v);
    for (const auto& a : argv_for(command)) append(a);
    return out;
  }

  friend bool operator==(const LaunchPlan&, const LaunchPlan&) = default;
};

struct LaunchOptions {
  // Adds XOS_MMM_L_PRINT_ENV=on so the Fujitsu runtime prints its settings.
  bool fujitsu_print_env = false;
};

inline LaunchPlan plan_launch(HugePageMode mode, const LaunchOptions& options = {}) {
  LaunchPlan plan;
  auto fujitsu = [&](std::string value) {
    plan.env["XOS_MMM_L_HPAGE_TYPE"] = std::move(value);
    if (options.fujitsu_print_env) plan.env["XOS_MMM_L_PRINT_ENV"] = "on";
  };
  switch (mode) {
    case HugePageMode::Off:
      break;
    case HugePageMode::Transparent:
      plan.wrapper_argv = {"hugectl", "--shm", "--thp"};
      plan.notes.push_back("hugectl from libhugetlbfs-utils backs shared memory and requests THP");
      break;
    case HugePageMode::PreloadHugetlbfs:
      plan.env["LD_PRELOAD"] = "libhugetlbfs.so";
      plan.env["HUGETLB_MORECORE"] = "yes";
      plan.notes.push_back("malloc heap is served from the hugetlbfs pool; needs HugePages_Total > 0");
      break;
    case HugePageMode::FujitsuHugetlbfs:
      fujitsu("hugetlbfs");
      plan.notes.push_back("Fujitsu runtime large pages from hugetlbfs (runtime default)");
      break;
    case HugePageMode::FujitsuThp:
      fujitsu("thp");
      plan.notes.push_back("Fujitsu runtime large pages via transparent huge pages");
      break;
    case HugePageMode::FujitsuNone:
      fujitsu("none");
      plan.notes.push_back("Fujitsu runtime large pages disabled");
      break;
  }
  return plan;
}

// --- usage verification ------------------------------------------------------

struct UsageEvidence {
  std::string field;
  std::int64_t delta = 0;

  friend bool operator==(const UsageEvidence&, const UsageEvidence&) = default;
};

struct UsageVerdict {
  enum class Kind : std::uint8_t { Active, Inactive, Indeterminate };

  Kind kind = Kind::Inactive;
  std::vector<UsageEvidence> evidence;  // Active only
  std::string reason;                   // Indeterminate only

  friend bool operator==(const UsageVerdict&, const UsageVerdict&) = default;
};

constexpr std::string_view verdict_name(UsageVerdict::Kind kind) noexcept {
  switch (kind) {
    case UsageVerdict::Kind::Active: return "active";
    case UsageVerdict::Kind::Inactive: return "inactive";
    case UsageVerdict::Kind::Indeterminate: return "indeterminate";
  }
  return "";
}

inline UsageVerdict::Kind verdict_from_name(std::string_view name) {
  for (auto k : {UsageVerdict::Kind::Active, UsageVerdict::Kind::Inactive, UsageVerdict::Kind::Indeterminate}) {
    if (verdict_name(k) == name) return k;
  }
  throw Error(Errc::InvalidConfig, "unknown verdict '" + std::string(name) + "'");
}

// Rules, in order:
//  1. Active when any during-snapshot exceeds the baseline in AnonHugePages,
//     ShmemHugePages, Hugetlb or HugePages_Total. Evidence is the largest
//     positive delta seen per field.
//  2. Indeterminate when any tracked count sits above the baseline in one
//     snapshot and below it in another (another tenant is moving the pool).
//  3. Inactive otherwise.
inline UsageVerdict detect_usage(const MeminfoSnapshot& before, const std::vector<MeminfoSnapshot>& during) {
  struct Watched {
    std::string_view name;   // meminfo key, used for evidence
    std::string_view field;  // snapshot field, used in reasons
    std::uint64_t MeminfoSnapshot::*member;
    bool evidence;
  };
  static constexpr std::array<Watched, 7> kWatched = {{
      {"AnonHugePages", "anon_huge_kb", &MeminfoSnapshot::anon_huge_kb, true},
      {"ShmemHugePages", "shmem_huge_kb", &MeminfoSnapshot::shmem_huge_kb, true},
      {"Hugetlb", "hugetlb_kb", &MeminfoSnapshot::hugetlb_kb, true},
      {"HugePages_Total", "hp_total", &MeminfoSnapshot::hp_total, true},
      {"HugePages_Free", "hp_free", &MeminfoSnapshot::hp_free, false},
      {"HugePages_Rsvd", "hp_rsvd", &MeminfoSnapshot::hp_rsvd, false},
      {"HugePages_Surp", "hp_surp", &MeminfoSnapshot::hp_surp, false},
  }};

  UsageVerdict verdict;
  for (const auto& w : kWatched) {
    if (!w.evidence) continue;
    std::int64_t best = 0;
    for (const auto& s : during) {
      auto delta = static_cast<std::int64_t>(s.*(w.member)) - static_cast<std::int64_t>(before.*(w.member));
      best = std::max(best, delta);
    }
    if (best > 0) verdict.evidence.push_back({std::string(w.name), best});
  }
  if (!verdict.evidence.empty()) {
    verdict.kind = UsageVerdict::Kind::Active;
    return verdict;
  }
  for (const auto& w : kWatched) {
    bool above = false;
    bool below = false;
    for (const auto& s : during) {
      above |= s.*(w.member) > before.*(w.member);
      below |= s.*(w.member) < before.*(w.member);
    }
    if (above && below) {
      verdict.kind = UsageVerdict::Kind::Indeterminate;
      verdict.reason = fmt::format("{} non-monotone", w.field);
      return verdict;
    }
  }
  verdict.kind = UsageVerdict::Kind::Inactive;
  return verdict;
}

// --- background monitor -------------------------------------------------------

// One-way channel from the polling thread to the orchestrator.
template <typename T>
class Channel {
 public:
  void send(T value) {
    std::lock_guard lock(mu_);
    items_.push_back(std::move(value));
  }

  std::vector<T> drain() {
    std::lock_guard lock(mu_);
    std::vector<T> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
    items_.clear();
    return out;
  }

 private:
  std::mutex mu_;
  std::deque<T> items_;
};

// Polls /proc/meminfo while a workload runs. start() and stop() each take a
// synchronous snapshot, so at least two are always delivered; a positive
// cadence adds a background poller between them. sample_now() lets the
// caller add a snapshot at a known point (for example while memory is
// still mapped).
class MeminfoMonitor {
 public:
  MeminfoMonitor(std::shared_ptr<FileSystem> fs, double cadence_s, Clock clock)
      : fs_(std::move(fs)), cadence_s_(cadence_s), clock_(std::move(clock)) {}

  MeminfoMonitor(const MeminfoMonitor&) = delete;
  MeminfoMonitor& operator=(const MeminfoMonitor&) = delete;
  ~MeminfoMonitor() { halt(); }

  void start() {
    sample_now();
    if (cadence_s_ > 0.0) {
      running_ = true;
      poller_ = std::thread([this] { poll_loop(); });
    }
  }

  void sample_now() {
    try {
      channel_.send(read_meminfo(*fs_, clock_));
    } catch (const Error&) {
      ++failed_reads_;
    }
  }

  std::vector<MeminfoSnapshot> stop() {
    halt();
    sample_now();
    return channel_.drain();
  }

  [[nodiscard]] std::size_t failed_reads() const noexcept { return failed_reads_; }

 private:
  void poll_loop() {
    std::unique_lock lock(mu_);
    auto period = std::chrono::duration<double>(cadence_s_);
    while (running_) {
      if (cv_.wait_for(lock, period, [this] { return !running_; })) break;
      lock.unlock();
      sample_now();
      lock.lock();
    }
  }

  void halt() {
    {
      std::lock_guard lock(mu_);
      running_ = false;
    }
    cv_.notify_all();
    if (poller_.joinable()) poller_.join();
  }

  std::shared_ptr<FileSystem> fs_;
  double cadence_s_;
  Clock clock_;
  Channel<MeminfoSnapshot> channel_;
  std::thread poller_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool running_ = false;
  std::atomic<std::size_t> failed_reads_{0};
};

}  // namespace pagescope
