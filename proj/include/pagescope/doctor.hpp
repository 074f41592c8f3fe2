#pragma once

// Read-only capability report: counter access, THP mode, meminfo, wrapper
// tools, and the node configuration checklist. Never changes the system.

#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "pagescope/counters.hpp"
#include "pagescope/hugepages.hpp"

namespace pagescope {

struct DoctorCheck {
  enum class Status : std::uint8_t { Ok, Warn, Missing };
  std::string name;
  Status status = Status::Ok;
  std::string detail;
};

struct ChecklistItem {
  std::string item;
  std::string how;
  std::optional<bool> satisfied;  // nullopt when it cannot be observed
};

struct DoctorReport {
  std::vector<DoctorCheck> checks;
  std::vector<std::string> advisories;
  std::vector<ChecklistItem> checklist;
};

inline constexpr std::string_view kBootParams = "hugepagesz=2M hugepagesz=512M default_hugepagesz=2M";

inline DoctorReport doctor(FileSystem& fs, const RealOsBackend& counters = {}) {
  using S = DoctorCheck::Status;
  DoctorReport rep;

  // Counters.
  std::optional<int> paranoid;
  if (auto text = fs.read_file(kPerfParanoidPath)) {
    try {
      paranoid = std::stoi(*text);
    } catch (const std::exception&) {
    }
  }
  rep.checks.push_back({"perf_event_paranoid", paranoid ? (*paranoid <= 1 ? S::Ok : S::Warn) : S::Missing,
                        paranoid ? std::to_string(*paranoid) : "unreadable"});
  auto probe = probe_events(counters, all_event_set());
  bool denied = false;
  bool cycles_ok = false;
  for (const auto& e : probe) {
    rep.checks.push_back({std::string(event_name(e.id)), e.available ? S::Ok : S::Missing,
                          e.available ? "available" : e.reason});
    denied |= e.error == Errc::PermissionDenied;
    cycles_ok |= e.id == EventId::CpuCycles && e.available;
  }
  if (denied || (paranoid && *paranoid > 1)) {
    rep.advisories.push_back(fmt::format("perf_event_paranoid too strict ({}); set kernel.perf_event_paranoid=1",
                                         paranoid ? std::to_string(*paranoid) : "unknown"));
  } else if (!cycles_ok) {
    rep.advisories.push_back("hardware counters unavailable on this host; use --simulate-counters");
  }

  // Transparent huge pages.
  std::optional<ThpMode> thp;
  try {
    thp = read_thp(fs);
    rep.checks.push_back({"transparent_hugepage", thp ? S::Ok : S::Missing,
                          thp ? render_thp_state(*thp) : "no " + std::string(kThpEnabledPath)});
  } catch (const Error& e) {
    rep.checks.push_back({"transparent_hugepage", S::Warn, e.what()});
  }
  if (!thp) {
    rep.advisories.push_back("transparent huge pages not supported by this kernel");
  } else if (*thp == ThpMode::Never) {
    rep.advisories.push_back("transparent huge pages disabled");
  }

  // meminfo.
  std::optional<MeminfoSnapshot> mem;
  try {
    mem = read_meminfo(fs, {});
    rep.checks.push_back({"meminfo", S::Ok,
                          fmt::format("Hugepagesize {} kB, HugePages_Total {}, AnonHugePages {} kB",
                                      mem->hugepagesize_kb, mem->hp_total, mem->anon_huge_kb)});
    if (!is_supported_hugepagesize(mem->hugepagesize_kb)) {
      rep.advisories.push_back(fmt::format("Hugepagesize {} kB is neither 2 MiB nor 512 MiB", mem->hugepagesize_kb));
    }
  } catch (const Error& e) {
    rep.checks.push_back({"meminfo", S::Missing, e.what()});
    rep.advisories.push_back(std::string("/proc/meminfo unusable: ") + e.what());
  }

  // Wrapper tools.
  for (const char* tool : {"hugectl", "hugeadm"}) {
    bool present = fs.has_executable(tool);
    rep.checks.push_back({tool, present ? S::Ok : S::Missing, present ? "on PATH" : "not found"});
    if (!present) rep.advisories.push_back(fmt::format("{} not found; install libhugetlbfs-utils", tool));
  }

  // Node checklist. Advisory only: huge pages may work without any of it.
  std::optional<bool> boot;
  if (auto cmdline = fs.read_file(kKernelCmdlinePath)) {
    boot = cmdline->find("hugepagesz=2M") != std::string::npos &&
           cmdline->find("hugepagesz=512M") != std::string::npos &&
           cmdline->find("default_hugepagesz=2M") != std::string::npos;
  }
  rep.checklist.push_back({"kernel boot parameters", std::string(kBootParams), boot});
  rep.checklist.push_back({"perf counter access", "sysctl kernel.perf_event_paranoid=1",
                           paranoid ? std::optional<bool>(*paranoid <= 1) : std::nullopt});
  rep.checklist.push_back({"libhugetlbfs-utils installed", "provides hugeadm and hugectl",
                           fs.has_executable("hugeadm") && fs.has_executable("hugectl")});
  rep.checklist.push_back({"hugetlb_shm_group", "UNIX group for users allowed to use huge page shared memory",
                           std::nullopt});
  rep.checklist.push_back({"enable THP", "echo always > /sys/kernel/mm/transparent_hugepage/enabled",
                           thp ? std::optional<bool>(*thp == ThpMode::Always) : std::nullopt});
  rep.checklist.push_back({"disable THP", "echo never > /sys/kernel/mm/transparent_hugepage/enabled", std::nullopt});
  return rep;
}

inline std::string render_doctor(const DoctorReport& rep) {
  auto status = [](DoctorCheck::Status s) {
    switch (s) {
      case DoctorCheck::Status::Ok: return "ok";
      case DoctorCheck::Status::Warn: return "warn";
      case DoctorCheck::Status::Missing: return "missing";
    }
    return "?";
  };
  std::string out = "checks:\n";
  for (const auto& c : rep.checks) out += fmt::format("  [{:<7}] {:<40} {}\n", status(c.status), c.name, c.detail);
  out += "advisories:\n";
  if (rep.advisories.empty()) out += "  (none)\n";
  for (const auto& a : rep.advisories) out += fmt::format("  - {}\n", a);
  out += "node checklist (advisory, never applied):\n";
  for (const auto& item : rep.checklist) {
    auto mark = item.satisfied ? (*item.satisfied ? "x" : " ") : "?";
    out += fmt::format("  [{}] {}: {}\n", mark, item.item, item.how);
  }
  return out;
}

}  // namespace pagescope
