#pragma once

// Experiment configuration and its JSON form.

#include <cstdint>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "pagescope/blockmesh.hpp"
#include "pagescope/counters.hpp"
#include "pagescope/error.hpp"
#include "pagescope/events.hpp"
#include "pagescope/hugepages.hpp"
#include "pagescope/metrics.hpp"

namespace pagescope {

struct WorkloadSpec {
  enum class Kind : std::uint8_t { Kernel, Command };

  Kind kind = Kind::Kernel;
  UnkLayout layout = UnkLayout::cube(5, 16, 100);
  Traversal traversal{TraversalPattern::BlockSweep};
  std::uint64_t passes = 1;
  AllocStrategy alloc = AllocStrategy::OnDemand;
  std::uint64_t reserve_bytes = 0;
  double fill = 1.0;
  unsigned workers = 1;
  std::vector<std::string> argv;  // Command only
};

enum class BackendKind : std::uint8_t { RealOs, Simulated };

// Flat per-read increments used when no table is configured. Both modes get
// the same table, so every ratio is 1 unless the config says otherwise.
inline std::map<EventId, std::uint64_t> default_simulated_increments() {
  return {
      {EventId::CpuCycles, 1'000'000},          {EventId::CacheMisses, 10'000},
      {EventId::DtlbLoadMisses, 10'000},        {EventId::SveInstRetired, 500'000},
      {EventId::StalledCyclesBackend, 400'000}, {EventId::StalledCyclesFrontend, 50'000},
  };
}

struct ExperimentConfig {
  std::string region = "kernel";
  std::string case_label;  // chart legend; defaults to the region name
  WorkloadSpec workload;
  HugePageMode baseline = HugePageMode::Off;
  HugePageMode treatment = HugePageMode::Transparent;
  EventSet events = all_event_set();
  CpuSpec cpu;
  // When set, cache_line_bytes must be given explicitly in the config file.
  bool strict = false;
  unsigned repetitions = 1;
  double monitor_cadence_s = 1.0;
  BackendKind backend = BackendKind::RealOs;
  // Use the simulated tables when the OS counters cannot be opened.
  bool simulate_fallback = false;
  SimulatedBackend sim_baseline{default_simulated_increments()};
  SimulatedBackend sim_treatment{default_simulated_increments()};
  LaunchOptions launch;

  [[nodiscard]] std::string label() const { return case_label.empty() ? region : case_label; }

  void validate() const {
    if (repetitions < 1) throw Error(Errc::InvalidConfig, "repetitions must be at least 1");
    if (baseline == treatment) throw Error(Errc::InvalidConfig, "baseline and treatment modes must differ");
    if (events.empty()) throw Error(Errc::InvalidConfig, "event set is empty");
    if (monitor_cadence_s < 0.0) throw Error(Errc::InvalidConfig, "monitor cadence must be >= 0");
    cpu.validate();
    if (workload.kind == WorkloadSpec::Kind::Kernel) {
      workload.layout.validate();
      if (workload.passes < 1) throw Error(Errc::InvalidConfig, "passes must be at least 1");
    } else if (workload.argv.empty()) {
      throw Error(Errc::InvalidConfig, "command workload needs an argv");
    }
  }
};

namespace detail {

inline nlohmann::json increments_to_json(const std::map<EventId, std::uint64_t>& inc) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, v] : inc) j[std::string(event_name(id))] = v;
  return j;
}

inline std::map<EventId, std::uint64_t> increments_from_json(const nlohmann::json& j) {
  std::map<EventId, std::uint64_t> inc;
  for (const auto& [name, v] : j.items()) {
    auto id = event_from_name(name);
    if (!id) throw Error(Errc::UnsupportedEvent, "unknown event name '" + name + "'");
    inc[*id] = v.get<std::uint64_t>();
  }
  return inc;
}

inline std::string_view alloc_name(AllocStrategy a) { return a == AllocStrategy::Eager ? "eager" : "demand"; }

inline AllocStrategy alloc_from_name(std::string_view name) {
  if (name == "eager") return AllocStrategy::Eager;
  if (name == "demand") return AllocStrategy::OnDemand;
  throw Error(Errc::InvalidConfig, "unknown allocation strategy '" + std::string(name) + "'");
}

}  // namespace detail

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json workload;
  if (c.workload.kind == WorkloadSpec::Kind::Kernel) {
    workload = {{"kind", "kernel"},
                {"layout", layout_to_json(c.workload.layout)},
                {"pattern", traversal_name(c.workload.traversal)},
                {"passes", c.workload.passes},
                {"alloc", detail::alloc_name(c.workload.alloc)},
                {"reserve_bytes", c.workload.reserve_bytes},
                {"fill", c.workload.fill},
                {"workers", c.workload.workers}};
  } else {
    workload = {{"kind", "command"}, {"argv", c.workload.argv}};
  }
  nlohmann::json events = nlohmann::json::array();
  for (auto id : c.events) events.push_back(std::string(event_name(id)));
  return {
      {"region", c.region},
      {"case", c.case_label},
      {"workload", workload},
      {"modes", {std::string(mode_name(c.baseline)), std::string(mode_name(c.treatment))}},
      {"events", events},
      {"cpu", {{"freq_hz", c.cpu.freq_hz}, {"cache_line_bytes", c.cpu.cache_line_bytes}}},
      {"strict", c.strict},
      {"repetitions", c.repetitions},
      {"monitor_cadence_s", c.monitor_cadence_s},
      {"backend",
       {{"kind", c.backend == BackendKind::Simulated ? "simulated" : "real"},
        {"simulate_fallback", c.simulate_fallback},
        {"tick_ns", c.sim_baseline.tick_ns},
        {"baseline", detail::increments_to_json(c.sim_baseline.increments)},
        {"treatment", detail::increments_to_json(c.sim_treatment.increments)}}},
      {"launch", {{"fujitsu_print_env", c.launch.fujitsu_print_env}}},
  };
}

// Missing keys keep their defaults. In strict mode cpu.cache_line_bytes is
// mandatory because no counter reports the bytes moved per miss.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.region = j.value("region", c.region);
    c.case_label = j.value("case", c.case_label);
    c.strict = j.value("strict", c.strict);
    if (j.contains("workload")) {
      const auto& w = j.at("workload");
      auto kind = w.value("kind", std::string("kernel"));
      if (kind == "command") {
        c.workload.kind = WorkloadSpec::Kind::Command;
        c.workload.argv = w.at("argv").get<std::vector<std::string>>();
        if (!j.contains("region")) c.region = "main";
      } else if (kind == "kernel") {
        if (w.contains("layout")) {
          const auto& l = w.at("layout");
          c.workload.layout = l.is_string() ? parse_layout_spec(l.get<std::string>()) : layout_from_json(l);
        }
        if (w.contains("pattern")) c.workload.traversal = traversal_from_name(w.at("pattern").get<std::string>());
        c.workload.passes = w.value("passes", c.workload.passes);
        if (w.contains("alloc")) c.workload.alloc = detail::alloc_from_name(w.at("alloc").get<std::string>());
        c.workload.reserve_bytes = w.value("reserve_bytes", c.workload.reserve_bytes);
        c.workload.fill = w.value("fill", c.workload.fill);
        c.workload.workers = w.value("workers", c.workload.workers);
      } else {
        throw Error(Errc::InvalidConfig, "unknown workload kind '" + kind + "'");
      }
    }
    if (j.contains("modes")) {
      auto modes = j.at("modes").get<std::vector<std::string>>();
      if (modes.size() != 2) throw Error(Errc::InvalidConfig, "modes must be [baseline, treatment]");
      c.baseline = mode_from_name(modes[0]);
      c.treatment = mode_from_name(modes[1]);
    }
    if (j.contains("events")) {
      const auto& e = j.at("events");
      if (e.is_string()) {
        c.events = parse_event_list(e.get<std::string>());
      } else {
        c.events.clear();
        for (const auto& name : e.get<std::vector<std::string>>()) {
          auto id = event_from_name(name);
          if (!id) throw Error(Errc::UnsupportedEvent, "unknown event name '" + name + "'");
          c.events.insert(*id);
        }
      }
    }
    if (j.contains("cpu")) {
      const auto& cpu = j.at("cpu");
      c.cpu.freq_hz = cpu.value("freq_hz", c.cpu.freq_hz);
      c.cpu.cache_line_bytes = cpu.value("cache_line_bytes", c.cpu.cache_line_bytes);
    }
    if (c.strict && !(j.contains("cpu") && j.at("cpu").contains("cache_line_bytes"))) {
      throw Error(Errc::InvalidConfig, "strict mode requires cpu.cache_line_bytes");
    }
    c.repetitions = j.value("repetitions", c.repetitions);
    c.monitor_cadence_s = j.value("monitor_cadence_s", c.monitor_cadence_s);
    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      auto kind = b.value("kind", std::string("real"));
      if (kind == "simulated") {
        c.backend = BackendKind::Simulated;
      } else if (kind != "real") {
        throw Error(Errc::InvalidConfig, "unknown backend kind '" + kind + "'");
      }
      c.simulate_fallback = b.value("simulate_fallback", c.simulate_fallback);
      auto tick = b.value("tick_ns", c.sim_baseline.tick_ns);
      if (b.contains("baseline")) c.sim_baseline.increments = detail::increments_from_json(b.at("baseline"));
      if (b.contains("treatment")) c.sim_treatment.increments = detail::increments_from_json(b.at("treatment"));
      c.sim_baseline.tick_ns = tick;
      c.sim_treatment.tick_ns = tick;
    }
    if (j.contains("launch")) c.launch.fujitsu_print_env = j.at("launch").value("fujitsu_print_env", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
  c.validate();
  return c;
}

// FNV-1a over the canonical JSON dump. Stable across runs and platforms.
inline std::string config_hash(const ExperimentConfig& c) {
  const auto text = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace pagescope
