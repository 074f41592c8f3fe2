#pragma once

// Paired with/without huge page experiments.
//
// For each mode the orchestrator builds the launch plan, snapshots meminfo,
// starts the background monitor, runs the workload inside a counter region,
// and derives metrics. Repetitions are reduced by median per measure before
// ratios are taken. One experiment at a time per host: modes share machine
// state.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <spawn.h>
#include <sys/utsname.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

#include "pagescope/blockmesh.hpp"
#include "pagescope/config.hpp"
#include "pagescope/counters.hpp"
#include "pagescope/error.hpp"
#include "pagescope/hugepages.hpp"
#include "pagescope/metrics.hpp"

extern char** environ;

namespace pagescope {

struct ExperimentEnv {
  std::shared_ptr<FileSystem> fs;
  Clock clock;
  std::string host;
  RealOsBackend os_backend;
  // Stamps meminfo snapshots. Kept apart from `clock` so background polling
  // cannot perturb a stepping clock's timings.
  Clock monitor_clock;

  static ExperimentEnv system() {
    ExperimentEnv env{std::make_shared<RealFileSystem>(), steady_clock_ns(), {}, {}, steady_clock_ns()};
    utsname u{};
    if (::uname(&u) == 0) env.host = fmt::format("{} {} {} {}", u.nodename, u.sysname, u.release, u.machine);
    return env;
  }

  // Reproducible environment: fixture files, a clock that ticks one second
  // per reading, and a fixed host descriptor.
  static ExperimentEnv fixture(std::shared_ptr<FileSystem> fs) {
    return ExperimentEnv{std::move(fs), stepping_clock(1'000'000'000), "fixture", {}, stepping_clock(1'000'000)};
  }
};

struct RunResult {
  HugePageMode mode = HugePageMode::Off;
  std::vector<RegionRecord> records;            // summed over repetitions
  std::map<std::string, DerivedMetrics> metrics;  // median over repetitions
  UsageVerdict verdict;
  double elapsed_s = 0.0;  // whole-run wall time, median over repetitions
  unsigned repetitions = 0;
  bool counters_simulated = false;
  std::vector<std::string> notes;
};

struct RegionComparison {
  std::string name;
  std::vector<RatioRow> rows;
  std::vector<std::string> flags;
};

struct WorkloadFailure {
  HugePageMode mode = HugePageMode::Off;
  int exit_status = 0;
  std::string message;
};

struct ComparisonReport {
  static constexpr std::string_view kSchema = "pagescope.report/1";

  std::string case_label;
  nlohmann::json config;
  std::string config_hash;
  std::int64_t started_ns = 0;
  std::int64_t finished_ns = 0;
  std::string host;
  HugePageMode baseline = HugePageMode::Off;
  HugePageMode treatment = HugePageMode::Transparent;
  std::vector<RunResult> runs;
  std::vector<RegionComparison> regions;
  std::optional<WorkloadFailure> failure;
  bool treatment_verdict_mismatch = false;
  // Region time comes from cycles/frequency; the timer row is the whole
  // run's wall clock. They measure different spans.
  std::string region_seconds_label = std::string(measure_label(Measure::Seconds));
  std::string timer_label = std::string(measure_label(Measure::ElapsedTimer));

  [[nodiscard]] const RunResult* run_for(HugePageMode mode) const {
    for (const auto& r : runs) {
      if (r.mode == mode) return &r;
    }
    return nullptr;
  }
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::optional<double> median_optional(const std::vector<std::optional<double>>& v) {
  std::vector<double> present;
  for (const auto& x : v) {
    if (!x) return std::nullopt;
    present.push_back(*x);
  }
  if (present.empty()) return std::nullopt;
  return median(std::move(present));
}

}  // namespace detail

inline DerivedMetrics median_metrics(const std::vector<DerivedMetrics>& reps) {
  DerivedMetrics out;
  std::vector<double> cycles, seconds;
  std::vector<std::optional<double>> sve, bw, dtlb;
  for (const auto& m : reps) {
    cycles.push_back(m.hw_cycles);
    seconds.push_back(m.seconds);
    sve.push_back(m.sve_per_cycle);
    bw.push_back(m.bandwidth_bytes_per_s);
    dtlb.push_back(m.dtlb_misses_per_s);
  }
  out.hw_cycles = detail::median(cycles);
  out.seconds = detail::median(seconds);
  out.sve_per_cycle = detail::median_optional(sve);
  out.bandwidth_bytes_per_s = detail::median_optional(bw);
  out.dtlb_misses_per_s = detail::median_optional(dtlb);
  return out;
}

// Active beats Indeterminate beats Inactive; evidence keeps the largest
// delta per field.
inline UsageVerdict combine_verdicts(const std::vector<UsageVerdict>& verdicts) {
  UsageVerdict out;
  out.kind = UsageVerdict::Kind::Inactive;
  for (const auto& v : verdicts) {
    if (v.kind == UsageVerdict::Kind::Active) {
      out.kind = UsageVerdict::Kind::Active;
      for (const auto& e : v.evidence) {
        auto it = std::find_if(out.evidence.begin(), out.evidence.end(),
                               [&](const UsageEvidence& x) { return x.field == e.field; });
        if (it == out.evidence.end()) {
          out.evidence.push_back(e);
        } else {
          it->delta = std::max(it->delta, e.delta);
        }
      }
    } else if (v.kind == UsageVerdict::Kind::Indeterminate && out.kind == UsageVerdict::Kind::Inactive) {
      out.kind = UsageVerdict::Kind::Indeterminate;
      out.reason = v.reason;
    }
  }
  if (out.kind == UsageVerdict::Kind::Active) out.reason.clear();
  return out;
}

// Spawns argv with the plan applied and waits. Returns the exit status;
// 127 when the program could not be started, 128+N for signal N.
inline int run_command(const LaunchPlan& plan, const std::vector<std::string>& command) {
  auto argv_strings = plan.argv_for(command);
  std::vector<char*> argv;
  for (auto& a : argv_strings) argv.push_back(a.data());
  argv.push_back(nullptr);

  std::map<std::string, std::string> env_map;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view kv(*e);
    auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    env_map[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
  }
  for (const auto& [k, v] : plan.env) env_map[k] = v;
  std::vector<std::string> env_strings;
  for (const auto& [k, v] : env_map) env_strings.push_back(k + "=" + v);
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);

  pid_t pid = 0;
  if (::posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), envp.data()) != 0) return 127;
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return 127;
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return 127;
}

namespace detail {

struct RepetitionOutcome {
  std::vector<RegionRecord> records;
  UsageVerdict verdict;
  double elapsed_s = 0.0;
  bool simulated = false;
  std::optional<WorkloadFailure> failure;
  std::vector<std::string> notes;
};

inline CounterSession open_for_mode(const ExperimentConfig& cfg, const ExperimentEnv& env, bool treatment,
                                    bool& simulated, std::vector<std::string>& notes) {
  const auto& sim = treatment ? cfg.sim_treatment : cfg.sim_baseline;
  if (cfg.backend == BackendKind::Simulated) {
    simulated = true;
    return open_session(sim, cfg.events);
  }
  auto os = env.os_backend;
  os.inherit = cfg.workload.kind == WorkloadSpec::Kind::Command;
  try {
    simulated = false;
    return open_session(os, cfg.events);
  } catch (const Error& e) {
    if (!cfg.simulate_fallback) throw Error(Errc::CounterUnavailable, e.what());
    notes.push_back(std::string("hardware counters unavailable, using simulated counters: ") + e.what());
    simulated = true;
    return open_session(sim, cfg.events);
  }
}

inline RepetitionOutcome run_once(const ExperimentConfig& cfg, const ExperimentEnv& env, HugePageMode mode,
                                  bool treatment) {
  RepetitionOutcome out;
  const auto plan = plan_launch(mode, cfg.launch);

  std::optional<MeminfoSnapshot> before;
  try {
    before = read_meminfo(*env.fs, env.monitor_clock);
  } catch (const Error& e) {
    out.notes.push_back(std::string("meminfo unavailable: ") + e.what());
  }

  RegionCollector collector(open_for_mode(cfg, env, treatment, out.simulated, out.notes));
  MeminfoMonitor monitor(env.fs, cfg.monitor_cadence_s, env.monitor_clock);
  monitor.start();

  const auto t0 = env.clock();
  collector.begin(cfg.region);
  if (cfg.workload.kind == WorkloadSpec::Kind::Kernel) {
    const auto& w = cfg.workload;
    KernelOptions opts;
    opts.alloc = w.alloc;
    opts.reserve_bytes = w.reserve_bytes;
    opts.workers = w.workers;
    // In-process kernels cannot be wrapped by hugectl or a preload library;
    // madvise is the in-process equivalent of requesting huge pages.
    opts.advice = requests_huge_pages(mode) ? PageAdvice::HugePage : PageAdvice::NoHugePage;
    opts.while_resident = [&monitor] { monitor.sample_now(); };
    run_kernel(w.layout, w.traversal, w.passes, w.fill, opts);
  } else {
    int status = run_command(plan, cfg.workload.argv);
    if (status != 0) {
      out.failure = WorkloadFailure{mode, status,
                                    fmt::format("'{}' exited with status {}", plan.shell_line(cfg.workload.argv),
                                                status)};
    }
  }
  collector.end(cfg.region);
  const auto t1 = env.clock();
  auto during = monitor.stop();

  out.records = collector.records();
  out.elapsed_s = elapsed_timer({static_cast<double>(t0) / 1e9, static_cast<double>(t1) / 1e9});
  if (before && !during.empty()) {
    out.verdict = detect_usage(*before, during);
  } else {
    out.verdict = UsageVerdict{UsageVerdict::Kind::Indeterminate, {}, "meminfo unavailable"};
  }
  return out;
}

}  // namespace detail

// Runs baseline then treatment. A failing workload stops the experiment;
// whatever completed is kept and the failure is recorded in the report.
// Counter access problems throw CounterUnavailable unless the config allows
// the simulated fallback.
inline ComparisonReport run_experiment(const ExperimentConfig& cfg, const ExperimentEnv& env) {
  cfg.validate();
  ComparisonReport report;
  report.case_label = cfg.label();
  report.config = config_to_json(cfg);
  report.config_hash = config_hash(cfg);
  report.host = env.host;
  report.baseline = cfg.baseline;
  report.treatment = cfg.treatment;
  report.started_ns = env.clock();

  for (auto [mode, treatment] : {std::pair{cfg.baseline, false}, std::pair{cfg.treatment, true}}) {
    RunResult run;
    run.mode = mode;
    std::map<std::string, std::vector<DerivedMetrics>> per_region;
    std::vector<UsageVerdict> verdicts;
    std::vector<double> elapsed;
    std::vector<RegionRecord> all_records;
    for (unsigned rep = 0; rep < cfg.repetitions; ++rep) {
      auto outcome = detail::run_once(cfg, env, mode, treatment);
      for (auto& n : outcome.notes) {
        if (std::find(run.notes.begin(), run.notes.end(), n) == run.notes.end()) run.notes.push_back(n);
      }
      run.counters_simulated = outcome.simulated;
      if (outcome.failure) {
        report.failure = outcome.failure;
        break;
      }
      ++run.repetitions;
      verdicts.push_back(outcome.verdict);
      elapsed.push_back(outcome.elapsed_s);
      for (const auto& r : outcome.records) {
        all_records.push_back(r);
        try {
          per_region[r.name].push_back(derive(r, cfg.cpu));
        } catch (const Error& e) {
          run.notes.push_back(fmt::format("region \"{}\": {}", r.name, e.what()));
        }
      }
    }
    if (report.failure) {
      if (run.repetitions > 0) report.runs.push_back(std::move(run));
      break;
    }
    for (auto& [name, rec] : aggregate(all_records)) run.records.push_back(rec);
    for (auto& [name, reps] : per_region) run.metrics[name] = median_metrics(reps);
    run.verdict = combine_verdicts(verdicts);
    run.elapsed_s = detail::median(elapsed);
    report.runs.push_back(std::move(run));
  }

  const auto* base = report.run_for(cfg.baseline);
  const auto* treat = report.run_for(cfg.treatment);
  if (base != nullptr && treat != nullptr) {
    for (const auto& [name, base_metrics] : base->metrics) {
      RegionComparison cmp;
      cmp.name = name;
      if (name.empty()) cmp.flags.push_back("empty-region-name");
      auto it = treat->metrics.find(name);
      if (it == treat->metrics.end()) {
        cmp.flags.push_back("missing-in-treatment");
        report.regions.push_back(std::move(cmp));
        continue;
      }
      cmp.rows = ratios(it->second, base_metrics, ElapsedPair{treat->elapsed_s, base->elapsed_s});
      report.regions.push_back(std::move(cmp));
    }
    report.treatment_verdict_mismatch = requests_huge_pages(cfg.treatment) &&
                                        treat->verdict.kind != UsageVerdict::Kind::Active;
  }
  report.finished_ns = env.clock();
  return report;
}

// --- JSON ---------------------------------------------------------------------

namespace detail {

inline nlohmann::json optional_to_json(std::optional<double> v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> optional_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

inline nlohmann::json verdict_to_json(const UsageVerdict& v) {
  nlohmann::json evidence = nlohmann::json::array();
  for (const auto& e : v.evidence) evidence.push_back({{"field", e.field}, {"delta", e.delta}});
  return {{"kind", verdict_name(v.kind)}, {"evidence", evidence}, {"reason", v.reason}};
}

inline UsageVerdict verdict_from_json(const nlohmann::json& j) {
  UsageVerdict v;
  v.kind = verdict_from_name(j.at("kind").get<std::string>());
  for (const auto& e : j.value("evidence", nlohmann::json::array())) {
    v.evidence.push_back({e.at("field").get<std::string>(), e.at("delta").get<std::int64_t>()});
  }
  v.reason = j.value("reason", std::string());
  return v;
}

inline nlohmann::json metrics_to_json(const DerivedMetrics& m) {
  return {{"hw_cycles", m.hw_cycles},
          {"seconds", m.seconds},
          {"sve_per_cycle", optional_to_json(m.sve_per_cycle)},
          {"bandwidth_bytes_per_s", optional_to_json(m.bandwidth_bytes_per_s)},
          {"dtlb_misses_per_s", optional_to_json(m.dtlb_misses_per_s)}};
}

inline DerivedMetrics metrics_from_json(const nlohmann::json& j) {
  DerivedMetrics m;
  m.hw_cycles = j.at("hw_cycles").get<double>();
  m.seconds = j.at("seconds").get<double>();
  m.sve_per_cycle = optional_from_json(j.at("sve_per_cycle"));
  m.bandwidth_bytes_per_s = optional_from_json(j.at("bandwidth_bytes_per_s"));
  m.dtlb_misses_per_s = optional_from_json(j.at("dtlb_misses_per_s"));
  return m;
}

inline nlohmann::json record_to_json(const RegionRecord& r) {
  nlohmann::json totals = nlohmann::json::object();
  for (const auto& [id, v] : r.totals) totals[std::string(event_name(id))] = v;
  return {{"name", r.name}, {"region_count", r.region_count}, {"totals", totals}};
}

inline RegionRecord record_from_json(const nlohmann::json& j) {
  RegionRecord r;
  r.name = j.at("name").get<std::string>();
  r.region_count = j.at("region_count").get<std::uint64_t>();
  r.totals = increments_from_json(j.at("totals"));
  return r;
}

}  // namespace detail

inline nlohmann::json report_to_json(const ComparisonReport& r) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& run : r.runs) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& rec : run.records) records.push_back(detail::record_to_json(rec));
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [name, m] : run.metrics) metrics[name] = detail::metrics_to_json(m);
    runs.push_back({{"mode", mode_name(run.mode)},
                    {"records", records},
                    {"metrics", metrics},
                    {"verdict", detail::verdict_to_json(run.verdict)},
                    {"elapsed_s", run.elapsed_s},
                    {"repetitions", run.repetitions},
                    {"counters_simulated", run.counters_simulated},
                    {"notes", run.notes}});
  }
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& region : r.regions) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : region.rows) {
      rows.push_back({{"measure", measure_key(row.measure)},
                      {"label", measure_label(row.measure)},
                      {"without_hp", detail::optional_to_json(row.without_hp)},
                      {"with_hp", detail::optional_to_json(row.with_hp)},
                      {"ratio", detail::optional_to_json(row.ratio)}});
    }
    regions.push_back({{"name", region.name}, {"flags", region.flags}, {"ratios", rows}});
  }
  nlohmann::json failure = nullptr;
  if (r.failure) {
    failure = {{"mode", mode_name(r.failure->mode)},
               {"exit_status", r.failure->exit_status},
               {"message", r.failure->message}};
  }
  return {
      {"schema", ComparisonReport::kSchema},
      {"case", r.case_label},
      {"config_hash", r.config_hash},
      {"config", r.config},
      {"provenance", {{"started_ns", r.started_ns}, {"finished_ns", r.finished_ns}, {"host", r.host}}},
      {"modes", {{"baseline", mode_name(r.baseline)}, {"treatment", mode_name(r.treatment)}}},
      {"labels", {{"region_seconds", r.region_seconds_label}, {"timer", r.timer_label}}},
      {"runs", runs},
      {"regions", regions},
      {"treatment_verdict_mismatch", r.treatment_verdict_mismatch},
      {"failure", failure},
  };
}

inline ComparisonReport report_from_json(const nlohmann::json& j) {
  ComparisonReport r;
  try {
    if (j.value("schema", std::string()) != ComparisonReport::kSchema) {
      throw Error(Errc::InvalidConfig, "not a pagescope report (schema mismatch)");
    }
    r.case_label = j.value("case", std::string());
    r.config_hash = j.value("config_hash", std::string());
    r.config = j.value("config", nlohmann::json::object());
    if (j.contains("provenance")) {
      const auto& p = j.at("provenance");
      r.started_ns = p.value("started_ns", std::int64_t{0});
      r.finished_ns = p.value("finished_ns", std::int64_t{0});
      r.host = p.value("host", std::string());
    }
    r.baseline = mode_from_name(j.at("modes").at("baseline").get<std::string>());
    r.treatment = mode_from_name(j.at("modes").at("treatment").get<std::string>());
    if (j.contains("labels")) {
      r.region_seconds_label = j.at("labels").value("region_seconds", r.region_seconds_label);
      r.timer_label = j.at("labels").value("timer", r.timer_label);
    }
    for (const auto& run_j : j.value("runs", nlohmann::json::array())) {
      RunResult run;
      run.mode = mode_from_name(run_j.at("mode").get<std::string>());
      for (const auto& rec : run_j.at("records")) run.records.push_back(detail::record_from_json(rec));
      for (const auto& [name, m] : run_j.at("metrics").items()) run.metrics[name] = detail::metrics_from_json(m);
      run.verdict = detail::verdict_from_json(run_j.at("verdict"));
      run.elapsed_s = run_j.at("elapsed_s").get<double>();
      run.repetitions = run_j.value("repetitions", 0u);
      run.counters_simulated = run_j.value("counters_simulated", false);
      run.notes = run_j.value("notes", std::vector<std::string>{});
      r.runs.push_back(std::move(run));
    }
    for (const auto& region_j : j.value("regions", nlohmann::json::array())) {
      RegionComparison cmp;
      cmp.name = region_j.at("name").get<std::string>();
      cmp.flags = region_j.value("flags", std::vector<std::string>{});
      for (const auto& row_j : region_j.at("ratios")) {
        auto m = measure_from_key(row_j.at("measure").get<std::string>());
        if (!m) throw Error(Errc::InvalidConfig, "unknown measure in report");
        cmp.rows.push_back(RatioRow{*m, detail::optional_from_json(row_j.at("with_hp")),
                                    detail::optional_from_json(row_j.at("without_hp")),
                                    detail::optional_from_json(row_j.at("ratio"))});
      }
      r.regions.push_back(std::move(cmp));
    }
    r.treatment_verdict_mismatch = j.value("treatment_verdict_mismatch", false);
    if (j.contains("failure") && !j.at("failure").is_null()) {
      const auto& f = j.at("failure");
      r.failure = WorkloadFailure{mode_from_name(f.at("mode").get<std::string>()), f.at("exit_status").get<int>(),
                                  f.value("message", std::string())};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("malformed report: ") + e.what());
  }
  return r;
}

}  // namespace pagescope
