// pagescope: paired with/without huge page experiments, TLB sweeps, and
// host capability checks.
//
//   pagescope run --config exp.json --out results
//   pagescope run --mode-b thp --workload sum2d --simulate-counters
//   pagescope run --mode-b preload -- ./app input.par
//   pagescope tlbsim --trace block.trace --sizes 4K,2M,512M --entries 48
//   pagescope render --report a.json --report b.json --format svg --out fig.svg
//   pagescope doctor
//
// Exit status: 0 ok, 1 usage or input error, 2 workload failed, 3 counters
// or huge pages unavailable.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pagescope/pagescope.hpp"

namespace fs = std::filesystem;
using namespace pagescope;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitWorkload = 2;
constexpr int kExitCapability = 3;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::UnsupportedEvent:
    case Errc::PermissionDenied:
    case Errc::CounterUnavailable:
    case Errc::AllocationFailure:
      return kExitCapability;
    case Errc::WorkloadFailed:
      return kExitWorkload;
    default:
      return kExitUsage;
  }
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << text;
}

nlohmann::json parse_json(const std::string& text, const std::string& what) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::InvalidConfig, what + " is not valid JSON");
  return j;
}

AllocStrategy alloc_arg(const std::string& s) {
  if (s == "eager") return AllocStrategy::Eager;
  if (s == "demand") return AllocStrategy::OnDemand;
  throw Error(Errc::InvalidConfig, "--alloc must be eager or demand");
}

// --- run ---------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string mode_a, mode_b;
  bool simulate = false;
  std::string events;
  double freq_hz = 0;
  std::uint64_t line_bytes = 0;
  std::string workload;
  std::vector<std::string> command;
  std::uint64_t passes = 0;
  unsigned repetitions = 0;
  std::string layout;
  std::string alloc;
  std::uint64_t reserve = 0;
  std::string region;
  std::string label;
  double cadence = -1;
  bool strict = false;
  bool print_env = false;
  std::string fixture_dir;
  std::string out = "results";
  std::string format = "table";
};

ExperimentConfig build_config(const RunArgs& a) {
  nlohmann::json j = a.config.empty() ? nlohmann::json::object() : parse_json(slurp(a.config), a.config);
  // Command-line values land in the document before validation so strict
  // mode and defaults behave the same for flags and files.
  auto set_cpu = [&](const char* key, auto v) {
    if (!j.contains("cpu")) j["cpu"] = nlohmann::json::object();
    j["cpu"][key] = v;
  };
  if (a.freq_hz > 0) set_cpu("freq_hz", a.freq_hz);
  if (a.line_bytes > 0) set_cpu("cache_line_bytes", a.line_bytes);
  if (a.strict) j["strict"] = true;
  if (!a.command.empty()) {
    j["workload"] = {{"kind", "command"}, {"argv", a.command}};
  } else if (!a.workload.empty() || !a.layout.empty() || a.passes > 0 || !a.alloc.empty() || a.reserve > 0) {
    if (!j.contains("workload") || j["workload"].value("kind", "kernel") != "kernel") {
      j["workload"] = {{"kind", "kernel"}};
    }
    auto& w = j["workload"];
    if (!a.workload.empty()) w["pattern"] = a.workload;
    if (!a.layout.empty()) w["layout"] = a.layout;
    if (a.passes > 0) w["passes"] = a.passes;
    if (!a.alloc.empty()) w["alloc"] = a.alloc;
    if (a.reserve > 0) w["reserve_bytes"] = a.reserve;
  }
  if (!a.mode_a.empty() || !a.mode_b.empty()) {
    std::vector<std::string> modes = j.value("modes", std::vector<std::string>{"off", "thp"});
    if (!a.mode_a.empty()) modes.at(0) = a.mode_a;
    if (!a.mode_b.empty()) modes.at(1) = a.mode_b;
    j["modes"] = modes;
  }
  if (!a.events.empty()) j["events"] = a.events;
  if (a.repetitions > 0) j["repetitions"] = a.repetitions;
  if (a.cadence >= 0) j["monitor_cadence_s"] = a.cadence;
  if (!a.region.empty()) j["region"] = a.region;
  if (!a.label.empty()) j["case"] = a.label;
  if (a.simulate) {
    if (!j.contains("backend")) j["backend"] = nlohmann::json::object();
    j["backend"]["simulate_fallback"] = true;
  }
  if (a.print_env) j["launch"] = {{"fujitsu_print_env", true}};
  return config_from_json(j);
}

int cmd_run(const RunArgs& a) {
  auto cfg = build_config(a);
  auto env = a.fixture_dir.empty() ? ExperimentEnv::system()
                                   : ExperimentEnv::fixture(FixtureFileSystem::load_directory(a.fixture_dir));
  auto report = run_experiment(cfg, env);

  const auto path = fs::path(a.out) / (report.config_hash + ".json");
  spill(path, report_to_json(report).dump(2) + "\n");
  if (a.format == "csv") {
    std::cout << render_csv(report);
  } else {
    std::cout << render_table(report);
  }
  std::cerr << "report: " << path.string() << "\n";
  return report.failure ? kExitWorkload : 0;
}

// --- render ------------------------------------------------------------------

int cmd_render(const std::vector<std::string>& paths, const std::string& format, const std::string& out) {
  std::vector<ComparisonReport> reports;
  for (const auto& p : paths) reports.push_back(report_from_json(parse_json(slurp(p), p)));

  if (format == "svg") {
    auto doc = render_ratio_chart(std::span<const ComparisonReport>(reports));
    if (out.empty()) {
      std::cout << doc.svg;
    } else {
      auto csv = fs::path(out).replace_extension(".csv");
      spill(out, doc.svg);
      spill(csv, doc.csv);
      std::cerr << "wrote " << out << " and " << csv.string() << "\n";
    }
    return 0;
  }
  std::string text;
  for (const auto& r : reports) text += format == "csv" ? render_csv(r) : render_table(r);
  if (out.empty()) {
    std::cout << text;
  } else {
    spill(out, text);
  }
  return 0;
}

// --- tlbsim / trace / kernel -------------------------------------------------

int cmd_tlbsim(const std::string& trace_path, const std::string& sizes, std::uint64_t entries, std::uint64_t ways) {
  auto trace = read_trace(trace_path);
  TlbConfig cfg = TlbConfig::illustrative();
  cfg.entries = entries;
  cfg.associativity = ways == 0 ? entries : ways;
  std::cout << sweep_csv(page_size_sweep(trace.accesses, cfg, parse_size_list(sizes)));
  return 0;
}

int cmd_trace(const std::string& layout, const std::string& pattern, std::uint64_t passes, const std::string& out) {
  TraceMeta meta{parse_layout_spec(layout), traversal_from_name(pattern), passes};
  auto trace = gen_trace(meta.layout, meta.traversal, passes);
  write_trace(out, trace, meta);
  std::cerr << fmt::format("{} accesses, {} bytes of array -> {}\n", trace.accesses.size(), meta.layout.total_bytes(),
                           out);
  return 0;
}

int cmd_kernel(const std::string& layout, const std::string& pattern, std::uint64_t passes, const std::string& alloc,
               std::uint64_t reserve, const std::string& advice, unsigned workers) {
  auto fsys = std::make_shared<RealFileSystem>();
  auto clock = steady_clock_ns();
  KernelOptions opts;
  opts.alloc = alloc_arg(alloc);
  opts.reserve_bytes = reserve;
  opts.workers = workers;
  if (advice == "huge") {
    opts.advice = PageAdvice::HugePage;
  } else if (advice == "nohuge") {
    opts.advice = PageAdvice::NoHugePage;
  } else if (advice != "default") {
    throw Error(Errc::InvalidConfig, "--advice must be default, huge or nohuge");
  }

  std::optional<MeminfoSnapshot> before;
  try {
    before = read_meminfo(*fsys, clock);
  } catch (const Error&) {
  }
  std::vector<MeminfoSnapshot> during;
  opts.while_resident = [&] {
    try {
      during.push_back(read_meminfo(*fsys, clock));
    } catch (const Error&) {
    }
  };
  const auto t0 = clock();
  double sum = run_kernel(parse_layout_spec(layout), traversal_from_name(pattern), passes, 1.0, opts);
  const auto t1 = clock();
  std::cout << fmt::format("checksum {:.1f}  elapsed {:.3f} s\n", sum, static_cast<double>(t1 - t0) / 1e9);
  if (before && !during.empty()) {
    std::cout << "huge pages: " << describe_verdict(detect_usage(*before, during)) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pagescope: huge page experiments, TLB sweeps and host checks"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run a workload without and with huge pages and compare");
  run_cmd->add_option("--config", run.config, "JSON experiment config");
  run_cmd->add_option("--mode-a", run.mode_a, "baseline mode (default off)");
  run_cmd->add_option("--mode-b", run.mode_b, "treatment mode: thp|preload|fj-hugetlbfs|fj-thp|fj-none");
  run_cmd->add_flag("--simulate-counters", run.simulate, "use simulated counters if hardware counters fail");
  run_cmd->add_option("--events", run.events, "comma separated event names");
  run_cmd->add_option("--freq-hz", run.freq_hz, "core clock in Hz");
  run_cmd->add_option("--line-bytes", run.line_bytes, "bytes per cache miss");
  run_cmd->add_option("--workload", run.workload, "block-sweep|zone-sweep|var-sweep|sum2d|sum2d-rows");
  run_cmd->add_option("--layout", run.layout, "nvar,ni,nj,nk,blocks");
  run_cmd->add_option("--passes", run.passes);
  run_cmd->add_option("--alloc", run.alloc, "eager|demand");
  run_cmd->add_option("--reserve", run.reserve, "virtual bytes to map (>= layout size)");
  run_cmd->add_option("--repetitions", run.repetitions);
  run_cmd->add_option("--region", run.region, "region name");
  run_cmd->add_option("--label", run.label, "case label used in charts");
  run_cmd->add_option("--cadence", run.cadence, "meminfo poll interval in seconds (0 = edges only)");
  run_cmd->add_flag("--strict", run.strict, "require an explicit cache line size");
  run_cmd->add_flag("--print-env", run.print_env, "add XOS_MMM_L_PRINT_ENV=on to Fujitsu plans");
  run_cmd->add_option("--fixture-dir", run.fixture_dir, "read /proc and /sys from a fixture tree");
  run_cmd->add_option("--out", run.out, "results directory")->capture_default_str();
  run_cmd->add_option("--format", run.format, "table|csv")->capture_default_str();
  run_cmd->add_option("command", run.command, "external command, after --");

  std::vector<std::string> reports;
  std::string render_format = "table", render_out;
  auto* render_cmd = app.add_subcommand("render", "render saved reports");
  render_cmd->add_option("--report", reports, "report JSON (repeat for multi-case charts)")->required();
  render_cmd->add_option("--format", render_format, "table|csv|svg")
      ->check(CLI::IsMember({"table", "csv", "svg"}))
      ->capture_default_str();
  render_cmd->add_option("--out", render_out, "output file; svg also writes a .csv next to it");

  std::string trace_path, sizes = "4K,2M,512M";
  std::uint64_t entries = 48, ways = 0;
  auto* tlb_cmd = app.add_subcommand("tlbsim", "replay a trace through an LRU TLB at several page sizes");
  tlb_cmd->add_option("--trace", trace_path)->required();
  tlb_cmd->add_option("--sizes", sizes)->capture_default_str();
  tlb_cmd->add_option("--entries", entries)->capture_default_str();
  tlb_cmd->add_option("--ways", ways, "associativity (default fully associative)");

  std::string layout = "5,16,16,16,100", pattern = "block", alloc = "demand", advice = "default", out;
  std::uint64_t passes = 1, reserve = 0;
  unsigned workers = 1;
  auto* trace_cmd = app.add_subcommand("trace", "write the offset trace of a traversal");
  trace_cmd->add_option("--layout", layout)->capture_default_str();
  trace_cmd->add_option("--pattern", pattern, "zone|block|var|sum2d|sum2d-rows")->capture_default_str();
  trace_cmd->add_option("--passes", passes)->capture_default_str();
  trace_cmd->add_option("--out", out)->required();

  auto* kernel_cmd = app.add_subcommand("kernel", "run a traversal over real memory");
  kernel_cmd->add_option("--layout", layout)->capture_default_str();
  kernel_cmd->add_option("--pattern", pattern)->capture_default_str();
  kernel_cmd->add_option("--passes", passes)->capture_default_str();
  kernel_cmd->add_option("--alloc", alloc, "eager|demand")->capture_default_str();
  kernel_cmd->add_option("--reserve", reserve, "virtual bytes to map");
  kernel_cmd->add_option("--advice", advice, "default|huge|nohuge")->capture_default_str();
  kernel_cmd->add_option("--workers", workers)->capture_default_str();

  auto* doctor_cmd = app.add_subcommand("doctor", "report counter, THP and hugetlbfs readiness");

  std::string thp_set;
  bool allow_writes = false;
  auto* thp_cmd = app.add_subcommand("thp", "show or change the transparent huge page mode");
  thp_cmd->add_option("--set", thp_set, "always|madvise|never")->check(CLI::IsMember({"always", "madvise", "never"}));
  thp_cmd->add_flag("--allow-system-writes", allow_writes);

  std::string plan_mode;
  bool plan_print_env = false;
  std::vector<std::string> plan_command;
  auto* plan_cmd = app.add_subcommand("plan", "print how a command would be launched in a mode");
  plan_cmd->add_option("--mode", plan_mode)->required();
  plan_cmd->add_flag("--print-env", plan_print_env);
  plan_cmd->add_option("command", plan_command);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*render_cmd) return cmd_render(reports, render_format, render_out);
    if (*tlb_cmd) return cmd_tlbsim(trace_path, sizes, entries, ways);
    if (*trace_cmd) return cmd_trace(layout, pattern, passes, out);
    if (*kernel_cmd) return cmd_kernel(layout, pattern, passes, alloc, reserve, advice, workers);
    if (*doctor_cmd) {
      RealFileSystem fsys;
      std::cout << render_doctor(doctor(fsys));
      return 0;
    }
    if (*thp_cmd) {
      RealFileSystem fsys;
      if (!thp_set.empty()) {
        ThpMode mode = thp_set == "always" ? ThpMode::Always : thp_set == "madvise" ? ThpMode::Madvise : ThpMode::Never;
        write_thp(fsys, mode, allow_writes);
      }
      auto mode = read_thp(fsys);
      std::cout << (mode ? render_thp_state(*mode) : std::string("transparent huge pages not supported")) << "\n";
      return mode ? 0 : kExitCapability;
    }
    if (*plan_cmd) {
      auto plan = plan_launch(mode_from_name(plan_mode), LaunchOptions{plan_print_env});
      std::cout << plan.shell_line(plan_command) << "\n";
      for (const auto& n : plan.notes) std::cerr << "# " << n << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "pagescope: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "pagescope: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
