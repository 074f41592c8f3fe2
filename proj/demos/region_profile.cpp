// Nested regions with the simulated backend. Swap the backend for
// RealOsBackend{} on a host with perf access.

#include <iostream>

#include "pagescope/counters.hpp"
#include "pagescope/metrics.hpp"
#include "pagescope/render.hpp"

using namespace pagescope;

namespace {

RegionRecord profile(const SimulatedBackend& backend) {
  RegionCollector rc(open_session(backend, all_event_set()));
  {
    ScopedRegion outer(rc, "timestep");
    for (int i = 0; i < 3; ++i) {
      ScopedRegion eos(rc, "eos");
    }
  }
  return *rc.find("timestep");
}

}  // namespace

int main() {
  SimulatedBackend without{{{EventId::CpuCycles, 9'000'000},
                            {EventId::CacheMisses, 80'000},
                            {EventId::DtlbLoadMisses, 120'000},
                            {EventId::SveInstRetired, 4'300'000}}};
  auto with = without;
  with.increments[EventId::DtlbLoadMisses] = 5'600;
  with.increments[EventId::CpuCycles] = 8'400'000;

  CpuSpec cpu;
  auto rows = ratios(derive(profile(with), cpu), derive(profile(without), cpu), ElapsedPair{1.0, 1.0});
  std::cout << render_comparison_table("timestep (simulated)", rows, "Elapsed Timer (s)");
  for (const auto& r : rows) std::cout << measure_key(r.measure) << " ratio " << format_ratio(r.ratio) << "\n";
}
