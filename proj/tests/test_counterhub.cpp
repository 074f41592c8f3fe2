#include <cerrno>
#include <cstdlib>

#include <unistd.h>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace pagescope;
using testsupport::Gen;

namespace {

SimulatedBackend sim(std::map<EventId, std::uint64_t> inc) { return SimulatedBackend{std::move(inc)}; }

TEST(Events, NamesAreBitExact) {
  EXPECT_EQ(event_name(EventId::CpuCycles), "PERF_COUNT_HW_CPU_CYCLES");
  EXPECT_EQ(event_name(EventId::CacheMisses), "PERF_COUNT_HW_CACHE_MISSES");
  EXPECT_EQ(event_name(EventId::DtlbLoadMisses), "DTLB-LOAD-MISSES");
  EXPECT_EQ(event_name(EventId::SveInstRetired), "SVE_INST_RETIRED");
  EXPECT_EQ(event_name(EventId::StalledCyclesBackend), "PERF_COUNT_HW_STALLED_CYCLES_BACKEND");
  EXPECT_EQ(event_name(EventId::StalledCyclesFrontend), "PERF_COUNT_HW_STALLED_CYCLES_FRONTEND");
}

TEST(Events, MappingIsInjectiveAndReversible) {
  std::set<std::string_view> names;
  for (auto id : kAllEvents) {
    names.insert(event_name(id));
    EXPECT_EQ(event_from_name(event_name(id)), id);
  }
  EXPECT_EQ(names.size(), 6u);
  EXPECT_EQ(kEventCount, 6u);
  EXPECT_FALSE(event_from_name("PAPI_TOT_CYC").has_value());
}

TEST(Events, ParseList) {
  auto set = parse_event_list(" PERF_COUNT_HW_CPU_CYCLES , DTLB-LOAD-MISSES");
  EXPECT_EQ(set, (EventSet{EventId::CpuCycles, EventId::DtlbLoadMisses}));
  EXPECT_EQ(parse_event_list(format_event_list(all_event_set())), all_event_set());
  try {
    parse_event_list("PERF_COUNT_HW_CPU_CYCLES,BOGUS");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnsupportedEvent);
  }
}

TEST(Events, PapiEventsOverride) {
  ::setenv("PAPI_EVENTS", "SVE_INST_RETIRED,PERF_COUNT_HW_CPU_CYCLES", 1);
  EXPECT_EQ(resolve_events(all_event_set()), (EventSet{EventId::SveInstRetired, EventId::CpuCycles}));
  ::unsetenv("PAPI_EVENTS");
  EXPECT_EQ(resolve_events({EventId::CacheMisses}), EventSet{EventId::CacheMisses});
}

TEST(Session, ZeroIncrementsReadZero) {
  std::map<EventId, std::uint64_t> zeros;
  for (auto id : kAllEvents) zeros[id] = 0;
  auto s = open_session(sim(zeros), all_event_set());
  auto sample = s.read();
  for (auto id : kAllEvents) EXPECT_EQ(sample[id], 0u);
}

TEST(Session, SimulatedReadsAreMultiples) {
  auto s = open_session(sim({{EventId::CpuCycles, 100}}), {EventId::CpuCycles});
  EXPECT_EQ(s.read()[EventId::CpuCycles], 100u);
  EXPECT_EQ(s.read()[EventId::CpuCycles], 200u);
  EXPECT_EQ(s.read()[EventId::CpuCycles], 300u);
  EXPECT_TRUE(s.simulated());
}

TEST(Session, EmptyEventSetRejected) {
  try {
    open_session(sim({}), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnsupportedEvent);
  }
}

TEST(Session, PermissionDeniedFromOpener) {
  for (int err : {EACCES, EPERM}) {
    RealOsBackend os{testsupport::failing_opener(err)};
    try {
      open_session(os, {EventId::DtlbLoadMisses});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::PermissionDenied);
    }
  }
}

TEST(Session, UnsupportedFromOpener) {
  RealOsBackend os{testsupport::failing_opener(ENOENT)};
  try {
    open_session(os, {EventId::CpuCycles});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnsupportedEvent);
  }
}

TEST(Session, PermissionWinsOverUnsupported) {
  // CpuCycles fails with ENOENT, everything else with EACCES.
  RealOsBackend os{[](const perf_event_attr& a) {
    return a.type == PERF_TYPE_HARDWARE && a.config == PERF_COUNT_HW_CPU_CYCLES ? -ENOENT : -EACCES;
  }};
  try {
    open_session(os, all_event_set());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PermissionDenied);
  }
}

TEST(Session, ProbeReportsPerEvent) {
  RealOsBackend os{testsupport::failing_opener(EACCES)};
  auto probe = probe_events(os, all_event_set());
  ASSERT_EQ(probe.size(), 6u);
  for (const auto& p : probe) {
    EXPECT_FALSE(p.available);
    ASSERT_TRUE(p.error.has_value());
    // SVE has no encoding off aarch64; everything else is a permission error.
    if (!perf_attr_for(p.id)) {
      EXPECT_EQ(*p.error, Errc::UnsupportedEvent);
    } else {
      EXPECT_EQ(*p.error, Errc::PermissionDenied);
    }
  }
}

// Stands in for perf fds: each "counter" is a pipe preloaded with
// (value, time_enabled, time_running) triples, consumed one per read.
PerfOpener pipe_opener(std::vector<std::array<std::uint64_t, 3>> triples) {
  return [triples](const perf_event_attr&) {
    int fds[2];
    if (::pipe(fds) != 0) return -errno;
    for (const auto& t : triples) {
      if (::write(fds[1], t.data(), sizeof(t)) != static_cast<ssize_t>(sizeof(t))) return -EIO;
    }
    ::close(fds[1]);
    return fds[0];
  };
}

TEST(Session, OsReadsAreBaselineRelativeAndScaled) {
  // baseline 1000; then 1500 fully scheduled; then 1800 counted for half
  // the enabled time, which scales to 3600.
  RealOsBackend os{pipe_opener({{1000, 10, 10}, {1500, 20, 20}, {1800, 40, 20}})};
  auto s = open_session(os, {EventId::CpuCycles});
  EXPECT_FALSE(s.simulated());
  EXPECT_EQ(s.read()[EventId::CpuCycles], 500u);
  EXPECT_EQ(s.read()[EventId::CpuCycles], 2600u);
}

TEST(Session, OsCounterGoingBackwardIsAnError) {
  RealOsBackend os{pipe_opener({{0, 1, 1}, {900, 2, 2}, {800, 3, 3}})};
  auto s = open_session(os, {EventId::CpuCycles});
  EXPECT_EQ(s.read()[EventId::CpuCycles], 900u);
  try {
    s.read();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CounterWentBackward);
  }
}

TEST(Regions, BeginNests) {
  RegionCollector rc(open_session(sim({{EventId::CpuCycles, 1}}), {EventId::CpuCycles}));
  EXPECT_EQ(rc.begin("EOS").depth, 1u);
  rc.end("EOS");
  rc.begin("hydro");
  auto h = rc.begin("flux");
  EXPECT_EQ(h.depth, 2u);
  EXPECT_EQ(rc.open_regions(), (std::vector<std::string>{"hydro", "flux"}));
  auto empty = rc.begin("");
  EXPECT_EQ(empty.name, "");
  EXPECT_EQ(rc.depth(), 3u);
}

TEST(Regions, EndGivesDelta) {
  // begin reads once, end reads again: the delta is exactly one increment.
  RegionCollector rc(open_session(sim({{EventId::CpuCycles, 500}}), {EventId::CpuCycles}));
  rc.begin("EOS");
  auto d = rc.end("EOS");
  EXPECT_EQ(d.name, "EOS");
  EXPECT_EQ(d.region_count, 1u);
  EXPECT_EQ(d.total(EventId::CpuCycles), 500u);

  rc.begin("EOS");
  rc.end("EOS");
  const auto* merged = rc.find("EOS");
  ASSERT_NE(merged, nullptr);
  EXPECT_EQ(merged->region_count, 2u);
  EXPECT_EQ(merged->total(EventId::CpuCycles), 1000u);
}

TEST(Regions, MismatchAndNoOpen) {
  RegionCollector rc(open_session(sim({{EventId::CpuCycles, 1}}), {EventId::CpuCycles}));
  try {
    rc.end("A");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoOpenRegion);
  }
  rc.begin("A");
  try {
    rc.end("B");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MismatchedRegion);
  }
  EXPECT_EQ(rc.depth(), 1u);
}

TEST(Regions, ScopedRegion) {
  RegionCollector rc(open_session(sim({{EventId::CpuCycles, 7}}), {EventId::CpuCycles}));
  {
    ScopedRegion outer(rc, "outer");
    ScopedRegion inner(rc, "inner");
    EXPECT_EQ(inner.finish().total(EventId::CpuCycles), 7u);
  }
  EXPECT_EQ(rc.depth(), 0u);
  // outer spans: begin, inner begin, inner end, outer end -> 3 increments
  EXPECT_EQ(rc.find("outer")->total(EventId::CpuCycles), 21u);
}

TEST(Aggregate, Examples) {
  EXPECT_TRUE(aggregate({}).empty());

  std::vector<RegionRecord> same = {{"EOS", 1, {{EventId::CpuCycles, 10}}}, {"EOS", 2, {{EventId::CpuCycles, 20}}}};
  auto m = aggregate(same);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.at("EOS"), (RegionRecord{"EOS", 3, {{EventId::CpuCycles, 30}}}));

  std::vector<RegionRecord> disjoint = {{"EOS", 1, {{EventId::CpuCycles, 10}}},
                                        {"hydro", 1, {{EventId::CpuCycles, 5}}}};
  auto d = aggregate(disjoint);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.at("EOS"), disjoint[0]);
  EXPECT_EQ(d.at("hydro"), disjoint[1]);
}

// --- properties ----------------------------------------------------------------

// Random well-nested script over a small name pool. Returns the number of
// end calls. Each step either opens a region or closes the innermost one.
std::size_t run_script(RegionCollector& rc, Gen& g, int steps) {
  static const std::vector<std::string> names = {"eos", "hydro", "flux", "grav", ""};
  std::vector<std::string> stack;
  std::size_t ends = 0;
  for (int s = 0; s < steps; ++s) {
    if (!stack.empty() && (g.coin(0.45) || stack.size() > 6)) {
      rc.end(stack.back());
      stack.pop_back();
      ++ends;
    } else {
      stack.push_back(g.pick(names));
      rc.begin(stack.back());
    }
  }
  while (!stack.empty()) {
    rc.end(stack.back());
    stack.pop_back();
    ++ends;
  }
  return ends;
}

TEST(CounterProperties, MonotoneReads) {
  Gen g(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = open_session(sim(g.increments()), all_event_set());
    CounterSample prev;
    for (int r = 0; r < 20; ++r) {
      auto cur = s.read();
      for (auto id : kAllEvents) EXPECT_GE(cur[id], prev[id]);
      EXPECT_GT(cur.timestamp_ns, prev.timestamp_ns);
      prev = cur;
    }
  }
}

TEST(CounterProperties, BalanceAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Gen g(seed);
    auto inc = g.increments();
    int steps = static_cast<int>(g.u64(0, 60));

    Gen g1(seed * 7 + 1), g2(seed * 7 + 1);
    RegionCollector a(open_session(sim(inc), all_event_set()));
    RegionCollector b(open_session(sim(inc), all_event_set()));
    auto ends = run_script(a, g1, steps);
    run_script(b, g2, steps);

    EXPECT_EQ(a.depth(), 0u);
    std::uint64_t total_count = 0;
    for (const auto& r : a.records()) total_count += r.region_count;
    EXPECT_EQ(total_count, ends);
    EXPECT_EQ(a.records(), b.records());
  }
}

TEST(CounterProperties, ChildrenNeverExceedParent) {
  Gen g(5);
  for (int trial = 0; trial < 200; ++trial) {
    RegionCollector rc(open_session(sim(g.increments()), all_event_set()));
    std::vector<RegionRecord> children;
    rc.begin("parent");
    auto kids = g.u64(0, 6);
    for (std::uint64_t k = 0; k < kids; ++k) {
      auto name = "child" + std::to_string(k);
      rc.begin(name);
      for (auto spins = g.u64(0, 3); spins > 0; --spins) rc.session().read();  // work inside the child
      children.push_back(rc.end(name));
      for (auto spins = g.u64(0, 2); spins > 0; --spins) rc.session().read();  // work between children
    }
    auto parent = rc.end("parent");
    for (auto id : kAllEvents) {
      std::uint64_t sum = 0;
      for (const auto& c : children) sum += *c.total(id);
      EXPECT_LE(sum, *parent.total(id));
    }
  }
}

TEST(CounterProperties, AggregateConservesSums) {
  Gen g(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RegionRecord> recs;
    std::map<std::string, std::uint64_t> expect_count, expect_cycles;
    for (auto n = g.u64(0, 12); n > 0; --n) {
      RegionRecord r{"r" + std::to_string(g.u64(0, 3)), g.u64(1, 5), {{EventId::CpuCycles, g.u64(0, 1000)}}};
      expect_count[r.name] += r.region_count;
      expect_cycles[r.name] += r.totals[EventId::CpuCycles];
      recs.push_back(r);
    }
    auto m = aggregate(recs);
    ASSERT_EQ(m.size(), expect_count.size());
    for (const auto& [name, rec] : m) {
      EXPECT_EQ(rec.region_count, expect_count[name]);
      EXPECT_EQ(rec.total(EventId::CpuCycles), expect_cycles[name]);
    }
  }
}

}  // namespace
