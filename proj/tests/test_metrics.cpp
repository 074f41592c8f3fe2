#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace pagescope;
using namespace testsupport;

namespace {

RegionRecord record(std::map<EventId, std::uint64_t> totals) { return RegionRecord{"r", 1, std::move(totals)}; }

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

TEST(CpuSpec, Validation) {
  CpuSpec ok;
  EXPECT_NO_THROW(ok.validate());
  for (CpuSpec bad : {CpuSpec{0.0, 256}, CpuSpec{-1.0, 256}, CpuSpec{1e9, 0}, CpuSpec{1e9, 96}}) {
    try {
      bad.validate();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidCpuSpec);
    }
  }
}

TEST(Derive, DefinitionsHoldExactly) {
  CpuSpec cpu{2e9, 64};
  auto d = derive(record({{EventId::CpuCycles, 4'000'000'000},
                          {EventId::SveInstRetired, 1'000'000'000},
                          {EventId::CacheMisses, 1'000'000},
                          {EventId::DtlbLoadMisses, 6'000}}),
                  cpu);
  EXPECT_EQ(d.seconds, 2.0);
  EXPECT_EQ(d.sve_per_cycle, 0.25);
  EXPECT_EQ(d.bandwidth_bytes_per_s, 32e6);
  EXPECT_EQ(d.dtlb_misses_per_s, 3000.0);
}

TEST(Derive, EosCyclesToSeconds) {
  auto d = derive(record({{EventId::CpuCycles, 125'000'000'000}}), CpuSpec{});
  EXPECT_NEAR(d.seconds, 69.444, 1e-3);
  EXPECT_LT(rel(d.seconds, 69.7), 0.01);
}

TEST(Derive, HydroCyclesToSeconds) {
  auto d = derive(record({{EventId::CpuCycles, 1'210'000'000'000}}), CpuSpec{});
  EXPECT_NEAR(d.seconds, 672.2, 0.1);
  EXPECT_LT(rel(d.seconds, 670.0), 0.01);
}

TEST(Derive, ZeroSve) {
  auto d = derive(record({{EventId::CpuCycles, 1'000'000'000}, {EventId::SveInstRetired, 0}}), CpuSpec{});
  EXPECT_EQ(d.sve_per_cycle, 0.0);
}

TEST(Derive, BackComputedDtlbReDerives) {
  // Oracle: rate * printed time gives the count; dividing by the same time
  // must give the rate back.
  const double count = 2.34e7 * 69.7;
  const auto cycles = static_cast<std::uint64_t>(std::llround(69.7 * 1.8e9));
  auto d = derive(record({{EventId::CpuCycles, cycles},
                          {EventId::DtlbLoadMisses, static_cast<std::uint64_t>(std::llround(count))}}),
                  CpuSpec{});
  EXPECT_NEAR(count, 1.63e9, 0.01e9);
  EXPECT_LT(rel(*d.dtlb_misses_per_s, 2.34e7), 0.01);
}

TEST(Derive, MissingEventsAreUnavailable) {
  auto d = derive(record({{EventId::CpuCycles, 10}}), CpuSpec{});
  EXPECT_FALSE(d.sve_per_cycle);
  EXPECT_FALSE(d.bandwidth_bytes_per_s);
  EXPECT_FALSE(d.dtlb_misses_per_s);
}

TEST(Derive, ZeroOrMissingCycles) {
  for (auto r : {record({{EventId::CpuCycles, 0}}), record({{EventId::CacheMisses, 5}})}) {
    try {
      derive(r, CpuSpec{});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::ZeroCycles);
    }
  }
}

TEST(Derive, PublishedCountersReproduceTables) {
  // Every printed measure within 1% of derive() on the raw counters.
  struct Case {
    RegionRecord r;
    double seconds;
    std::string sve;  // printed with two decimals only
    double gbs, dtlb;
  };
  for (const auto& c : {Case{eos_without(), 69.7, "0.47", 4.19, 2.34e7}, Case{eos_with(), 65.2, "0.51", 4.45, 1.10e6},
                        Case{hydro_without_raw(), 670, "0.11", 10.10, 2.42e6},
                        Case{hydro_with_raw(), 669, "0.11", 10.09, 7.83e5}}) {
    auto d = derive(c.r, CpuSpec{});
    EXPECT_LT(rel(d.seconds, c.seconds), 0.01);
    EXPECT_EQ(format_measure(Measure::SvePerCycle, d.sve_per_cycle), c.sve);
    EXPECT_LT(rel(*d.bandwidth_bytes_per_s / 1e9, c.gbs), 0.01);
    EXPECT_LT(rel(*d.dtlb_misses_per_s, c.dtlb), 0.01);
  }
}

TEST(Derive, HydroWithDtlbPrintedOneUnitLow) {
  // The reader script printed 783685.48/s; three significant figures of
  // that are 7.84e5, not the 7.83e5 in the table.
  auto d = derive(hydro_with_raw(), CpuSpec{});
  EXPECT_NEAR(*d.dtlb_misses_per_s, 783685.48, 0.01);
  EXPECT_EQ(format_measure(Measure::DtlbRate, d.dtlb_misses_per_s), "7.84×10^5");
  EXPECT_EQ(format_measure(Measure::DtlbRate, derive(hydro_with_table(), CpuSpec{}).dtlb_misses_per_s), "7.83×10^5");
}

TEST(Elapsed, Examples) {
  EXPECT_EQ(elapsed_timer({0, 339.032}), 339.032);
  EXPECT_EQ(elapsed_timer({12.5, 12.5}), 0.0);
  try {
    elapsed_timer({5, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NegativeInterval);
  }
}

TEST(Ratios, PublishedDtlbAndTimers) {
  DerivedMetrics with_eos, without_eos;
  with_eos.dtlb_misses_per_s = 1.10e6;
  without_eos.dtlb_misses_per_s = 2.34e7;
  EXPECT_NEAR(*ratio_of(with_eos.dtlb_misses_per_s, without_eos.dtlb_misses_per_s), 0.047, 0.001);
  EXPECT_NEAR(*ratio_of(7.83e5, 2.42e6), 0.324, 0.001);
  EXPECT_NEAR(*ratio_of(333.150, 339.032), 333.150 / 339.032, 1e-15);
  EXPECT_NEAR(*ratio_of(333.150, 339.032), 0.9827, 5e-5);
}

TEST(Ratios, RowPerMeasureInOrder) {
  auto rows = ratios(derive(eos_with(), CpuSpec{}), derive(eos_without(), CpuSpec{}), {333.150, 339.032});
  ASSERT_EQ(rows.size(), kAllMeasures.size());
  for (std::size_t n = 0; n < rows.size(); ++n) EXPECT_EQ(rows[n].measure, kAllMeasures[n]);
  EXPECT_EQ(rows.back().with_hp, 333.150);
  EXPECT_EQ(rows.back().without_hp, 339.032);
}

TEST(Ratios, UnavailableMarkers) {
  EXPECT_FALSE(ratio_of(1.0, 0.0));
  EXPECT_FALSE(ratio_of(std::nullopt, 2.0));
  EXPECT_FALSE(ratio_of(2.0, std::nullopt));
  EXPECT_EQ(ratio_of(0.0, 0.0), 1.0);
  EXPECT_EQ(format_ratio(std::nullopt), "n/a");
  EXPECT_EQ(format_measure(Measure::Bandwidth, std::nullopt), "n/a");
  EXPECT_EQ(format_measure(Measure::DtlbRate, std::numeric_limits<double>::infinity()), "n/a");
}

TEST(Format, TableStyles) {
  EXPECT_EQ(format_scientific3(1.25376693054e11), "1.25×10^11");
  EXPECT_EQ(format_scientific3(69.6537), "6.97×10^1");
  EXPECT_EQ(format_scientific3(9.996), "1.00×10^1");
  EXPECT_EQ(format_scientific3(0.00123), "1.23×10^-3");
  EXPECT_EQ(format_measure(Measure::SvePerCycle, 0.474), "0.47");
  EXPECT_EQ(format_measure(Measure::Bandwidth, 10.102e9), "10.10");
  EXPECT_EQ(format_measure(Measure::ElapsedTimer, 333.15), "333.150");
}

TEST(Measures, KeysRoundTrip) {
  std::set<std::string_view> keys, labels;
  for (auto m : kAllMeasures) {
    EXPECT_EQ(measure_from_key(measure_key(m)), m);
    keys.insert(measure_key(m));
    labels.insert(measure_label(m));
  }
  EXPECT_EQ(keys.size(), 6u);
  EXPECT_EQ(labels.size(), 6u);
}

// --- properties ----------------------------------------------------------------

RegionRecord random_record(Gen& g) {
  RegionRecord r{"r", 1, {}};
  for (auto id : kAllEvents) r.totals[id] = g.u64(0, 1'000'000'000);
  r.totals[EventId::CpuCycles] = g.u64(1, 1'000'000'000);
  return r;
}

TEST(MetricsProperties, ScaleCovariance) {
  Gen g(21);
  for (int trial = 0; trial < 500; ++trial) {
    auto r = random_record(g);
    const std::uint64_t k = g.u64(1, 1000);
    auto scaled = r;
    for (auto& [id, v] : scaled.totals) v *= k;
    CpuSpec cpu{g.real(1e8, 5e9), std::uint64_t{1} << g.u64(0, 10)};
    auto a = derive(r, cpu), b = derive(scaled, cpu);
    EXPECT_NEAR(b.seconds / a.seconds, static_cast<double>(k), 1e-9 * k);
    EXPECT_NEAR(*b.sve_per_cycle, *a.sve_per_cycle, 1e-12 * (1 + *a.sve_per_cycle));
    EXPECT_NEAR(*b.bandwidth_bytes_per_s, *a.bandwidth_bytes_per_s, 1e-9 * (1 + *a.bandwidth_bytes_per_s));
    EXPECT_NEAR(*b.dtlb_misses_per_s, *a.dtlb_misses_per_s, 1e-9 * (1 + *a.dtlb_misses_per_s));
  }
}

TEST(MetricsProperties, SecondsExactAndFinite) {
  Gen g(22);
  for (int trial = 0; trial < 500; ++trial) {
    auto r = random_record(g);
    CpuSpec cpu{g.real(1e8, 5e9), 256};
    auto d = derive(r, cpu);
    EXPECT_EQ(d.seconds, d.hw_cycles / cpu.freq_hz);
    for (auto m : kAllMeasures) {
      if (auto v = measure_value(d, m)) {
        EXPECT_TRUE(std::isfinite(*v));
        EXPECT_GE(*v, 0.0);
      }
    }
  }
}

TEST(MetricsProperties, RatioIdentity) {
  Gen g(23);
  for (int trial = 0; trial < 500; ++trial) {
    auto r = random_record(g);
    if (g.coin(0.2)) r.totals.erase(EventId::CacheMisses);
    if (g.coin(0.2)) r.totals[EventId::DtlbLoadMisses] = 0;
    auto d = derive(r, CpuSpec{});
    double t = g.coin(0.1) ? 0.0 : g.real(0, 1e4);
    for (const auto& row : ratios(d, d, {t, t})) {
      if (row.with_hp) {
        EXPECT_EQ(row.ratio, 1.0) << measure_key(row.measure);
      } else {
        EXPECT_FALSE(row.ratio);
      }
    }
  }
}

}  // namespace
