#include <doctest.h>

#include <cmath>

#include "smash/error.hpp"
#include "smash/metrics.hpp"
#include "smash/sim/machine.hpp"

using namespace smash;
using namespace smash::sim;

namespace {

ExecutionTrace fake_trace(std::uint64_t cycles, std::vector<std::uint64_t> active) {
  ExecutionTrace t;
  t.total_cycles = cycles;
  t.blocks = 1;
  t.mtc_threads_per_block = std::uint32_t(active.size());
  t.threads_per_block = t.mtc_threads_per_block + 1;
  for (const auto a : active) t.threads.push_back({a, a, 0});
  t.threads.push_back({cycles, cycles, 0});  // STC, excluded from utilization
  return t;
}

}  // namespace

TEST_CASE("arithmetic intensity of the headline counts") {
  const std::uint64_t nnz_c = 5174841;
  const auto flop = std::uint64_t(std::llround(1.23 * double(nnz_c)));
  const auto r = arithmetic_intensity(254211, 254211, nnz_c, flop);
  REQUIRE(r.cf.has_value());
  CHECK(*r.cf == doctest::Approx(1.23).epsilon(1e-6));
  CHECK(r.ai == doctest::Approx(0.0933).epsilon(1e-3));
  CHECK(r.ai_rounded() == doctest::Approx(0.09));
  CHECK(r.ai <= *r.cf / r.bytes_per_element);

  const auto doubled = arithmetic_intensity(254211, 254211, nnz_c, flop, 24.0);
  CHECK(doubled.ai == r.ai / 2);
}

TEST_CASE("arithmetic intensity edge cases") {
  CHECK(*arithmetic_intensity(10, 10, 40, 40).cf == 1.0);
  const auto empty = arithmetic_intensity(3, 4, 0, 0);
  CHECK_FALSE(empty.cf.has_value());
  CHECK(intensity_to_json(empty)["cf"] == "undefined");
  CHECK_THROWS_AS(arithmetic_intensity(0, 0, 0, 0), Error);
  CHECK_THROWS_AS(arithmetic_intensity(1, 1, 1, 1, 0.0), Error);
}

TEST_CASE("aggregate IPC") {
  CHECK(aggregate_ipc(1000, 500) == 2.0);
  CHECK_THROWS_AS(aggregate_ipc(1, 0), Error);

  Machine serial(MachineConfig{});
  const Range r = serial.dgas_partition(4096, 0);
  serial.spawn({0, 0, 0}, [](ThreadContext& ctx, Addr a) -> Task<> {
    for (int i = 0; i < 10; ++i) {
      co_await ctx.alu(3);
      co_await ctx.load<double>(a + 64 * i);
    }
  }(serial.context({0, 0, 0}), r.base));
  const auto tr = serial.run();
  CHECK(aggregate_ipc(tr) <= 1.0);
  CHECK(aggregate_ipc(tr) > 0.0);
}

TEST_CASE("bandwidth utilization") {
  ExecutionTrace t;
  CHECK(bandwidth_utilization(t, 8) == 0.0);
  t.total_cycles = 1000;
  t.dram_bytes_read = 3000;
  t.dram_bytes_written = 1000;
  CHECK(bandwidth_utilization(t, 8) == 0.5);
  CHECK_THROWS_AS(bandwidth_utilization(t, 0), Error);
  // A ratio of paired demand and peak figures.
  t.total_cycles = 549;
  t.dram_bytes_read = 303;
  t.dram_bytes_written = 0;
  CHECK(bandwidth_utilization(t, 1.0) == doctest::Approx(0.552).epsilon(1e-3));
}

TEST_CASE("utilization statistics") {
  SUBCASE("all active") {
    const auto r = utilization_stats(fake_trace(100, std::vector<std::uint64_t>(64, 100)), 100);
    CHECK(r.per_thread.size() == 64);
    for (const double u : r.per_thread) CHECK(u == 1.0);
    CHECK(r.mean == 1.0);
    CHECK(r.stddev == 0.0);
    CHECK(r.histogram.back().count == 64);
  }
  SUBCASE("one of 64 active") {
    std::vector<std::uint64_t> act(64, 0);
    act[5] = 100;
    const auto r = utilization_stats(fake_trace(100, act), 100, 4);
    CHECK(r.mean == doctest::Approx(1.0 / 64));
    std::uint64_t mass = 0;
    for (const auto& b : r.histogram) mass += b.count;
    CHECK(mass == 64);
    CHECK(r.histogram[0].count == 63);
    CHECK(r.histogram[3].count == 1);
    CHECK(histogram_csv(r) == "bin_low,bin_high,count\n0,0.25,63\n0.25,0.5,0\n0.5,0.75,0\n0.75,1,1\n");
  }
  SUBCASE("series aggregates samples") {
    auto t = fake_trace(25, {10, 20});
    t.sample_interval = 10;
    t.samples = {{10, 10, 10}, {0, 10, 10}, {0, 0, 5}};
    const auto r = utilization_stats(t, 20);
    REQUIRE(r.series.size() == 2);
    CHECK(r.series[0] == doctest::Approx(30.0 / 40.0));
    CHECK(r.series[1] == 0.0);
    CHECK_THROWS_AS(utilization_stats(t, 15), Error);
    CHECK_THROWS_AS(utilization_stats(t, 0), Error);
  }
}

TEST_CASE("streaming micro-workload hit rate") {
  MachineConfig c;
  Machine m(c);
  const Range r = m.dgas_partition(32 * 1024, 0);
  m.spawn({0, 0, 0}, [](ThreadContext& ctx, Addr a) -> Task<> {
    for (Addr p = a; p < a + 32 * 1024; p += 8) co_await ctx.load<std::uint64_t>(p);
  }(m.context({0, 0, 0}), r.base));
  const auto tr = m.run();
  const auto rm = run_metrics(tr, arithmetic_intensity(1, 1, 1, 1), c.cost.dram_peak_bytes_per_cycle);
  CHECK(rm.cache_hit_rate == 7.0 / 8.0);
  CHECK(run_metrics_csv_header().find("cache_hit_rate") != std::string::npos);
  CHECK(run_metrics_csv_row(rm).find(",0.875,") != std::string::npos);
}
