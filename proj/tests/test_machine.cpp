#include <doctest.h>

#include <vector>

#include "smash/sim/machine.hpp"
#include "smash/sim/trace_io.hpp"

using namespace smash;
using namespace smash::sim;

namespace {

Task<> alu_program(ThreadContext& ctx, std::uint64_t n) { co_await ctx.alu(n); }

MachineConfig one_mtc() {
  MachineConfig c;
  c.mtc_per_block = 1;
  c.stc_per_block = 1;
  return c;
}

}  // namespace

TEST_CASE("machine geometry") {
  MachineConfig c;
  Machine m(c);
  CHECK(c.mtc_threads_per_block() == 64);
  CHECK(c.cache_sets() == 64);
  CHECK(m.total_threads() == 66);
  c.blocks = 2;
  CHECK(c.blocks * c.mtc_threads_per_block() == 128);

  MachineConfig bad;
  bad.cache_bytes = 1000;
  CHECK_THROWS_AS(Machine{bad}, Error);
  bad = MachineConfig{};
  bad.cost.issue_width_per_mtc = 2;
  CHECK_THROWS_AS(Machine{bad}, Error);
}

TEST_CASE("thread id layout is block-major with MTC threads first") {
  MachineConfig c;
  c.blocks = 2;
  Machine m(c);
  CHECK(m.thread_id({0, 1, 3}) == 19);
  CHECK(m.thread_id({0, 4, 0}) == 64);
  CHECK(m.thread_id({1, 0, 0}) == 66);
  for (std::uint32_t tid = 0; tid < m.total_threads(); ++tid) CHECK(m.thread_id(m.slot_of(tid)) == tid);
}

TEST_CASE("single thread issues one ALU op per cycle") {
  Machine m(MachineConfig{});
  m.spawn({0, 0, 0}, alu_program(m.context({0, 0, 0}), 100));
  const auto tr = m.run();
  CHECK(tr.total_cycles == 100);
  CHECK(tr.mtc_instructions == 100);
  CHECK(double(tr.mtc_instructions) / double(tr.total_cycles) == 1.0);
}

TEST_CASE("sixteen threads share one MTC round robin") {
  Machine m(MachineConfig{});
  for (std::uint32_t k = 0; k < 16; ++k) m.spawn({0, 0, k}, alu_program(m.context({0, 0, k}), 10));
  const auto tr = m.run();
  CHECK(tr.total_cycles == 160);
  for (std::uint32_t k = 0; k < 16; ++k) {
    CHECK(tr.threads[k].active_cycles == 10);
    CHECK(double(tr.threads[k].active_cycles) / double(tr.total_cycles) == doctest::Approx(1.0 / 16));
  }
}

TEST_CASE("runs are deterministic") {
  auto once = [] {
    Machine m(MachineConfig{});
    const Range r = m.dgas_partition(4096, 0);
    for (std::uint32_t i = 0; i < 64; ++i) {
      const auto s = m.mtc_slot(0, i);
      m.spawn(s, [](ThreadContext& ctx, Addr base, std::uint32_t i) -> Task<> {
        for (std::uint32_t k = 0; k < 20; ++k) {
          co_await ctx.fetch_add(base + 8 * ((i * 7 + k) % 64), 1);
          co_await ctx.load<double>(base + 8 * ((i + k * 3) % 512));
          co_await ctx.alu(i % 3 + 1);
        }
      }(m.context(s), r.base, i));
    }
    return trace_to_json(m.run()).dump();
  };
  CHECK(once() == once());
}

TEST_CASE("compare-and-swap semantics") {
  Machine m(one_mtc());
  const Addr slot = m.spad(0).base;
  m.poke<std::int64_t>(slot, -1);
  CasResult first, second;
  m.spawn({0, 0, 0}, [](ThreadContext& ctx, Addr a, CasResult& r1, CasResult& r2) -> Task<> {
    r1 = co_await ctx.cas(a, std::uint64_t(-1), 7);
    r2 = co_await ctx.cas(a, std::uint64_t(-1), 9);
  }(m.context({0, 0, 0}), slot, first, second));
  m.run();
  CHECK(first.success);
  CHECK(first.observed == std::uint64_t(-1));
  CHECK_FALSE(second.success);
  CHECK(second.observed == 7);
  CHECK(m.peek<std::int64_t>(slot) == 7);
}

TEST_CASE("simultaneous CAS on one slot has exactly one winner, the lower thread id") {
  for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
    MachineConfig c;
    c.schedule_seed = seed;
    Machine m(c);
    const Addr slot = m.spad(0).base;
    m.poke<std::int64_t>(slot, -1);
    std::vector<CasResult> res(4);
    for (std::uint32_t core = 0; core < 4; ++core) {
      const ThreadSlot s{0, core, 0};
      m.spawn(s, [](ThreadContext& ctx, Addr a, CasResult& r, std::uint64_t v) -> Task<> {
        r = co_await ctx.cas(a, std::uint64_t(-1), v);
      }(m.context(s), slot, res[core], 100 + core));
    }
    m.run();
    int winners = 0;
    for (auto& r : res) winners += r.success;
    CHECK(winners == 1);
    if (seed == 0) CHECK(res[0].success);
    CHECK(m.peek<std::int64_t>(slot) >= 100);
  }
}

TEST_CASE("fetch-add semantics and remote cost") {
  auto run_with = [](bool remote, Cycle& cycles) {
    Machine m(one_mtc());
    const Addr a = m.spad(0).base + 64;
    m.poke<double>(a, 1.5);
    double old = 0;
    m.spawn({0, 0, 0}, [](ThreadContext& ctx, Addr a, double& old, bool remote) -> Task<> {
      old = co_await ctx.fetch_add_real(a, 2.5, remote);
    }(m.context({0, 0, 0}), a, old, remote));
    cycles = m.run().total_cycles;
    CHECK(old == 1.5);
    return m.peek<double>(a);
  };
  Cycle local_cycles = 0, remote_cycles = 0;
  CHECK(run_with(false, local_cycles) == 4.0);
  CHECK(run_with(true, remote_cycles) == 4.0);
  CHECK(remote_cycles > local_cycles);
}

TEST_CASE("64 concurrent increments are never lost") {
  for (std::uint64_t seed : {0ull, 5ull}) {
    MachineConfig c;
    c.schedule_seed = seed;
    Machine m(c);
    const Range r = m.dgas_partition(8, 0);
    for (std::uint32_t i = 0; i < 64; ++i) {
      const auto s = m.mtc_slot(0, i);
      m.spawn(s, [](ThreadContext& ctx, Addr a) -> Task<> { co_await ctx.fetch_add(a, 1); }(m.context(s), r.base));
    }
    m.run();
    CHECK(m.peek<std::int64_t>(r.base) == 64);
  }
}

TEST_CASE("cache: repeated read hits, streaming hits 7 of 8") {
  {
    Machine m(one_mtc());
    const Range r = m.dgas_partition(64, 0);
    m.spawn({0, 0, 0}, [](ThreadContext& ctx, Addr a) -> Task<> {
      co_await ctx.load<double>(a);
      co_await ctx.load<double>(a);
    }(m.context({0, 0, 0}), r.base));
    const auto tr = m.run();
    CHECK(tr.cache_misses == 1);
    CHECK(tr.cache_hits == 1);
  }
  {
    Machine m(one_mtc());
    const Range r = m.dgas_partition(64 * 1024, 0);
    m.spawn({0, 0, 0}, [](ThreadContext& ctx, Addr a) -> Task<> {
      for (Addr p = a; p < a + 64 * 1024; p += 8) co_await ctx.load<double>(p);
    }(m.context({0, 0, 0}), r.base));
    const auto tr = m.run();
    CHECK(tr.cache_misses == 1024);
    CHECK(tr.cache_hits == 7 * 1024);
    CHECK(tr.cache_hit_rate() == 7.0 / 8.0);
    CHECK(tr.dram_bytes_read == 64 * 1024);
  }
}

TEST_CASE("dirty lines are written back on eviction and flush") {
  Machine m(one_mtc());
  const Range r = m.dgas_partition(64 * 1024, 0);
  m.spawn({0, 0, 0}, [](ThreadContext& ctx, Addr a) -> Task<> {
    for (Addr p = a; p < a + 32 * 1024; p += 64) co_await ctx.store<std::uint64_t>(p, 1);
    co_await ctx.cache_flush();
  }(m.context({0, 0, 0}), r.base));
  const auto tr = m.run();
  CHECK(tr.dram_bytes_written == 32 * 1024);
  CHECK(tr.dram_bytes_read == 32 * 1024);
}

TEST_CASE("DRAM bandwidth serializes concurrent line fills") {
  MachineConfig c;
  c.cost.dram_peak_bytes_per_cycle = 1;
  Machine m(c);
  const Range r = m.dgas_partition(64 * 64, 0);
  for (std::uint32_t i = 0; i < 64; ++i) {
    const auto s = m.mtc_slot(0, i);
    m.spawn(s, [](ThreadContext& ctx, Addr a) -> Task<> { co_await ctx.load<double>(a); }(m.context(s),
                                                                                          r.base + 64 * i));
  }
  const auto tr = m.run();
  CHECK(tr.total_cycles >= 64 * 64);
  CHECK(double(tr.dram_bytes_read) / double(tr.total_cycles) <= 1.0);
}

TEST_CASE("DMA copy accounting and overlap with compute") {
  auto run = [](bool overlap) {
    Machine m(one_mtc());
    const Range dst = m.dgas_partition(4096, 0);
    const Addr src = m.spad(0).base;
    for (int i = 0; i < 512; ++i) m.poke<double>(src + 8 * i, i);
    m.spawn({0, 0, 0}, [](ThreadContext& ctx, Addr s, Addr d, bool overlap) -> Task<> {
      const auto req = DmaRequest::copy(s, d, 4096);
      const DmaHandle h = co_await ctx.dma(req);
      if (!overlap) co_await ctx.dma_wait(h);
      co_await ctx.alu(100);
      co_await ctx.dma_wait(h);
    }(m.context({0, 0, 0}), src, dst.base, overlap));
    const auto tr = m.run();
    CHECK(tr.dram_bytes_written == 4096);
    CHECK(tr.dma_ops == 1);
    CHECK(m.peek<double>(dst.base + 8 * 511) == 511.0);
    return tr.total_cycles;
  };
  const Cycle overlapped = run(true), serial = run(false);
  const Cycle dma_path = 50 + 4096 / 8;
  CHECK(overlapped < serial);
  CHECK(overlapped >= dma_path);
  CHECK(overlapped <= dma_path + 2);
}

TEST_CASE("DMA scatter broadcasts one value with one instruction") {
  Machine m(one_mtc());
  const Range table = m.dgas_partition(8 * 100, 0);
  const Addr idx = m.spad(0).base;
  const std::vector<std::uint32_t> where{3, 17, 42, 99};
  for (std::size_t i = 0; i < where.size(); ++i) m.poke<std::uint32_t>(idx + 4 * i, where[i]);
  m.spawn({0, 0, 0}, [](ThreadContext& ctx, Addr t, Addr idx) -> Task<> {
    const auto req = DmaRequest::scatter(t, 8, idx, 4, std::uint64_t(-1));
    co_await ctx.dma_wait(co_await ctx.dma(req));
  }(m.context({0, 0, 0}), table.base, idx));
  const auto tr = m.run();
  CHECK(tr.threads[0].issued == 2);
  for (auto w : where) CHECK(m.peek<std::int64_t>(table.base + 8 * w) == -1);
  CHECK(m.peek<std::int64_t>(table.base + 8 * 4) == 0);
}

TEST_CASE("DMA rejects overlapping copies and unmapped ranges") {
  Machine m(one_mtc());
  const Addr s = m.spad(0).base;
  m.spawn({0, 0, 0}, [](ThreadContext& ctx, Addr s) -> Task<> {
    const auto req = DmaRequest::copy(s, s + 8, 64);
    co_await ctx.dma(req);
  }(m.context({0, 0, 0}), s));
  CHECK_THROWS_AS(m.run(), Error);

  Machine m2(one_mtc());
  m2.spawn({0, 0, 0}, [](ThreadContext& ctx) -> Task<> { co_await ctx.load<int>(kDramBase + 1000); }(
                          m2.context({0, 0, 0})));
  try {
    m2.run();
    FAIL("expected unmapped error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnmappedAddress);
  }
}

TEST_CASE("full DMA queue stalls the submitting thread") {
  MachineConfig c = one_mtc();
  c.dma_queue_depth = 2;
  Machine m(c);
  const Range d = m.dgas_partition(8 * 64, 0);
  const Addr s = m.spad(0).base;
  m.spawn({0, 0, 0}, [](ThreadContext& ctx, Addr s, Addr d) -> Task<> {
    std::vector<DmaRequest> reqs;
    for (int i = 0; i < 8; ++i) reqs.push_back(DmaRequest::copy(s + 64 * i, d + 64 * i, 64));
    std::vector<DmaHandle> hs;
    for (auto& r : reqs) hs.push_back(co_await ctx.dma(r));
    for (auto h : hs) co_await ctx.dma_wait(h);
  }(m.context({0, 0, 0}), s, d.base));
  const auto tr = m.run();
  CHECK(tr.dma_ops == 8);
  CHECK(tr.threads[0].stall_cycles > 0);
  CHECK(tr.threads[0].issued == 16);
}

TEST_CASE("barrier releases everyone at last arrival plus barrier cost") {
  Machine m(MachineConfig{});
  const auto bar = m.make_barrier(64);
  std::vector<Cycle> resumed(64);
  for (std::uint32_t i = 0; i < 64; ++i) {
    const auto s = m.mtc_slot(0, i);
    m.spawn(s, [](ThreadContext& ctx, std::uint32_t bar, std::uint64_t work, Cycle& at) -> Task<> {
      if (work) co_await ctx.alu(work);
      co_await ctx.barrier(bar);
      at = ctx.now();
      co_await ctx.alu();
    }(m.context(s), bar, i == 0 ? 485 : 0, resumed[i]));
  }
  const auto tr = m.run();
  CHECK(tr.barrier_count == 1);
  for (std::uint32_t core = 0; core < 4; ++core) {
    Cycle first = ~Cycle{0};
    for (std::uint32_t k = 0; k < 16; ++k) first = std::min(first, resumed[core * 16 + k]);
    CHECK(first == 510);
  }
}

TEST_CASE("single-thread barrier costs barrier_cycles") {
  Machine m(one_mtc());
  const auto bar = m.make_barrier(1);
  m.spawn({0, 0, 0}, [](ThreadContext& ctx, std::uint32_t bar) -> Task<> {
    co_await ctx.barrier(bar);
    co_await ctx.alu();
  }(m.context({0, 0, 0}), bar));
  CHECK(m.run().total_cycles == 11);
}

TEST_CASE("deadlock is reported with blocked-thread diagnostics") {
  Machine m(one_mtc());
  const auto bar = m.make_barrier(2);
  m.spawn({0, 0, 0}, [](ThreadContext& ctx, std::uint32_t bar) -> Task<> { co_await ctx.barrier(bar); }(
                         m.context({0, 0, 0}), bar));
  try {
    m.run();
    FAIL("expected deadlock");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDeadlock);
    CHECK(std::string(e.what()).find("barrier") != std::string::npos);
  }
}

TEST_CASE("dgas partitions are disjoint and honour affinity and capacity") {
  MachineConfig c;
  c.blocks = 2;
  c.dram_capacity_bytes = 4096;
  Machine m(c);
  const Range a = m.dgas_partition(100, 0), b = m.dgas_partition(100, 1);
  CHECK((a.end() <= b.base || b.end() <= a.base));
  CHECK(m.affinity_of(a.base) == 0);
  CHECK(m.affinity_of(b.base + 50) == 1);
  CHECK_THROWS_AS(m.dgas_partition(8192, 0), Error);

  Cycle lat[2] = {0, 0};
  for (std::uint32_t reader = 0; reader < 2; ++reader) {
    MachineConfig c2;
    c2.blocks = 2;
    Machine m2(c2);
    const Range r = m2.dgas_partition(64, 0);
    const auto s = m2.mtc_slot(reader, 0);
    m2.spawn(s, [](ThreadContext& ctx, Addr a) -> Task<> { co_await ctx.load<double>(a); }(m2.context(s), r.base));
    lat[reader] = m2.run().total_cycles;
  }
  CHECK(lat[0] < lat[1]);
}

TEST_CASE("trace invariants and phase attribution") {
  Machine m(MachineConfig{});
  const Range r = m.dgas_partition(8 * 1024, 0);
  for (std::uint32_t i = 0; i < 64; ++i) {
    const auto s = m.mtc_slot(0, i);
    m.spawn(s, [](ThreadContext& ctx, Addr a, std::uint32_t i) -> Task<> {
      ctx.set_phase(1);
      for (int k = 0; k < 10; ++k) co_await ctx.load<double>(a + 8 * ((i * 16 + k) % 1024));
      ctx.set_phase(2);
      co_await ctx.alu(i);
    }(m.context(s), r.base, i));
  }
  const auto tr = m.run();
  std::uint64_t total = 0;
  for (std::size_t tid = 0; tid < tr.threads.size(); ++tid) {
    const auto& t = tr.threads[tid];
    CHECK(t.active_cycles + t.stall_cycles <= tr.total_cycles);
    CHECK(t.issued <= t.active_cycles);
    total += t.issued;
  }
  CHECK(total == tr.total_instructions);
  CHECK(tr.phases.at(1)[5].issued == 10);
  CHECK(tr.phases.at(2)[5].issued == 5);
  CHECK(double(tr.total_instructions) / double(tr.total_cycles) <= 4.0);
  std::uint64_t sampled = 0;
  for (const auto& row : tr.samples)
    for (auto v : row) sampled += v;
  CHECK(sampled == tr.total_instructions);
}

TEST_CASE("machine config text round trip") {
  MachineConfig c;
  c.blocks = 2;
  c.native_8byte_access = true;
  c.cost.dram_access_cycles = 250;
  const auto back = parse_machine_config(format_machine_config(c));
  CHECK(format_machine_config(back) == format_machine_config(c));
  const auto parsed = parse_machine_config("# comment\nspad_kb = 1024\nnative_8byte_access=true\n");
  CHECK(parsed.spad_bytes == 1024 * 1024);
  CHECK(parsed.native_8byte_access);
  CHECK_THROWS_AS(parse_machine_config("bogus=1\n"), Error);
  CHECK_THROWS_AS(parse_machine_config("blocks=x\n"), Error);
  CHECK_THROWS_AS(parse_machine_config("blocks=0\n"), Error);
}
