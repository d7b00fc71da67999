#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "smash/error.hpp"
#include "smash/kernel/smash.hpp"
#include "test_util.hpp"

using namespace smash;
using smash::testing::from_rows;
using smash::testing::random_csr;

namespace {

sim::MachineConfig small_machine() {
  sim::MachineConfig m;
  m.spad_bytes = 512 * 1024;
  return m;
}

KernelOptions small_options() {
  KernelOptions o;
  o.plan.max_window_rows = 1024;
  return o;
}

// Every 64th row in the first half carries 64 times the nonzeros of the others.
CsrMatrix skewed_a(std::size_t rows, std::size_t cols) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t n = (i % 64 == 0 && i < rows / 2) ? 64 : 1;
    for (std::size_t k = 0; k < n; ++k) t.push_back({Index(i), Index((i * 7 + k * 13) % cols), 1.0});
  }
  return csr_from_triplets(t, rows, cols);
}

CsrMatrix banded_b(std::size_t n, std::size_t per_row) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < per_row; ++k) t.push_back({Index(i), Index((i * 5 + k * 97) % n), double(k + 1)});
  return csr_from_triplets(t, n, n);
}

}  // namespace

TEST_CASE("tags and hash functions") {
  CHECK(tag_encode(0, 0, 16384) == 0);
  CHECK(tag_encode(1, 3, 16384) == 16387);
  CHECK(tag_decode(16387, 16384) == std::pair<std::uint64_t, std::uint64_t>{1, 3});
  CHECK_THROWS_AS(tag_encode(0, 5, 5), Error);
  CHECK_THROWS_AS(tag_encode(std::uint64_t{1} << 62, 0, 4), Error);
  for (std::uint64_t i = 0; i < 100; ++i) {
    const std::uint64_t r = i * 7919 % 5000, c = i * 104729 % 3000;
    CHECK(tag_decode(tag_encode(r, c, 3000), 3000) == std::pair{r, c});
  }

  CHECK(hash_upper(13, 2, 8) == 3);
  for (std::uint64_t t = 12; t < 16; ++t) CHECK(hash_upper(t, 2, 8) == 3);
  CHECK(hash_lower(13, 8) == 5);
  std::vector<std::uint64_t> s;
  for (std::uint64_t t = 12; t < 16; ++t) s.push_back(hash_lower(t, 8));
  std::sort(s.begin(), s.end());
  CHECK(std::unique(s.begin(), s.end()) == s.end());

  CHECK(shift_for(1, 8) == 0);
  CHECK(shift_for(8, 8) == 0);
  CHECK(shift_for(9, 8) == 1);
  CHECK(shift_for(64, 8) == 3);
}

TEST_CASE("probe_insert") {
  HashTable t(8);
  CHECK(t.probe_insert(7, 1.0, 3) == 3);
  CHECK(t.tag_at(3) == 7);
  CHECK(t.probe_insert(7, 2.0, 3) == 3);
  CHECK(t.value_at(3) == 3.0);
  CHECK(t.stats().collisions == 0);
  CHECK(t.stats().merges == 1);
  CHECK(t.stats().insertions == 1);

  HashTable w(4);
  w.probe_insert(99, 1.0, 3);
  CHECK(w.probe_insert(11, 2.0, 3) == 0);
  CHECK(w.stats().collisions == 1);
  CHECK(w.stats().max_probe_length == 1);

  HashTable full(2);
  full.probe_insert(1, 1.0, 0);
  full.probe_insert(2, 1.0, 0);
  CHECK_THROWS_AS(full.probe_insert(3, 1.0, 0), Error);
  CHECK_THROWS_AS(HashTable(6), Error);
}

TEST_CASE("writeback_compact") {
  HashTable t(4);
  t.probe_insert(7, 3.0, 3);
  t.probe_insert(11, 2.0, 3);  // wraps to slot 0
  const auto out = writeback_compact(t, 2, 4, 2, [](std::uint64_t) { return std::uint64_t{3}; });
  REQUIRE(out.size() == 2);
  CHECK(out[0] == TaggedValue{7, 3.0});
  CHECK(out[1] == TaggedValue{11, 2.0});

  HashTable e(16);
  CHECK(writeback_compact(e, 0, 4, 4, [](std::uint64_t x) { return x % 16; }).empty());

  std::vector<TaggedValue> v{{5, 0}, {3, 0}, {4, 0}};
  CHECK(insertion_sort_by_tag(v) == 2);
  CHECK(v[0].tag == 3);
  CHECK(v[2].tag == 5);
}

TEST_CASE("clustered tag stream collides less under hash_lower") {
  HashTable up(4096), lo(4096);
  const unsigned shift = 4;
  std::vector<std::uint64_t> order;
  for (std::uint64_t t = 0; t < 1024; ++t) {
    const std::uint64_t tag = 40000 + t;
    up.probe_insert(tag, 1.0, hash_upper(tag, shift, 4096));
    lo.probe_insert(tag, 1.0, hash_lower(tag, 4096));
  }
  CHECK(lo.stats().collisions < up.stats().collisions);
}

TEST_CASE("window planner") {
  const auto e = CsrMatrix::empty(10, 10);
  const auto p0 = plan_windows(e, e);
  CHECK(p0.windows.size() == 1);
  CHECK(p0.windows[0].est_flops == 0);

  // 8 outputs per row, 64 bins at half occupancy: 4 rows per window.
  std::vector<Triplet> t;
  for (Index i = 0; i < 16; ++i)
    for (Index k = 0; k < 8; ++k) t.push_back({i, Index((i * 8 + k) % 64), 1.0});
  const auto a = csr_from_triplets(t, 16, 64);
  PlanConfig cfg;
  cfg.spad_bins = 64;
  const auto p = plan_windows(a, CsrMatrix::identity(64), cfg);
  REQUIRE(p.windows.size() == 4);
  for (const auto& w : p.windows) {
    CHECK(w.rows() == 4);
    CHECK(w.est_outputs == 32);
  }
  p.validate();

  // A row with more flops than columns is dense and adds no occupancy.
  const auto d = from_rows(2, 2, {1, 1, 0, 1});
  PlanConfig c2;
  c2.spad_bins = 4;
  c2.dense_threshold = 1;
  const auto pd = plan_windows(d, from_rows(2, 2, {1, 1, 1, 1}), c2);
  CHECK(pd.windows[0].dense(0));
  CHECK(pd.windows[0].dense(1));

  PlanConfig bad;
  bad.spad_bins = 100;
  CHECK_THROWS_AS(plan_windows(e, e, bad), Error);
  CHECK_THROWS_AS(plan_windows(CsrMatrix::empty(2, 3), e), Error);
}

TEST_CASE("table slots follow the scratchpad size") {
  sim::MachineConfig m;
  CHECK(table_slots_for(m, PlanConfig{}) == 131072);
  m.spad_bytes = 64;
  CHECK_THROWS_AS(table_slots_for(m, PlanConfig{}), Error);
}

TEST_CASE("2x2 example on all versions") {
  const auto a = from_rows(2, 2, {1, 0, 0, 2});
  const auto b = from_rows(2, 2, {0, 3, 4, 0});
  const auto ref = dense_multiply_oracle(a, b);
  for (int v = 1; v <= 3; ++v) {
    CAPTURE(v);
    const auto r = run_smash(v, a, b, small_machine(), small_options());
    CHECK(compare_matrices(ref, r.output).equal);
    CHECK(r.windows == 1);
    CHECK(r.trace.barrier_count == 3);
    CHECK(r.flops == 2);
    CHECK(r.probe.insertions + r.probe.merges == 2);
    CHECK(r.output.sorted == (v == 1));
  }
}

TEST_CASE("kernels match the oracle on random inputs") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const std::size_t n = 10 + seed * 19;
    const double density = 0.002 + 0.098 * double(seed % 6) / 5.0;
    const auto a = random_csr(n, n + 3, density, 300 + seed), b = random_csr(n + 3, n, density, 400 + seed);
    const auto ref = dense_multiply_oracle(a, b);
    const auto f = symbolic_row_flops(a, b);
    const auto flops = std::accumulate(f.begin(), f.end(), std::uint64_t{0});
    for (int v = 1; v <= 3; ++v) {
      CAPTURE(seed);
      CAPTURE(v);
      const auto r = run_smash(v, a, b, small_machine(), small_options());
      const auto mm = compare_matrices(ref, r.output);
      CHECK_MESSAGE(mm.equal, mm.reason << " at " << mm.row << "," << mm.col);
      CHECK(r.flops == flops);
      CHECK(r.probe.insertions + r.probe.merges == flops);
      if (v == 1) CHECK(r.output.sorted);
    }
  }
}

TEST_CASE("many windows, dense rows and several blocks") {
  const auto a = random_csr(300, 40, 0.2, 11), b = random_csr(40, 50, 0.3, 12);
  const auto ref = dense_multiply_oracle(a, b);
  KernelOptions o = small_options();
  o.plan.max_window_rows = 16;
  o.plan.dense_threshold = 20;
  for (std::uint32_t blocks : {1u, 3u}) {
    sim::MachineConfig m = small_machine();
    m.blocks = blocks;
    const auto plan = plan_for_machine(a, b, m, o);
    CHECK(plan.windows.size() > 4);
    std::size_t dense = 0;
    for (const auto& w : plan.windows) dense += w.dense_rows();
    CHECK(dense > 0);
    for (int v = 1; v <= 3; ++v) {
      CAPTURE(blocks);
      CAPTURE(v);
      const auto r = run_smash(v, a, b, m, o);
      CHECK(compare_matrices(ref, r.output).equal);
      CHECK(r.trace.barrier_count == 3 * r.windows);
    }
  }
}

TEST_CASE("version 1 replans windows whose probes exceed the offset threshold") {
  const auto a = random_csr(64, 64, 0.1, 5), b = random_csr(64, 256, 0.1, 6);
  KernelOptions o = small_options();
  o.offset_threshold = 1;
  o.plan.occupancy_limit = 1.0;
  sim::MachineConfig m = small_machine();
  m.spad_bytes = 96 * 1024;
  o.plan.max_window_rows = 64;
  const auto r = run_smash(1, a, b, m, o);
  CHECK(r.replans > 0);
  CHECK(r.windows > r.plan_windows);
  CHECK(compare_matrices(dense_multiply_oracle(a, b), r.output).equal);
  CHECK(r.output.sorted);
  CHECK(r.probe.insertions + r.probe.merges == r.flops);
}

TEST_CASE("output is independent of thread priority") {
  const auto a = random_csr(120, 120, 0.05, 77), b = random_csr(120, 120, 0.05, 78);
  for (int v = 2; v <= 3; ++v) {
    sim::MachineConfig m = small_machine();
    const auto base = canonicalize(run_smash(v, a, b, m, small_options()).output);
    for (std::uint64_t seed : {1u, 9u, 123u}) {
      m.schedule_seed = seed;
      const auto other = canonicalize(run_smash(v, a, b, m, small_options()).output);
      CHECK(other.col_idx == base.col_idx);
      CHECK(other.values == base.values);
      CHECK(other.row_ptr == base.row_ptr);
    }
  }
}

TEST_CASE("skewed window: static rows are unbalanced, tokens are not") {
  const auto a = skewed_a(16384, 3000);
  const auto b = banded_b(3000, 2);
  const sim::MachineConfig m;
  const auto plan = plan_for_machine(a, b, m);
  REQUIRE(plan.windows.size() == 1);
  const auto r1 = smash_v1(a, b, m, plan);
  const auto r2 = smash_v2(a, b, m, plan);
  CHECK(r1.window_stats[0].max_over_mean() >= 4.0);
  CHECK(r2.window_stats[0].max_over_mean() < 1.2);
  CHECK(r2.window_stats[0].imbalance() < r1.window_stats[0].imbalance());
  CHECK(compare_matrices(r1.output, r2.output).equal);
}

TEST_CASE("kernel report json") {
  const auto a = from_rows(2, 2, {1, 0, 0, 2});
  const auto r = run_smash(2, a, a, small_machine(), small_options());
  const auto s = kernel_report_json(r);
  CHECK(s.find("\"version\": 2") != std::string::npos);
  CHECK(s.find("\"window_stats\"") != std::string::npos);
  CHECK(s == kernel_report_json(run_smash(2, a, a, small_machine(), small_options())));
}
