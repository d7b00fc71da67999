#include "engine.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "smash/error.hpp"

namespace smash::kimpl {

namespace {

constexpr std::uint64_t kTagBits = 40;
constexpr std::uint64_t kOffsetBits = 24;
constexpr std::uint64_t kOffsetMask = (std::uint64_t{1} << kOffsetBits) - 1;

std::uint64_t round64(std::uint64_t x) { return (x + 63) / 64 * 64; }

}  // namespace

std::uint64_t ctrl_bytes(std::uint32_t nsec) { return round64(8 * (kSections + 2 * std::uint64_t{nsec})); }

Env::Env(int version_, const CsrMatrix& a_, const CsrMatrix& b_, const sim::MachineConfig& cfg,
         const WindowPlan& plan_, const KernelOptions& opt_)
    : version(version_), a(a_), b(b_), plan(plan_), opt(opt_), m(cfg) {
  if (a.ncols != b.nrows)
    fail(ErrorCode::kDimensionMismatch, "smash: A has " + std::to_string(a.ncols) + " columns, B has " +
                                            std::to_string(b.nrows) + " rows");
  if (plan.nrows != a.nrows || plan.ncols != b.ncols)
    fail(ErrorCode::kInvalidArgument, "smash: window plan was built for different operands");
  plan.validate();
  nsec = cfg.mtc_threads_per_block();
  nblocks = cfg.blocks;
  // The version-3 table lives in DRAM and is not bound by the scratchpad.
  if (!is_pow2(opt.dram_table_factor)) fail(ErrorCode::kInvalidArgument, "smash: dram_table_factor must be a power of two");
  cap = version == 3 ? plan.spad_bins * opt.dram_table_factor : plan.spad_bins;
  ncols = std::max<std::uint64_t>(b.ncols, 1);
  section_slots = cap / nsec;
  if (section_slots == 0) fail(ErrorCode::kCapacity, "smash: fewer hashtable slots than threads");

  A = upload(a);
  B = upload(b);

  // Window packages: distinct referenced B rows and each A nonzero's offset into them.
  std::vector<std::uint32_t> boff(a.nnz());
  std::uint64_t max_rows = 1, max_anz = 1, max_bcols = 1, max_dense = 1;
  packages.resize(plan.windows.size());
  for (std::size_t w = 0; w < plan.windows.size(); ++w) {
    const Window& win = plan.windows[w];
    const Offset p0 = a.row_ptr[win.row_begin], p1 = a.row_ptr[win.row_end];
    auto& rows = packages[w];
    rows.assign(a.col_idx.begin() + std::ptrdiff_t(p0), a.col_idx.begin() + std::ptrdiff_t(p1));
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    std::vector<std::uint64_t> start(rows.size());
    std::uint64_t off = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      start[i] = off;
      off += b.row_nnz(rows[i]);
    }
    for (Offset p = p0; p < p1; ++p) {
      const auto it = std::lower_bound(rows.begin(), rows.end(), a.col_idx[p]);
      boff[p] = std::uint32_t(start[std::size_t(it - rows.begin())]);
    }
    max_rows = std::max<std::uint64_t>(max_rows, win.rows());
    max_anz = std::max<std::uint64_t>(max_anz, p1 - p0);
    max_bcols = std::max<std::uint64_t>(max_bcols, off);
    max_dense = std::max<std::uint64_t>(max_dense, win.dense_rows());
  }
  manifest = alloc(4 * boff.size(), 0);
  if (!boff.empty()) m.write_bytes(manifest, boff.data(), 4 * boff.size());

  if (version == 3) {
    std::vector<std::uint32_t> bound(2 * a.nrows, 0);
    for (const Window& win : plan.windows)
      for (Index r = win.row_begin; r < win.row_end; ++r) {
        if (win.dense(r)) continue;
        const Offset rs = a.row_ptr[r], re = a.row_ptr[r + 1], mid = rs + (re - rs) / 2;
        std::uint64_t f[2] = {0, 0};
        for (Offset p = rs; p < re; ++p) f[p >= mid] += b.row_nnz(a.col_idx[p]);
        bound[2 * r] = std::uint32_t(std::min<std::uint64_t>(f[0], ncols));
        bound[2 * r + 1] = std::uint32_t(std::min<std::uint64_t>(f[1], ncols));
      }
    tok_bound = alloc(4 * bound.size(), 0);
    if (!bound.empty()) m.write_bytes(tok_bound, bound.data(), 4 * bound.size());
    if (max_rows * ncols >= (std::uint64_t{1} << kTagBits) - 1)
      fail(ErrorCode::kCapacity, "smash v3: window tag space exceeds 40 bits");
  }

  std::uint64_t out_capacity = 0;
  for (Index r = 0; r < a.nrows; ++r) out_capacity += std::min<std::uint64_t>(plan.row_flops[r], ncols);
  out_start = alloc(8 * a.nrows, 0);
  out_len = alloc(8 * a.nrows, 0);
  out_col = alloc(4 * out_capacity, 0);
  out_val = alloc(8 * out_capacity, 0);
  out_cursor = alloc(8, 0);

  blocks.resize(nblocks);
  for (std::uint32_t blk = 0; blk < nblocks; ++blk) {
    layout_block(blk, max_rows, max_anz, max_bcols);
    const std::uint64_t acc_bytes = max_dense * ncols * 16;
    blocks[blk].dense_acc = alloc(acc_bytes, blk);
  }
  stats.resize(m.total_threads());

  if (version != 1) {
    // Token claim order per job, heaviest half-rows first.
    std::vector<std::uint32_t> order(2 * a.nrows, 0);
    std::vector<std::uint64_t> weight;
    for (std::uint32_t blk = 0; blk < nblocks; ++blk)
      for (const Job& job : initial_jobs(blk)) {
        const Index lo = job.w.row_begin;
        weight.assign(2 * job.rows(), 0);
        for (Index r = lo; r < job.w.row_end; ++r) {
          const Offset rs = a.row_ptr[r], re = a.row_ptr[r + 1], mid = rs + (re - rs) / 2;
          for (Offset p = rs; p < re; ++p) weight[2 * (r - lo) + (p >= mid)] += b.row_nnz(a.col_idx[p]);
        }
        const auto first = order.begin() + std::ptrdiff_t(2 * lo);
        const auto last = first + std::ptrdiff_t(weight.size());
        std::iota(first, last, 0u);
        std::stable_sort(first, last, [&](std::uint32_t x, std::uint32_t y) { return weight[x] > weight[y]; });
      }
    tok_order = alloc(4 * order.size(), 0);
    if (!order.empty()) m.write_bytes(tok_order, order.data(), 4 * order.size());
  }
}

Addr Env::alloc(std::uint64_t bytes, std::uint32_t affinity) {
  return m.dgas_partition(std::max<std::uint64_t>(bytes, 8), affinity).base;
}

DevCsr Env::upload(const CsrMatrix& mat) {
  DevCsr d;
  d.row_ptr = alloc(8 * mat.row_ptr.size(), 0);
  d.col = alloc(4 * mat.nnz(), 0);
  d.val = alloc(8 * mat.nnz(), 0);
  m.write_bytes(d.row_ptr, mat.row_ptr.data(), 8 * mat.row_ptr.size());
  if (mat.nnz()) {
    m.write_bytes(d.col, mat.col_idx.data(), 4 * mat.nnz());
    m.write_bytes(d.val, mat.values.data(), 8 * mat.nnz());
  }
  return d;
}

void Env::layout_block(std::uint32_t blk, std::uint64_t max_rows, std::uint64_t max_anz, std::uint64_t max_bcols) {
  BlockMem& bm = blocks[blk];
  const sim::Range spad = m.spad(blk);
  Addr next = spad.base;
  auto take = [&](std::uint64_t bytes) {
    const Addr at = next;
    next += round64(bytes);
    if (next > spad.end())
      fail(ErrorCode::kCapacity, "smash: scratchpad of " + std::to_string(spad.bytes) + " bytes is too small");
    return at;
  };
  bm.ctrl = take(ctrl_bytes(nsec));
  bm.row_count = take(8 * max_rows);
  bm.row_base = take(8 * max_rows);
  bm.row_len = take(8 * max_rows);
  bm.row_aux = take(8 * max_rows);
  if (version == 3) {
    bm.tok_base = take(8 * max_rows);
    bm.tok_count = take(8 * max_rows);
    const std::uint64_t left = spad.end() > next ? spad.end() - next : 0;
    dense_entries = std::min<std::uint64_t>(left / 32 > 64 ? left / 32 - 64 : 0, kOffsetMask);
    if (dense_entries == 0) fail(ErrorCode::kCapacity, "smash v3: no scratchpad left for dense staging");
    for (int p = 0; p < 2; ++p) {
      bm.dcol[p] = take(4 * dense_entries);
      bm.dval[p] = take(8 * dense_entries);
      bm.doff[p] = take(4 * dense_entries);
      bm.dtable[p] = alloc(8 * cap, blk);
      m.fill(bm.dtable[p], 8 * cap, 0xFF);
    }
  } else {
    bm.tags = take(8 * cap);
    bm.vals = take(8 * cap);
    m.fill(bm.tags, 8 * cap, 0xFF);
  }
  bm.part_rowptr = alloc(8 * (max_rows + 1), blk);
  bm.part_col = alloc(4 * max_anz, blk);
  bm.part_val = alloc(8 * max_anz, blk);
  bm.part_boff = alloc(4 * max_anz, blk);
  bm.part_bcol = alloc(4 * max_bcols, blk);
  std::vector<std::uint32_t> flush{blk};
  bm.barrier = m.make_barrier(nsec + 1, flush);
}

Job Env::make_job(std::uint32_t plan_index, Index begin, Index end, bool force_dense) const {
  Job j;
  j.plan_index = plan_index;
  j.w = plan.make_window(begin, end);
  if (force_dense)
    for (auto& c : j.w.row_class) c = RowClass::kDense;
  j.a_begin = a.row_ptr[begin];
  j.a_end = a.row_ptr[end];
  j.dense_ord.assign(j.w.rows(), Job::kNone);
  std::uint32_t ord = 0;
  for (std::uint32_t r = 0; r < j.w.rows(); ++r)
    if (j.dense(r)) j.dense_ord[r] = ord++;
  return j;
}

std::deque<Job> Env::initial_jobs(std::uint32_t block) const {
  std::deque<Job> jobs;
  for (std::uint32_t w = block; w < plan.windows.size(); w += nblocks) {
    const Window& win = plan.windows[w];
    if (version != 3) {
      jobs.push_back(make_job(w, win.row_begin, win.row_end));
      continue;
    }
    // Split until the token staging bound fits one dense buffer.
    std::vector<std::pair<Index, Index>> todo{{win.row_begin, win.row_end}};
    while (!todo.empty()) {
      auto [lo, hi] = todo.back();
      todo.pop_back();
      std::uint64_t need = 0;
      for (Index r = lo; r < hi; ++r)
        if (!win.dense(r)) need += std::min<std::uint64_t>(plan.row_flops[r], 2 * ncols);
      if (need <= dense_entries || hi - lo == 1) {
        if (need > dense_entries) fail(ErrorCode::kCapacity, "smash v3: row exceeds dense staging capacity");
        jobs.push_back(make_job(w, lo, hi));
        continue;
      }
      const Index mid = lo + (hi - lo) / 2;
      todo.push_back({mid, hi});
      todo.push_back({lo, mid});
    }
  }
  return jobs;
}

Task<> Env::ship(ThreadContext& ctx, const Job& job, bool package) {
  const BlockMem& bm = blocks[ctx.block()];
  const std::uint64_t anz = job.a_end - job.a_begin;
  sim::DmaHandle last;
  {
    const auto req = sim::DmaRequest::copy(A.row_ptr + 8 * job.w.row_begin, bm.part_rowptr, 8 * (job.rows() + 1));
    last = co_await ctx.dma(req);
  }
  if (anz > 0) {
    const auto col = sim::DmaRequest::copy(A.col + 4 * job.a_begin, bm.part_col, 4 * anz);
    last = co_await ctx.dma(col);
    const auto val = sim::DmaRequest::copy(A.val + 8 * job.a_begin, bm.part_val, 8 * anz);
    last = co_await ctx.dma(val);
    const auto man = sim::DmaRequest::copy(manifest + 4 * job.a_begin, bm.part_boff, 4 * anz);
    last = co_await ctx.dma(man);
  }
  std::uint64_t off = 0;
  if (package) {
    for (const Index k : packages[job.plan_index]) {
      const auto bs = co_await ctx.load<std::uint64_t>(B.row_ptr + 8 * k);
      const auto be = co_await ctx.load<std::uint64_t>(B.row_ptr + 8 * (k + 1));
      if (be == bs) continue;
      const auto req = sim::DmaRequest::copy(B.col + 4 * bs, bm.part_bcol + 4 * off, 4 * (be - bs));
      last = co_await ctx.dma(req);
      off += be - bs;
    }
  }
  // The engine completes requests in order.
  co_await ctx.dma_wait(last);
}

Task<bool> Env::products(ThreadContext& ctx, const Job& job, std::uint32_t j, std::uint64_t p0, std::uint64_t p1,
                         Staging& cur) {
  const BlockMem& bm = blocks[ctx.block()];
  ThreadStats& st = stats[ctx.tid()];
  const bool dense = job.dense(j);
  const Addr acc = dense ? dense_acc(ctx.block(), job.dense_ord[j]) : 0;
  const std::uint64_t tag_base = std::uint64_t(j) * ncols;
  const unsigned shift = job.w.hash_shift;
  const std::uint64_t mask = cap - 1;
  const std::uint64_t limit = version == 1 ? opt.offset_threshold : cap - 1;

  for (std::uint64_t p = p0; p < p1; ++p) {
    const auto k = co_await ctx.load<std::uint32_t>(bm.part_col + 4 * p);
    const auto av = co_await ctx.load<double>(bm.part_val + 8 * p);
    const auto boff = co_await ctx.load<std::uint32_t>(bm.part_boff + 4 * p);
    const auto bs = co_await ctx.load<std::uint64_t>(B.row_ptr + 8 * std::uint64_t(k));
    const auto be = co_await ctx.load<std::uint64_t>(B.row_ptr + 8 * (std::uint64_t(k) + 1));
    for (std::uint64_t q = bs; q < be; ++q) {
      const auto col = co_await ctx.load<std::uint32_t>(bm.part_bcol + 4 * (boff + (q - bs)));
      const auto bv = co_await ctx.load<double>(B.val + 8 * q);
      co_await ctx.alu(2);
      const double prod = av * bv;
      ++st.flops_cur;

      if (dense) {
        const auto r = co_await ctx.cas(acc + 16 * col, 0, 1);
        if (r.success) {
          co_await ctx.fetch_add(bm.row_count + 8 * j, 1);
          ++st.cur.insertions;
        } else {
          ++st.cur.merges;
        }
        co_await ctx.fetch_add_real(acc + 16 * col + 8, prod);
        continue;
      }

      // Versions 2 and 3 linearize column-major inside the window so the
      // kept low bits carry the row offset.
      const std::uint64_t tag = version == 1 ? tag_base + col : std::uint64_t(col) * job.tag_stride() + j;
      if (version == 3) {
        const std::uint64_t idx = cur.next;
        const std::uint32_t par = cur.parity;
        co_await ctx.store<double>(bm.dval[par] + 8 * idx, prod);
        const std::uint64_t home = hash_lower(tag, cap);
        for (std::uint64_t d = 0;; ++d) {
          if (d > limit) fail(ErrorCode::kWindowOverflow, "smash v3: DRAM hashtable full");
          const std::uint64_t slot = (home + d) & mask;
          const auto r = co_await ctx.cas(bm.dtable[par] + 8 * slot, kEmptyTag, (tag << kOffsetBits) | idx);
          if (r.success) {
            co_await ctx.store<std::uint32_t>(bm.dcol[par] + 4 * idx, col);
            co_await ctx.store<std::uint32_t>(bm.doff[par] + 4 * idx, std::uint32_t(slot));
            ++cur.next;
            ++st.cur.insertions;
            st.cur.max_probe_length = std::max(st.cur.max_probe_length, d);
            break;
          }
          if ((r.observed >> kOffsetBits) == tag) {
            co_await ctx.fetch_add_real(bm.dval[par] + 8 * (r.observed & kOffsetMask), prod);
            ++st.cur.merges;
            st.cur.max_probe_length = std::max(st.cur.max_probe_length, d);
            break;
          }
          ++st.cur.collisions;
          co_await ctx.alu(1);
        }
        continue;
      }

      const std::uint64_t home = version == 1 ? hash_upper(tag, shift, cap) : hash_lower(tag, cap);
      for (std::uint64_t d = 0;; ++d) {
        if (d > limit) {
          if (version != 1) fail(ErrorCode::kWindowOverflow, "smash: scratchpad hashtable full");
          co_await ctx.store<std::uint64_t>(cur.flag, 1);
          co_return false;
        }
        const std::uint64_t slot = (home + d) & mask;
        const auto r = co_await ctx.cas(bm.tags + 8 * slot, kEmptyTag, tag);
        if (r.success) {
          co_await ctx.fetch_add_real(bm.vals + 8 * slot, prod);
          co_await ctx.fetch_add(bm.row_count + 8 * j, 1);
          if (version == 1) co_await ctx.fetch_add(bm.word(kSections + section_of(home)), 1);
          ++st.cur.insertions;
          st.cur.max_probe_length = std::max(st.cur.max_probe_length, d);
          break;
        }
        if (r.observed == tag) {
          co_await ctx.fetch_add_real(bm.vals + 8 * slot, prod);
          ++st.cur.merges;
          st.cur.max_probe_length = std::max(st.cur.max_probe_length, d);
          break;
        }
        ++st.cur.collisions;
        co_await ctx.alu(1);
      }
    }
  }
  co_return true;
}

Task<> Env::prefix(ThreadContext& ctx, const Job& job, bool overflow) {
  const BlockMem& bm = blocks[ctx.block()];
  std::uint64_t acc = 0, dense_acc_count = 0;
  for (std::uint32_t j = 0; j < job.rows(); ++j) {
    std::uint64_t c = 0;
    if (version == 3) {
      c += co_await ctx.load<std::uint32_t>(bm.tok_count + 4 * (2 * std::uint64_t(j)));
      c += co_await ctx.load<std::uint32_t>(bm.tok_count + 4 * (2 * std::uint64_t(j) + 1));
    }
    if (version != 3 || job.dense(j)) {
      c += std::uint64_t(co_await ctx.load<std::int64_t>(bm.row_count + 8 * j));
      co_await ctx.store<std::int64_t>(bm.row_count + 8 * j, 0);
    }
    if (!overflow) {
      co_await ctx.store<std::uint64_t>(bm.row_base + 8 * j, acc);
      co_await ctx.store<std::uint64_t>(bm.row_len + 8 * j, c);
      if (version == 1) co_await ctx.store<std::uint64_t>(bm.row_aux + 8 * j, dense_acc_count);
      if (version == 2) co_await ctx.store<std::uint64_t>(bm.row_aux + 8 * j, acc);
    }
    co_await ctx.alu(1);
    if (job.dense(j)) dense_acc_count += c;
    acc += c;
  }
  if (version == 1) {
    std::uint64_t sacc = 0;
    for (std::uint32_t s = 0; s < nsec; ++s) {
      const auto c = co_await ctx.load<std::int64_t>(bm.word(kSections + s));
      co_await ctx.store<std::int64_t>(bm.word(kSections + s), 0);
      co_await ctx.store<std::uint64_t>(bm.word(kSections + nsec + s), sacc);
      sacc += std::uint64_t(c);
    }
  }
  if (!overflow) {
    const auto frag = co_await ctx.fetch_add(out_cursor, std::int64_t(acc));
    co_await ctx.store<std::int64_t>(bm.word(kFragBase), frag);
  }
  co_await ctx.store<std::int64_t>(bm.word(kDoneCounter), 0);
  co_await ctx.store<std::int64_t>(bm.word(kTokenCounter), 0);
}

Task<> Env::finish_rows(ThreadContext& ctx, const Job& job, std::uint32_t s, bool emit) {
  const BlockMem& bm = blocks[ctx.block()];
  std::uint64_t frag = 0;
  if (emit && s < job.rows()) frag = std::uint64_t(co_await ctx.load<std::int64_t>(bm.word(kFragBase)));
  for (std::uint32_t j = s; j < job.rows(); j += nsec) {
    std::uint64_t base = 0;
    if (emit) {
      base = co_await ctx.load<std::uint64_t>(bm.row_base + 8 * j);
      const auto len = co_await ctx.load<std::uint64_t>(bm.row_len + 8 * j);
      const Index row = job.w.row_begin + j;
      co_await ctx.store<std::uint64_t>(out_start + 8 * std::uint64_t(row), frag + base);
      co_await ctx.store<std::uint64_t>(out_len + 8 * std::uint64_t(row), len);
    }
    if (!job.dense(j)) continue;
    const Addr acc = dense_acc(ctx.block(), job.dense_ord[j]);
    std::uint64_t pos = frag + base;
    for (std::uint64_t c = 0; c < ncols; ++c) {
      const auto mark = co_await ctx.load<std::uint64_t>(acc + 16 * c);
      if (!mark) continue;
      const auto v = co_await ctx.load<double>(acc + 16 * c + 8);
      if (emit) {
        co_await ctx.store<std::uint32_t>(out_col + 4 * pos, std::uint32_t(c));
        co_await ctx.store<double>(out_val + 8 * pos, v);
        ++pos;
      }
      co_await ctx.store<std::uint64_t>(acc + 16 * c, 0);
      co_await ctx.store<double>(acc + 16 * c + 8, 0.0);
    }
  }
}

KernelReport Env::report() {
  KernelReport r;
  r.version = version;
  r.machine = m.config();
  r.trace = std::move(trace);
  r.plan_windows = plan.windows.size();
  r.windows = attempts.size();
  r.table_slots = cap;
  r.hash_shift = plan.hash_shift;
  for (const auto& at : attempts) r.replans += at.overflow;
  for (const auto& st : stats) {
    r.probe += st.total;
    r.flops += st.flops_total;
  }

  r.window_stats.resize(plan.windows.size());
  for (std::size_t w = 0; w < plan.windows.size(); ++w) {
    auto& ws = r.window_stats[w];
    ws.row_begin = plan.windows[w].row_begin;
    ws.row_end = plan.windows[w].row_end;
    ws.block = std::uint32_t(w % nblocks);
    ws.hashing_active.assign(nsec, 0);
  }
  const std::uint32_t tpb = m.config().threads_per_block();
  for (const auto& at : attempts) {
    auto& ws = r.window_stats[at.plan_index];
    ++ws.attempts;
    const auto it = r.trace.phases.find(label(at.block, at.attempt, 1));
    if (it == r.trace.phases.end()) continue;
    for (std::uint32_t s = 0; s < nsec; ++s) ws.hashing_active[s] += it->second[at.block * tpb + s].active_cycles;
  }
  for (const auto& [lab, counters] : r.trace.phases) {
    for (std::uint32_t t = 0; t < counters.size(); ++t)
      if (r.trace.is_mtc_thread(t)) r.phase_issued[lab % 3] += counters[t].issued;
  }

  // Download C.
  CsrMatrix& c = r.output;
  c.nrows = a.nrows;
  c.ncols = b.ncols;
  c.sorted = version == 1;
  c.row_ptr.assign(a.nrows + 1, 0);
  std::vector<std::uint64_t> start(a.nrows), len(a.nrows);
  if (a.nrows) {
    m.read_bytes(out_start, start.data(), 8 * a.nrows);
    m.read_bytes(out_len, len.data(), 8 * a.nrows);
  }
  for (std::size_t i = 0; i < a.nrows; ++i) c.row_ptr[i + 1] = c.row_ptr[i] + len[i];
  c.col_idx.resize(c.row_ptr.back());
  c.values.resize(c.row_ptr.back());
  for (std::size_t i = 0; i < a.nrows; ++i) {
    if (!len[i]) continue;
    m.read_bytes(out_col + 4 * start[i], c.col_idx.data() + c.row_ptr[i], 4 * len[i]);
    m.read_bytes(out_val + 8 * start[i], c.values.data() + c.row_ptr[i], 8 * len[i]);
  }
  return r;
}

}  // namespace smash::kimpl
