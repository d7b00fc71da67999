#include <deque>
#include <vector>

#include "engine.hpp"

namespace smash::kimpl {

namespace {

// After an overflowed version-1 attempt the window is halved; a single row
// falls back to its DRAM accumulator.
void advance(const Env& e, std::deque<Job>& jobs, bool overflow) {
  Job job = std::move(jobs.front());
  jobs.pop_front();
  if (!overflow) return;
  const Index lo = job.w.row_begin, hi = job.w.row_end;
  if (hi - lo > 1) {
    const Index mid = lo + (hi - lo) / 2;
    jobs.push_front(e.make_job(job.plan_index, mid, hi));
    jobs.push_front(e.make_job(job.plan_index, lo, mid));
  } else {
    jobs.push_front(e.make_job(job.plan_index, lo, hi, true));
  }
}

// Hashing-phase epilogue shared by all versions: the last thread to arrive
// runs the prefix pass, which is accounted to the writeback phase.
Task<> arrive(Env& e, ThreadContext& ctx, const Job& job, Addr flag, std::uint32_t attempt) {
  const BlockMem& bm = e.blocks[ctx.block()];
  const auto before = co_await ctx.fetch_add(bm.word(kDoneCounter), 1);
  if (before + 1 != std::int64_t(e.nsec)) co_return;
  ctx.set_phase(e.label(ctx.block(), attempt, 2));
  bool overflow = false;
  if (e.version == 1) overflow = co_await ctx.load<std::uint64_t>(flag) != 0;
  co_await e.prefix(ctx, job, overflow);
}

// Token loop of versions 2 and 3: claim a slot of the host-sorted token
// order, split the row's A segment in half
// by position, hash the half.
Task<> hash_tokens(Env& e, ThreadContext& ctx, const Job& job, std::uint32_t parity) {
  const BlockMem& bm = e.blocks[ctx.block()];
  const std::uint64_t tokens = 2 * std::uint64_t(job.rows());
  Env::Staging cur;
  cur.parity = parity;
  for (;;) {
    const auto k = std::uint64_t(co_await ctx.fetch_add(bm.word(kTokenCounter), 1));
    if (k >= tokens) break;
    const std::uint64_t t = co_await ctx.load<std::uint32_t>(e.tok_order + 4 * (2 * std::uint64_t(job.w.row_begin) + k));
    const std::uint32_t j = std::uint32_t(t / 2);
    const auto rs = co_await ctx.load<std::uint64_t>(bm.part_rowptr + 8 * j);
    const auto re = co_await ctx.load<std::uint64_t>(bm.part_rowptr + 8 * (j + 1));
    co_await ctx.alu(1);
    const std::uint64_t mid = rs + (re - rs) / 2;
    const std::uint64_t p0 = (t % 2 == 0 ? rs : mid) - job.a_begin;
    const std::uint64_t p1 = (t % 2 == 0 ? mid : re) - job.a_begin;
    if (e.version == 3) cur.next = co_await ctx.load<std::uint32_t>(bm.tok_base + 4 * t);
    const std::uint64_t first = cur.next;
    co_await e.products(ctx, job, j, p0, p1, cur);
    if (e.version == 3) co_await ctx.store<std::uint32_t>(bm.tok_count + 4 * t, std::uint32_t(cur.next - first));
  }
}

}  // namespace

Task<> v1_mtc(Env& e, std::uint32_t block, std::uint32_t s) {
  ThreadContext& ctx = e.m.context(e.m.mtc_slot(block, s));
  const BlockMem& bm = e.blocks[block];
  const auto& cfg = e.m.config();
  // Round-robin rows: consecutive rows go to different cores first.
  const std::uint32_t first = s / cfg.threads_per_mtc + cfg.mtc_per_block * (s % cfg.threads_per_mtc);
  const std::uint64_t mask = e.cap - 1;
  std::deque<Job> jobs = e.initial_jobs(block);
  std::vector<TaggedValue> buf;

  for (std::uint32_t attempt = 0; !jobs.empty(); ++attempt) {
    const Job& job = jobs.front();
    const Addr flag = bm.flag(attempt);
    ctx.set_phase(e.label(block, attempt, 0));
    co_await ctx.barrier(bm.barrier);

    ctx.set_phase(e.label(block, attempt, 1));
    Env::Staging cur;
    cur.flag = flag;
    for (std::uint32_t j = first; j < job.rows(); j += e.nsec) {
      if (co_await ctx.load<std::uint64_t>(flag)) break;
      const auto rs = co_await ctx.load<std::uint64_t>(bm.part_rowptr + 8 * j);
      const auto re = co_await ctx.load<std::uint64_t>(bm.part_rowptr + 8 * (j + 1));
      if (!co_await e.products(ctx, job, j, rs - job.a_begin, re - job.a_begin, cur)) break;
    }
    co_await arrive(e, ctx, job, flag, attempt);
    co_await ctx.barrier(bm.barrier);

    ctx.set_phase(e.label(block, attempt, 2));
    const bool overflow = co_await ctx.load<std::uint64_t>(flag) != 0;
    const std::uint64_t sb = e.section_begin(s), se = e.section_end(s);
    if (overflow) {
      for (std::uint64_t slot = sb; slot < se; ++slot) {
        if (co_await ctx.load<std::uint64_t>(bm.tags + 8 * slot) == kEmptyTag) continue;
        co_await ctx.store<std::uint64_t>(bm.tags + 8 * slot, kEmptyTag);
        co_await ctx.store<double>(bm.vals + 8 * slot, 0.0);
      }
    } else {
      const auto frag = std::uint64_t(co_await ctx.load<std::int64_t>(bm.word(kFragBase)));
      const auto sec_prefix = co_await ctx.load<std::uint64_t>(bm.word(kSections + e.nsec + s));
      const std::uint64_t span = std::min(e.cap, se - sb + e.opt.offset_threshold);
      buf.clear();
      for (std::uint64_t k = 0; k < span; ++k) {
        const std::uint64_t slot = (sb + k) & mask;
        const auto tag = co_await ctx.load<std::uint64_t>(bm.tags + 8 * slot);
        if (tag == kEmptyTag) continue;
        co_await ctx.alu(1);
        if (e.section_of(hash_upper(tag, job.w.hash_shift, e.cap)) != s) continue;
        const auto v = co_await ctx.load<double>(bm.vals + 8 * slot);
        co_await ctx.store<std::uint64_t>(bm.tags + 8 * slot, kEmptyTag);
        co_await ctx.store<double>(bm.vals + 8 * slot, 0.0);
        buf.push_back({tag, v});
      }
      const std::uint64_t moves = insertion_sort_by_tag(buf);
      if (moves + buf.size()) co_await ctx.alu(moves + buf.size());
      std::uint64_t row = ~std::uint64_t{0}, dense_before = 0;
      for (std::size_t i = 0; i < buf.size(); ++i) {
        const std::uint64_t rel = buf[i].tag / e.ncols;
        if (rel != row) {
          dense_before = co_await ctx.load<std::uint64_t>(bm.row_aux + 8 * rel);
          row = rel;
        }
        const std::uint64_t pos = frag + sec_prefix + i + dense_before;
        co_await ctx.store<std::uint32_t>(e.out_col + 4 * pos, std::uint32_t(buf[i].tag % e.ncols));
        co_await ctx.store<double>(e.out_val + 8 * pos, buf[i].value);
      }
    }
    co_await e.finish_rows(ctx, job, s, !overflow);
    co_await ctx.barrier(bm.barrier);

    if (overflow)
      e.stats[ctx.tid()].discard();
    else
      e.stats[ctx.tid()].commit();
    advance(e, jobs, overflow);
  }
}

Task<> v1_stc(Env& e, std::uint32_t block) {
  ThreadContext& ctx = e.m.context(e.m.stc_slot(block, 0));
  const BlockMem& bm = e.blocks[block];
  std::deque<Job> jobs = e.initial_jobs(block);
  std::uint32_t resident = Job::kNone;  // planned window whose B lists are in the partition
  for (std::uint32_t attempt = 0; !jobs.empty(); ++attempt) {
    const Job& job = jobs.front();
    ctx.set_phase(e.label(block, attempt, 0));
    co_await ctx.store<std::uint64_t>(bm.flag(attempt + 2), 0);
    co_await e.ship(ctx, job, job.plan_index != resident);
    resident = job.plan_index;
    co_await ctx.barrier(bm.barrier);
    ctx.set_phase(e.label(block, attempt, 1));
    co_await ctx.barrier(bm.barrier);
    ctx.set_phase(e.label(block, attempt, 2));
    const bool overflow = co_await ctx.load<std::uint64_t>(bm.flag(attempt)) != 0;
    co_await ctx.barrier(bm.barrier);
    e.attempts.push_back({job.plan_index, block, attempt, overflow});
    advance(e, jobs, overflow);
  }
}

Task<> v2_mtc(Env& e, std::uint32_t block, std::uint32_t s) {
  ThreadContext& ctx = e.m.context(e.m.mtc_slot(block, s));
  const BlockMem& bm = e.blocks[block];
  std::deque<Job> jobs = e.initial_jobs(block);
  for (std::uint32_t attempt = 0; !jobs.empty(); ++attempt) {
    const Job& job = jobs.front();
    ctx.set_phase(e.label(block, attempt, 0));
    co_await ctx.barrier(bm.barrier);

    ctx.set_phase(e.label(block, attempt, 1));
    co_await hash_tokens(e, ctx, job, 0);
    co_await arrive(e, ctx, job, 0, attempt);
    co_await ctx.barrier(bm.barrier);

    // Unsorted writeback: each entry takes the next position of its row.
    ctx.set_phase(e.label(block, attempt, 2));
    const auto frag = std::uint64_t(co_await ctx.load<std::int64_t>(bm.word(kFragBase)));
    for (std::uint64_t slot = e.section_begin(s); slot < e.section_end(s); ++slot) {
      const auto tag = co_await ctx.load<std::uint64_t>(bm.tags + 8 * slot);
      if (tag == kEmptyTag) continue;
      co_await ctx.alu(1);
      const std::uint64_t rel = tag % job.tag_stride();
      const auto v = co_await ctx.load<double>(bm.vals + 8 * slot);
      const auto pos = frag + std::uint64_t(co_await ctx.fetch_add(bm.row_aux + 8 * rel, 1));
      co_await ctx.store<std::uint32_t>(e.out_col + 4 * pos, std::uint32_t(tag / job.tag_stride()));
      co_await ctx.store<double>(e.out_val + 8 * pos, v);
      co_await ctx.store<std::uint64_t>(bm.tags + 8 * slot, kEmptyTag);
      co_await ctx.store<double>(bm.vals + 8 * slot, 0.0);
    }
    co_await e.finish_rows(ctx, job, s, true);
    co_await ctx.barrier(bm.barrier);
    e.stats[ctx.tid()].commit();
    jobs.pop_front();
  }
}

Task<> v3_mtc(Env& e, std::uint32_t block, std::uint32_t s) {
  ThreadContext& ctx = e.m.context(e.m.mtc_slot(block, s));
  const BlockMem& bm = e.blocks[block];
  std::deque<Job> jobs = e.initial_jobs(block);
  sim::DmaHandle pending[2];
  for (std::uint32_t attempt = 0; !jobs.empty(); ++attempt) {
    const Job& job = jobs.front();
    const std::uint32_t par = attempt % 2;
    ctx.set_phase(e.label(block, attempt, 0));
    co_await ctx.barrier(bm.barrier);

    ctx.set_phase(e.label(block, attempt, 1));
    co_await hash_tokens(e, ctx, job, par);
    co_await arrive(e, ctx, job, 0, attempt);
    co_await ctx.barrier(bm.barrier);

    // Hand each token's staged entries to the DMA engine; it also clears the
    // claimed DRAM slots. The transfers overlap the next window.
    ctx.set_phase(e.label(block, attempt, 2));
    const auto frag = std::uint64_t(co_await ctx.load<std::int64_t>(bm.word(kFragBase)));
    for (std::uint64_t t = s; t < 2 * std::uint64_t(job.rows()); t += e.nsec) {
      const auto n = co_await ctx.load<std::uint32_t>(bm.tok_count + 4 * t);
      if (n == 0) continue;
      const auto tb = co_await ctx.load<std::uint32_t>(bm.tok_base + 4 * t);
      std::uint64_t base = co_await ctx.load<std::uint64_t>(bm.row_base + 8 * (t / 2));
      if (t % 2) base += co_await ctx.load<std::uint32_t>(bm.tok_count + 4 * (t - 1));
      const std::uint64_t dst = frag + base;
      const auto cols = sim::DmaRequest::copy(bm.dcol[par] + 4 * tb, e.out_col + 4 * dst, 4 * std::uint64_t(n));
      co_await ctx.dma(cols);
      const auto vals = sim::DmaRequest::copy(bm.dval[par] + 8 * tb, e.out_val + 8 * dst, 8 * std::uint64_t(n));
      co_await ctx.dma(vals);
      const auto reset = sim::DmaRequest::scatter(bm.dtable[par], 8, bm.doff[par] + 4 * tb, n, kEmptyTag);
      pending[par] = co_await ctx.dma(reset);
    }
    co_await e.finish_rows(ctx, job, s, true);
    // The other buffer is reused by the next window.
    co_await ctx.dma_wait(pending[par ^ 1]);
    pending[par ^ 1] = {};
    co_await ctx.barrier(bm.barrier);
    e.stats[ctx.tid()].commit();
    jobs.pop_front();
  }
  co_await ctx.dma_wait(pending[0]);
  co_await ctx.dma_wait(pending[1]);
}

Task<> tokens_stc(Env& e, std::uint32_t block) {
  ThreadContext& ctx = e.m.context(e.m.stc_slot(block, 0));
  const BlockMem& bm = e.blocks[block];
  std::deque<Job> jobs = e.initial_jobs(block);
  std::uint32_t resident = Job::kNone;
  for (std::uint32_t attempt = 0; !jobs.empty(); ++attempt) {
    const Job& job = jobs.front();
    ctx.set_phase(e.label(block, attempt, 0));
    co_await e.ship(ctx, job, job.plan_index != resident);
    resident = job.plan_index;
    if (e.version == 3) {
      // Token staging bases: prefix of per-token output bounds.
      std::uint64_t acc = 0;
      const std::uint64_t t0 = 2 * std::uint64_t(job.w.row_begin);
      for (std::uint64_t t = 0; t < 2 * std::uint64_t(job.rows()); ++t) {
        const auto bound = co_await ctx.load<std::uint32_t>(e.tok_bound + 4 * (t0 + t));
        co_await ctx.store<std::uint32_t>(bm.tok_base + 4 * t, std::uint32_t(acc));
        acc += bound;
      }
    }
    co_await ctx.barrier(bm.barrier);
    ctx.set_phase(e.label(block, attempt, 1));
    co_await ctx.barrier(bm.barrier);
    ctx.set_phase(e.label(block, attempt, 2));
    co_await ctx.barrier(bm.barrier);
    e.attempts.push_back({job.plan_index, block, attempt, false});
    jobs.pop_front();
  }
}

}  // namespace smash::kimpl
