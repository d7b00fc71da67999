#include "smash/sim/machine.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <queue>
#include <random>
#include <sstream>

namespace smash::sim {

namespace {

enum class State : std::uint8_t { kUnbound, kReady, kBlocked, kBarrier, kDone };

enum class EventKind : std::uint8_t { kWake, kDmaBegin, kDmaDone, kBarrierRelease };

struct Event {
  Cycle time;
  std::uint64_t seq;
  EventKind kind;
  std::uint64_t arg;
  bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

struct Cache {
  std::uint64_t sets = 0;
  std::uint32_t assoc = 0;
  std::vector<std::uint64_t> tag;
  std::vector<std::uint64_t> stamp;
  std::vector<std::uint8_t> state;  // 0 invalid, 1 clean, 2 dirty
  std::uint64_t clock = 0;

  Cache(std::uint64_t s, std::uint32_t a) : sets(s), assoc(a), tag(s * a), stamp(s * a), state(s * a) {}

  // Returns {hit, evicted a dirty line}.
  std::pair<bool, bool> access(std::uint64_t line, bool write) {
    const std::size_t base = std::size_t(line % sets) * assoc;
    std::size_t victim = base;
    for (std::size_t w = base; w < base + assoc; ++w) {
      if (state[w] != 0 && tag[w] == line) {
        stamp[w] = ++clock;
        if (write) state[w] = 2;
        return {true, false};
      }
      if (state[victim] != 0 && (state[w] == 0 || stamp[w] < stamp[victim])) victim = w;
    }
    const bool dirty = state[victim] == 2;
    tag[victim] = line;
    state[victim] = write ? 2 : 1;
    stamp[victim] = ++clock;
    return {false, dirty};
  }

  std::uint64_t flush() {
    std::uint64_t dirty = 0;
    for (auto& s : state) {
      dirty += s == 2;
      s = 0;
    }
    return dirty;
  }
};

struct ThreadState {
  Task<> task;
  State state = State::kUnbound;
  bool need_resume = true;
  std::uint64_t alu_left = 0;
  Cycle blocked_since = 0;
  ThreadCounters* phase = nullptr;
  std::string waiting_on;
};

struct Core {
  std::uint32_t first_tid = 0;
  std::uint32_t nthreads = 0;
  std::uint64_t mask = 0;  // bit p set when perm[p] is ready
  std::uint32_t rr = 0;
  std::vector<std::uint32_t> perm;
  std::vector<std::uint32_t> pos_of;
};

struct DmaJob {
  std::uint64_t id;
  DmaRequest req;
  Cycle submitted;
};

struct DmaEngine {
  std::deque<DmaJob> queue;
  bool busy = false;
  std::uint64_t outstanding = 0;
  DmaJob current{};
  std::vector<std::uint32_t> queue_waiters;
};

struct Barrier {
  std::uint32_t participants = 0;
  std::vector<std::uint32_t> flush_blocks;
  std::vector<std::uint32_t> waiting;
};

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

struct Machine::Impl {
  const MachineConfig& cfg;
  Machine& self;

  std::vector<std::uint8_t> dram;
  std::vector<std::pair<Addr, std::uint32_t>> segments;  // (base, affinity)
  std::vector<std::vector<std::uint8_t>> spads;
  std::vector<Cache> caches;
  Cycle channel_free = 0;

  std::vector<ThreadState> threads;
  std::vector<Core> cores;
  std::uint32_t ready_count = 0;
  std::uint32_t live = 0;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t seq = 0;

  std::vector<DmaEngine> dma;
  std::vector<std::uint8_t> dma_done = std::vector<std::uint8_t>(1, 1);  // id 0 is the null handle
  std::vector<std::vector<std::uint32_t>> dma_waiters = std::vector<std::vector<std::uint32_t>>(1);

  std::vector<Barrier> barriers;
  std::vector<std::vector<std::uint32_t>> releases;

  ExecutionTrace trace;
  bool ran = false;
  Cycle last_issue_end = 0;
  Cycle last_event = 0;
  Cycle now = 0;

  Impl(const MachineConfig& c, Machine& m) : cfg(c), self(m) {
    spads.assign(cfg.blocks, std::vector<std::uint8_t>(cfg.spad_bytes, 0));
    caches.assign(cfg.blocks, Cache(cfg.cache_sets(), cfg.cache_assoc));
    threads.resize(cfg.total_threads());
    dma.resize(cfg.blocks);
    trace.blocks = cfg.blocks;
    trace.threads_per_block = cfg.threads_per_block();
    trace.mtc_threads_per_block = cfg.mtc_threads_per_block();
    trace.threads.resize(cfg.total_threads());
    trace.sample_interval = cfg.sample_interval;

    std::mt19937_64 rng(cfg.schedule_seed);
    for (std::uint32_t b = 0; b < cfg.blocks; ++b) {
      for (std::uint32_t c2 = 0; c2 < cfg.cores_per_block(); ++c2) {
        Core core;
        const bool mtc = c2 < cfg.mtc_per_block;
        core.nthreads = mtc ? cfg.threads_per_mtc : 1;
        core.first_tid = m.thread_id({b, c2, 0});
        core.perm.resize(core.nthreads);
        for (std::uint32_t i = 0; i < core.nthreads; ++i) core.perm[i] = i;
        if (cfg.schedule_seed != 0) std::shuffle(core.perm.begin(), core.perm.end(), rng);
        core.pos_of.resize(core.nthreads);
        for (std::uint32_t p = 0; p < core.nthreads; ++p) core.pos_of[core.perm[p]] = p;
        cores.push_back(std::move(core));
      }
    }
  }

  // ---- address decoding ----

  std::uint8_t* ptr(Addr a, std::uint64_t bytes) {
    return const_cast<std::uint8_t*>(static_cast<const Impl*>(this)->ptr(a, bytes));
  }
  const std::uint8_t* ptr(Addr a, std::uint64_t bytes) const {
    if (a >= kSpadBase) {
      const std::uint64_t block = (a - kSpadBase) / kSpadStride;
      const std::uint64_t off = (a - kSpadBase) % kSpadStride;
      if (block < cfg.blocks && off + bytes <= cfg.spad_bytes) return spads[block].data() + off;
    } else if (a >= kDramBase && a - kDramBase + bytes <= dram.size()) {
      return dram.data() + (a - kDramBase);
    }
    std::ostringstream m;
    m << "unmapped access at 0x" << std::hex << a << std::dec << " (" << bytes << " bytes)";
    fail(ErrorCode::kUnmappedAddress, m.str());
  }

  std::uint32_t owner(Addr a) const {
    if (a >= kSpadBase) return std::uint32_t((a - kSpadBase) / kSpadStride);
    auto it = std::upper_bound(segments.begin(), segments.end(), std::make_pair(a, ~std::uint32_t{0}));
    return it == segments.begin() ? 0 : std::prev(it)->second;
  }

  // ---- timing helpers ----

  Cycle reserve_channel(Cycle t, std::uint64_t bytes) {
    if (bytes == 0) return t;
    const Cycle start = std::max(t, channel_free);
    channel_free = start + ceil_div(bytes, cfg.cost.dram_peak_bytes_per_cycle);
    return channel_free;
  }

  // Cached DRAM access; returns completion cycle.
  Cycle dram_cached(std::uint32_t block, Addr a, std::uint32_t bytes, bool write, Cycle t) {
    const std::uint64_t line = cfg.cache_line_bytes;
    Cycle done = t + cfg.cost.cache_hit_cycles;
    const bool far = owner(a) != block;
    for (std::uint64_t l = (a - kDramBase) / line; l <= (a - kDramBase + bytes - 1) / line; ++l) {
      auto [hit, dirty] = caches[block].access(l, write);
      if (hit) {
        ++trace.cache_hits;
        continue;
      }
      ++trace.cache_misses;
      if (dirty) {
        trace.dram_bytes_written += line;
        reserve_channel(t, line);
      }
      trace.dram_bytes_read += line;
      const Cycle end = reserve_channel(t, line);
      done = std::max(done, std::max(t + cfg.cost.dram_access_cycles, end) + (far ? cfg.cost.remote_access_cycles : 0));
    }
    return done;
  }

  // Uncached read-modify-write at the memory controller.
  Cycle dram_atomic(bool wrote, bool far, Cycle t) {
    const std::uint64_t bytes = cfg.native_8byte_access ? 8 : cfg.cache_line_bytes;
    trace.dram_bytes_read += bytes;
    if (wrote) trace.dram_bytes_written += bytes;
    const Cycle end = reserve_channel(t, wrote ? 2 * bytes : bytes);
    return std::max(t + cfg.cost.dram_access_cycles, end) + (far ? cfg.cost.remote_access_cycles : 0);
  }

  Cycle flush_cache(std::uint32_t block, Cycle t) {
    const std::uint64_t dirty = caches[block].flush();
    const std::uint64_t bytes = dirty * cfg.cache_line_bytes;
    trace.dram_bytes_written += bytes;
    return reserve_channel(t, bytes);
  }

  // ---- scheduling ----

  void push_event(Cycle time, EventKind kind, std::uint64_t arg) { events.push({time, seq++, kind, arg}); }

  Core& core_of(std::uint32_t tid) {
    const std::uint32_t per_block = cfg.threads_per_block();
    const std::uint32_t b = tid / per_block, local = tid % per_block;
    const std::uint32_t mtc_threads = cfg.mtc_threads_per_block();
    const std::uint32_t c = local < mtc_threads ? local / cfg.threads_per_mtc
                                                : cfg.mtc_per_block + (local - mtc_threads);
    return cores[std::size_t(b) * cfg.cores_per_block() + c];
  }

  void set_ready(std::uint32_t tid) {
    auto& th = threads[tid];
    if (th.state == State::kReady) return;
    th.state = State::kReady;
    th.waiting_on.clear();
    Core& c = core_of(tid);
    c.mask |= std::uint64_t{1} << c.pos_of[tid - c.first_tid];
    ++ready_count;
  }

  void clear_ready(std::uint32_t tid, State next) {
    auto& th = threads[tid];
    if (th.state == State::kReady) {
      Core& c = core_of(tid);
      c.mask &= ~(std::uint64_t{1} << c.pos_of[tid - c.first_tid]);
      --ready_count;
    }
    th.state = next;
  }

  void add_stall(std::uint32_t tid, ThreadCounters* phase, Cycle cycles) {
    trace.threads[tid].stall_cycles += cycles;
    if (phase) phase->stall_cycles += cycles;
  }

  // Blocks for a known latency.
  void block_for(std::uint32_t tid, Cycle t, Cycle done) {
    if (done <= t + 1) return;
    add_stall(tid, threads[tid].phase, done - t - 1);
    clear_ready(tid, State::kBlocked);
    threads[tid].waiting_on = "memory";
    push_event(done, EventKind::kWake, tid);
  }

  // Blocks until an external event; stall is charged on wake.
  void block_open(std::uint32_t tid, Cycle since, State st, std::string why) {
    clear_ready(tid, st);
    threads[tid].blocked_since = since;
    threads[tid].waiting_on = std::move(why);
  }

  void wake_open(std::uint32_t tid, Cycle now) {
    auto& th = threads[tid];
    if (th.state == State::kBlocked && now > th.blocked_since) add_stall(tid, th.phase, now - th.blocked_since);
    set_ready(tid);
  }

  void account_issue(std::uint32_t tid, Cycle t) {
    auto& tc = trace.threads[tid];
    ++tc.issued;
    ++tc.active_cycles;
    if (auto* ph = threads[tid].phase) {
      ++ph->issued;
      ++ph->active_cycles;
    }
    ++trace.total_instructions;
    if (trace.is_mtc_thread(tid)) ++trace.mtc_instructions;
    const std::size_t k = t / cfg.sample_interval;
    if (trace.samples.size() <= k) trace.samples.resize(k + 1, std::vector<std::uint32_t>(threads.size(), 0));
    ++trace.samples[k][tid];
    last_issue_end = std::max(last_issue_end, t + 1);
  }

  // ---- DMA ----

  std::uint64_t dram_span_bytes(Addr a, std::uint64_t bytes) const {
    if (bytes == 0 || a >= kSpadBase) return 0;
    if (cfg.native_8byte_access) return bytes;
    const std::uint64_t line = cfg.cache_line_bytes;
    const std::uint64_t off = a - kDramBase;
    return ((off + bytes - 1) / line - off / line + 1) * line;
  }
  std::uint64_t dram_elem_bytes(Addr a, std::uint64_t elem) const {
    if (a >= kSpadBase) return 0;
    return cfg.native_8byte_access ? elem : cfg.cache_line_bytes;
  }

  void validate_dma(const DmaRequest& r) {
    switch (r.kind) {
      case DmaKind::kCopy:
        ptr(r.src, r.bytes);
        ptr(r.dst, r.bytes);
        if (r.bytes > 0 && r.src < r.dst + r.bytes && r.dst < r.src + r.bytes)
          fail(ErrorCode::kInvalidArgument, "dma copy with overlapping ranges");
        break;
      case DmaKind::kStridedCopy:
        if (r.count > 0) {
          ptr(r.src + (r.count - 1) * r.src_stride, r.elem_bytes);
          ptr(r.dst + (r.count - 1) * r.dst_stride, r.elem_bytes);
        }
        break;
      case DmaKind::kGather:
      case DmaKind::kScatter:
        if (r.elem_bytes == 0 || r.elem_bytes > 8) fail(ErrorCode::kInvalidArgument, "dma element must be 1..8 bytes");
        ptr(r.index_addr, r.count * 4);
        break;
    }
  }

  void dma_begin(std::uint32_t block, Cycle now) {
    auto& eng = dma[block];
    eng.current = std::move(eng.queue.front());
    eng.queue.pop_front();
    eng.busy = true;
    const DmaRequest& r = eng.current.req;
    std::uint64_t rd = 0, wr = 0, moved = 0;
    switch (r.kind) {
      case DmaKind::kCopy:
        rd = dram_span_bytes(r.src, r.bytes);
        wr = dram_span_bytes(r.dst, r.bytes);
        moved = r.bytes;
        break;
      case DmaKind::kStridedCopy:
        rd = r.count * dram_elem_bytes(r.src, r.elem_bytes);
        wr = r.count * dram_elem_bytes(r.dst, r.elem_bytes);
        moved = r.count * r.elem_bytes;
        break;
      case DmaKind::kGather:
        rd = dram_span_bytes(r.index_addr, r.count * 4) + r.count * dram_elem_bytes(r.src, r.elem_bytes);
        wr = dram_span_bytes(r.dst, r.count * r.elem_bytes);
        moved = r.count * (r.elem_bytes + 4);
        break;
      case DmaKind::kScatter:
        rd = dram_span_bytes(r.index_addr, r.count * 4);
        wr = r.count * dram_elem_bytes(r.dst, r.elem_bytes);
        // Sub-line writes without native support need the line read first.
        if (!cfg.native_8byte_access && r.dst < kSpadBase) rd += wr;
        moved = r.count * (r.elem_bytes + 4);
        break;
    }
    trace.dram_bytes_read += rd;
    trace.dram_bytes_written += wr;
    const Cycle ch_end = reserve_channel(now, rd + wr);
    const Cycle done = std::max(now + ceil_div(moved, cfg.cost.dma_bytes_per_cycle), ch_end);
    push_event(done, EventKind::kDmaDone, block);
  }

  void dma_apply(const DmaRequest& r) {
    switch (r.kind) {
      case DmaKind::kCopy:
        if (r.bytes) std::memcpy(ptr(r.dst, r.bytes), ptr(r.src, r.bytes), r.bytes);
        break;
      case DmaKind::kStridedCopy:
        for (std::uint64_t i = 0; i < r.count; ++i)
          std::memmove(ptr(r.dst + i * r.dst_stride, r.elem_bytes), ptr(r.src + i * r.src_stride, r.elem_bytes),
                       r.elem_bytes);
        break;
      case DmaKind::kGather:
        for (std::uint64_t i = 0; i < r.count; ++i) {
          std::uint32_t idx;
          std::memcpy(&idx, ptr(r.index_addr + 4 * i, 4), 4);
          std::memmove(ptr(r.dst + i * r.elem_bytes, r.elem_bytes), ptr(r.src + idx * r.src_stride, r.elem_bytes),
                       r.elem_bytes);
        }
        break;
      case DmaKind::kScatter:
        for (std::uint64_t i = 0; i < r.count; ++i) {
          std::uint32_t idx;
          std::memcpy(&idx, ptr(r.index_addr + 4 * i, 4), 4);
          std::memcpy(ptr(r.dst + idx * r.dst_stride, r.elem_bytes), &r.value, r.elem_bytes);
        }
        break;
    }
  }

  void dma_finish(std::uint32_t block, Cycle now) {
    auto& eng = dma[block];
    dma_apply(eng.current.req);
    const std::uint64_t id = eng.current.id;
    dma_done[id] = 1;
    eng.busy = false;
    --eng.outstanding;
    auto waiters = std::move(dma_waiters[id]);
    std::sort(waiters.begin(), waiters.end());
    for (auto tid : waiters) wake_open(tid, now);
    auto qw = std::move(eng.queue_waiters);
    eng.queue_waiters.clear();
    std::sort(qw.begin(), qw.end());
    for (auto tid : qw) wake_open(tid, now);
    if (!eng.queue.empty())
      push_event(std::max(now, eng.queue.front().submitted + cfg.cost.dma_setup_cycles), EventKind::kDmaBegin, block);
  }

  // ---- instruction execution ----

  enum class Outcome { kIssued, kNotIssued };

  Outcome execute(std::uint32_t tid, detail::Op& op, Cycle t) {
    auto& th = threads[tid];
    const std::uint32_t block = tid / cfg.threads_per_block();
    const auto& cost = cfg.cost;
    switch (op.kind) {
      case detail::OpKind::kAlu:
        if (th.alu_left == 0) th.alu_left = op.count;
        if (--th.alu_left == 0) th.need_resume = true;
        return Outcome::kIssued;

      case detail::OpKind::kLoad:
      case detail::OpKind::kStore: {
        const bool write = op.kind == detail::OpKind::kStore;
        std::uint8_t* p = ptr(op.addr, op.bytes);
        if (write) {
          std::memcpy(p, &op.a, op.bytes);
        } else {
          op.out = 0;
          std::memcpy(&op.out, p, op.bytes);
        }
        Cycle done;
        if (op.addr >= kSpadBase) {
          ++trace.spad_accesses;
          done = t + cost.spad_access_cycles + (owner(op.addr) != block ? cost.remote_access_cycles : 0);
        } else {
          done = dram_cached(block, op.addr, op.bytes, write, t);
        }
        th.need_resume = true;
        block_for(tid, t, done);
        return Outcome::kIssued;
      }

      case detail::OpKind::kCas:
      case detail::OpKind::kFetchAddInt:
      case detail::OpKind::kFetchAddReal: {
        if (op.addr % 8 != 0) fail(ErrorCode::kInvalidArgument, "atomic on unaligned address");
        std::uint8_t* p = ptr(op.addr, 8);
        std::uint64_t cur;
        std::memcpy(&cur, p, 8);
        bool wrote = true;
        if (op.kind == detail::OpKind::kCas) {
          op.ok = cur == op.a;
          op.out = cur;
          wrote = op.ok;
          if (op.ok) std::memcpy(p, &op.b, 8);
        } else if (op.kind == detail::OpKind::kFetchAddInt) {
          op.out = cur;
          const std::uint64_t next = cur + op.a;
          std::memcpy(p, &next, 8);
        } else {
          op.out = cur;
          const double next = detail::from_bits<double>(cur) + detail::from_bits<double>(op.a);
          std::memcpy(p, &next, 8);
        }
        const bool far = op.remote || owner(op.addr) != block;
        Cycle done;
        if (op.addr >= kSpadBase) {
          ++trace.spad_accesses;
          done = t + cost.spad_access_cycles + (far ? cost.remote_access_cycles : 0);
        } else {
          done = dram_atomic(wrote, far, t);
        }
        th.need_resume = true;
        block_for(tid, t, done);
        return Outcome::kIssued;
      }

      case detail::OpKind::kDmaSubmit: {
        auto& eng = dma[block];
        if (eng.outstanding >= cfg.dma_queue_depth) {
          eng.queue_waiters.push_back(tid);
          block_open(tid, t, State::kBlocked, "dma queue slot");
          return Outcome::kNotIssued;
        }
        validate_dma(*op.dma);
        const std::uint64_t id = dma_done.size();
        dma_done.push_back(0);
        dma_waiters.emplace_back();
        ++eng.outstanding;
        ++trace.dma_ops;
        eng.queue.push_back({id, *op.dma, t});
        if (!eng.busy && eng.queue.size() == 1) push_event(t + cost.dma_setup_cycles, EventKind::kDmaBegin, block);
        op.out = id;
        th.need_resume = true;
        return Outcome::kIssued;
      }

      case detail::OpKind::kDmaWait: {
        th.need_resume = true;
        if (op.count >= dma_done.size()) fail(ErrorCode::kInvalidArgument, "wait on unknown dma handle");
        if (!dma_done[op.count]) {
          dma_waiters[op.count].push_back(tid);
          block_open(tid, t + 1, State::kBlocked, "dma #" + std::to_string(op.count));
        }
        return Outcome::kIssued;
      }

      case detail::OpKind::kBarrier: {
        if (op.count >= barriers.size()) fail(ErrorCode::kInvalidArgument, "unknown barrier id");
        th.need_resume = true;
        auto& bar = barriers[op.count];
        bar.waiting.push_back(tid);
        block_open(tid, t + 1, State::kBarrier, "barrier " + std::to_string(op.count));
        if (bar.waiting.size() == bar.participants) {
          Cycle release = t + cost.barrier_cycles;
          for (auto fb : bar.flush_blocks) release = std::max(release, flush_cache(fb, t));
          ++trace.barrier_count;
          releases.push_back(std::move(bar.waiting));
          bar.waiting.clear();
          push_event(release, EventKind::kBarrierRelease, releases.size() - 1);
        }
        return Outcome::kIssued;
      }

      case detail::OpKind::kFlush: {
        th.need_resume = true;
        block_for(tid, t, std::max(t + 1, flush_cache(block, t)));
        return Outcome::kIssued;
      }
    }
    return Outcome::kIssued;
  }

  void finish_thread(std::uint32_t tid) {
    auto& th = threads[tid];
    clear_ready(tid, State::kDone);
    --live;
    if (auto err = th.task.error()) std::rethrow_exception(err);
  }

  // Issues at most one instruction on core `c` at cycle t.
  void issue_core(Core& c, Cycle t) {
    while (c.mask != 0) {
      const std::uint64_t upper = c.rr < 64 ? c.mask & (~std::uint64_t{0} << c.rr) : 0;
      const std::uint32_t pos = std::uint32_t(std::countr_zero(upper ? upper : c.mask));
      const std::uint32_t tid = c.first_tid + c.perm[pos];
      auto& th = threads[tid];
      auto& ctx = self.contexts_[tid];
      if (th.need_resume) {
        th.need_resume = false;
        ctx.pending_ = nullptr;
        ctx.current_.resume();
        if (th.task.done()) {
          finish_thread(tid);
          continue;
        }
      }
      detail::Op& op = *ctx.pending_;
      if (op.kind == detail::OpKind::kAlu && op.count == 0) {
        th.need_resume = true;
        continue;
      }
      if (execute(tid, op, t) == Outcome::kNotIssued) continue;
      c.rr = (pos + 1) % c.nthreads;
      account_issue(tid, t);
      return;
    }
  }

  void process_event(const Event& e) {
    last_event = std::max(last_event, e.time);
    switch (e.kind) {
      case EventKind::kWake:
        set_ready(std::uint32_t(e.arg));
        break;
      case EventKind::kDmaBegin:
        dma_begin(std::uint32_t(e.arg), e.time);
        break;
      case EventKind::kDmaDone:
        dma_finish(std::uint32_t(e.arg), e.time);
        break;
      case EventKind::kBarrierRelease: {
        auto batch = std::move(releases[e.arg]);
        std::sort(batch.begin(), batch.end());
        for (auto tid : batch) set_ready(tid);
        break;
      }
    }
  }

  [[noreturn]] void deadlock(Cycle t) {
    std::ostringstream m;
    m << "deadlock at cycle " << t << ": no ready thread and no pending event;";
    for (std::uint32_t tid = 0; tid < threads.size(); ++tid) {
      const auto& th = threads[tid];
      if (th.state == State::kBlocked || th.state == State::kBarrier) {
        const auto s = self.slot_of(tid);
        m << " [thread " << tid << " (block " << s.block << ", core " << s.core << ", ctx " << s.thread
          << ") waiting on " << th.waiting_on << "]";
      }
    }
    fail(ErrorCode::kDeadlock, m.str());
  }

  ExecutionTrace run() {
    if (ran) fail(ErrorCode::kInvalidArgument, "Machine::run may only be called once");
    ran = true;
    for (std::uint32_t tid = 0; tid < threads.size(); ++tid) {
      if (threads[tid].state == State::kUnbound) continue;
      threads[tid].state = State::kBlocked;
      set_ready(tid);
      ++live;
    }
    Cycle t = 0;
    while (live > 0) {
      now = t;
      while (!events.empty() && events.top().time <= t) {
        const Event e = events.top();
        events.pop();
        process_event(e);
      }
      for (auto& c : cores)
        if (c.mask) issue_core(c, t);
      if (live == 0) break;
      if (ready_count > 0) {
        ++t;
      } else {
        if (events.empty()) deadlock(t);
        t = std::max(t + 1, events.top().time);
      }
    }
    while (!events.empty()) {
      const Event e = events.top();
      events.pop();
      process_event(e);
    }
    trace.total_cycles = std::max(last_issue_end, last_event);
    const std::size_t nsamples =
        trace.total_cycles == 0 ? 0 : std::size_t(ceil_div(trace.total_cycles, cfg.sample_interval));
    trace.samples.resize(nsamples, std::vector<std::uint32_t>(threads.size(), 0));
    return std::move(trace);
  }
};

// ---- ThreadContext ----

Cycle ThreadContext::now() const { return machine_->impl_->now; }

void ThreadContext::set_phase(std::uint32_t label) {
  auto& phases = machine_->impl_->trace.phases;
  auto it = phases.find(label);
  if (it == phases.end()) it = phases.emplace(label, std::vector<ThreadCounters>(machine_->total_threads())).first;
  machine_->impl_->threads[tid_].phase = &it->second[tid_];
}

// ---- Machine ----

Machine::Machine(const MachineConfig& config) : config_(config) {
  config_.validate();
  if (config_.threads_per_mtc > 64) fail(ErrorCode::kInvalidArgument, "machine config: at most 64 threads per MTC");
  contexts_.resize(config_.total_threads());
  for (std::uint32_t tid = 0; tid < contexts_.size(); ++tid) {
    auto& c = contexts_[tid];
    c.machine_ = this;
    c.slot_ = slot_of(tid);
    c.tid_ = tid;
    c.local_tid_ = tid % config_.threads_per_block();
    c.is_mtc_ = c.local_tid_ < config_.mtc_threads_per_block();
  }
  impl_ = std::make_unique<Impl>(config_, *this);
}

Machine::~Machine() = default;

std::uint32_t Machine::thread_id(const ThreadSlot& s) const {
  const auto& c = config_;
  if (s.block >= c.blocks || s.core >= c.cores_per_block())
    fail(ErrorCode::kInvalidArgument, "thread slot outside the machine");
  const std::uint32_t base = s.block * c.threads_per_block();
  if (s.core < c.mtc_per_block) {
    if (s.thread >= c.threads_per_mtc) fail(ErrorCode::kInvalidArgument, "MTC thread index out of range");
    return base + s.core * c.threads_per_mtc + s.thread;
  }
  if (s.thread != 0) fail(ErrorCode::kInvalidArgument, "STC has a single thread context");
  return base + c.mtc_threads_per_block() + (s.core - c.mtc_per_block);
}

ThreadSlot Machine::slot_of(std::uint32_t tid) const {
  const auto& c = config_;
  if (tid >= c.total_threads()) fail(ErrorCode::kInvalidArgument, "thread id out of range");
  const std::uint32_t block = tid / c.threads_per_block(), local = tid % c.threads_per_block();
  if (local < c.mtc_threads_per_block()) return {block, local / c.threads_per_mtc, local % c.threads_per_mtc};
  return {block, c.mtc_per_block + (local - c.mtc_threads_per_block()), 0};
}

ThreadSlot Machine::mtc_slot(std::uint32_t block, std::uint32_t index) const {
  if (index >= config_.mtc_threads_per_block()) fail(ErrorCode::kInvalidArgument, "MTC thread index out of range");
  return {block, index / config_.threads_per_mtc, index % config_.threads_per_mtc};
}

ThreadSlot Machine::stc_slot(std::uint32_t block, std::uint32_t stc) const {
  if (stc >= config_.stc_per_block) fail(ErrorCode::kInvalidArgument, "STC index out of range");
  return {block, config_.mtc_per_block + stc, 0};
}

Range Machine::dgas_partition(std::uint64_t bytes, std::uint32_t affinity) {
  if (affinity >= config_.blocks) fail(ErrorCode::kInvalidArgument, "affinity names a block outside the machine");
  auto& dram = impl_->dram;
  const std::uint64_t base_off = (dram.size() + 63) / 64 * 64;
  const std::uint64_t end_off = base_off + std::max<std::uint64_t>(bytes, 1);
  if (config_.dram_capacity_bytes != 0 && end_off > config_.dram_capacity_bytes)
    fail(ErrorCode::kCapacity, "DRAM capacity exhausted: need " + std::to_string(end_off) + " bytes, cap " +
                                   std::to_string(config_.dram_capacity_bytes));
  dram.resize(end_off, 0);
  const Addr base = kDramBase + base_off;
  impl_->segments.emplace_back(base, affinity);
  return {base, bytes, affinity, Space::kDram};
}

Range Machine::spad(std::uint32_t block) const {
  if (block >= config_.blocks) fail(ErrorCode::kInvalidArgument, "block out of range");
  return {kSpadBase + block * kSpadStride, config_.spad_bytes, block, Space::kSpad};
}

bool Machine::is_mapped(Addr addr, std::uint64_t bytes) const {
  try {
    impl_->ptr(addr, bytes);
    return true;
  } catch (const Error&) {
    return false;
  }
}

Space Machine::space_of(Addr addr) const {
  impl_->ptr(addr, 1);
  return addr >= kSpadBase ? Space::kSpad : Space::kDram;
}

std::uint32_t Machine::affinity_of(Addr addr) const {
  impl_->ptr(addr, 1);
  return impl_->owner(addr);
}

void Machine::read_bytes(Addr addr, void* out, std::uint64_t bytes) const {
  if (bytes) std::memcpy(out, impl_->ptr(addr, bytes), bytes);
}

void Machine::write_bytes(Addr addr, const void* in, std::uint64_t bytes) {
  if (bytes) std::memcpy(impl_->ptr(addr, bytes), in, bytes);
}

void Machine::fill(Addr addr, std::uint64_t bytes, std::uint8_t byte) {
  if (bytes) std::memset(impl_->ptr(addr, bytes), byte, bytes);
}

ThreadContext& Machine::context(const ThreadSlot& s) { return contexts_[thread_id(s)]; }

void Machine::spawn(const ThreadSlot& s, Task<> program) {
  const std::uint32_t tid = thread_id(s);
  auto& th = impl_->threads[tid];
  if (impl_->ran) fail(ErrorCode::kInvalidArgument, "cannot spawn after run");
  if (th.state != State::kUnbound) fail(ErrorCode::kInvalidArgument, "thread context already bound");
  if (!program.handle()) fail(ErrorCode::kInvalidArgument, "empty program");
  th.task = std::move(program);
  th.state = State::kBlocked;  // promoted to ready by run()
  contexts_[tid].current_ = th.task.handle();
}

std::uint32_t Machine::make_barrier(std::uint32_t participants, std::vector<std::uint32_t> flush_blocks) {
  if (participants == 0) fail(ErrorCode::kInvalidArgument, "barrier needs at least one participant");
  for (auto b : flush_blocks)
    if (b >= config_.blocks) fail(ErrorCode::kInvalidArgument, "flush block out of range");
  impl_->barriers.push_back({participants, std::move(flush_blocks), {}});
  return std::uint32_t(impl_->barriers.size() - 1);
}

ExecutionTrace Machine::run() { return impl_->run(); }

}  // namespace smash::sim
