#pragma once

// Deterministic event model of one or more accelerator blocks. Simulated
// threads are coroutines (Task<>) bound to hardware thread contexts; every
// co_await on a ThreadContext operation is one issued instruction.
//
// Timing rules:
//  * each cycle every core issues at most one instruction, taken from its
//    ready threads in round-robin order (cores in (block, core) order);
//  * an instruction issued at cycle t with latency L leaves its thread
//    blocked until cycle t+L (L=1 keeps it ready);
//  * memory instructions take functional effect at issue, DMA transfers at
//    completion.

#include <coroutine>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <string>
#include <type_traits>
#include <vector>

#include "smash/error.hpp"
#include "smash/sim/config.hpp"
#include "smash/sim/task.hpp"

namespace smash::sim {

using Addr = std::uint64_t;
using Cycle = std::uint64_t;

inline constexpr Addr kDramBase = Addr{1} << 40;
inline constexpr Addr kSpadBase = Addr{1} << 44;
inline constexpr Addr kSpadStride = Addr{1} << 32;

enum class Space : std::uint8_t { kDram, kSpad };

struct Range {
  Addr base = 0;
  std::uint64_t bytes = 0;
  std::uint32_t affinity = 0;
  Space space = Space::kDram;
  Addr end() const { return base + bytes; }
};

struct ThreadSlot {
  std::uint32_t block = 0;
  std::uint32_t core = 0;
  std::uint32_t thread = 0;
};

enum class DmaKind : std::uint8_t { kCopy, kStridedCopy, kGather, kScatter };

// kCopy: bytes from src to dst.
// kStridedCopy: count elements of elem_bytes, src += src_stride, dst += dst_stride.
// kGather: dst[i] = src + idx[i] * src_stride, idx read as u32 from index_addr.
// kScatter: writes `value` (elem_bytes <= 8) to dst + idx[i] * dst_stride.
struct DmaRequest {
  DmaKind kind = DmaKind::kCopy;
  Addr src = 0;
  Addr dst = 0;
  std::uint64_t bytes = 0;
  std::uint32_t elem_bytes = 8;
  std::uint64_t count = 0;
  std::uint64_t src_stride = 0;
  std::uint64_t dst_stride = 0;
  Addr index_addr = 0;
  std::uint64_t value = 0;

  static DmaRequest copy(Addr src, Addr dst, std::uint64_t bytes) {
    DmaRequest r;
    r.kind = DmaKind::kCopy;
    r.src = src;
    r.dst = dst;
    r.bytes = bytes;
    return r;
  }
  static DmaRequest scatter(Addr dst, std::uint64_t stride, Addr index_addr, std::uint64_t count,
                            std::uint64_t value, std::uint32_t elem_bytes = 8) {
    DmaRequest r;
    r.kind = DmaKind::kScatter;
    r.dst = dst;
    r.dst_stride = stride;
    r.index_addr = index_addr;
    r.count = count;
    r.value = value;
    r.elem_bytes = elem_bytes;
    return r;
  }
};

struct DmaHandle {
  std::uint64_t id = 0;  // 0 = null handle, waiting on it is a no-op
};

struct ThreadCounters {
  std::uint64_t issued = 0;
  std::uint64_t active_cycles = 0;  // cycles in which the thread issued
  std::uint64_t stall_cycles = 0;   // cycles blocked on memory or DMA
};

struct ExecutionTrace {
  Cycle total_cycles = 0;
  std::uint32_t blocks = 0;
  std::uint32_t threads_per_block = 0;
  std::uint32_t mtc_threads_per_block = 0;
  std::vector<ThreadCounters> threads;  // indexed by global thread id
  std::uint64_t dram_bytes_read = 0;
  std::uint64_t dram_bytes_written = 0;
  std::uint64_t spad_accesses = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t dma_ops = 0;
  std::uint64_t barrier_count = 0;
  std::uint64_t total_instructions = 0;
  std::uint64_t mtc_instructions = 0;
  std::uint64_t sample_interval = 0;
  // samples[k][tid] = active cycles of tid inside [k*interval, (k+1)*interval).
  std::vector<std::vector<std::uint32_t>> samples;
  // Per-thread counters split by the label passed to set_phase().
  std::map<std::uint32_t, std::vector<ThreadCounters>> phases;

  bool is_mtc_thread(std::size_t tid) const { return tid % threads_per_block < mtc_threads_per_block; }
  double cache_hit_rate() const {
    const auto n = cache_hits + cache_misses;
    return n == 0 ? 0.0 : double(cache_hits) / double(n);
  }
};

struct CasResult {
  bool success = false;
  std::uint64_t observed = 0;
};

class Machine;
class ThreadContext;

namespace detail {

enum class OpKind : std::uint8_t {
  kAlu,
  kLoad,
  kStore,
  kCas,
  kFetchAddInt,
  kFetchAddReal,
  kDmaSubmit,
  kDmaWait,
  kBarrier,
  kFlush,
};

struct Op {
  OpKind kind = OpKind::kAlu;
  bool remote = false;
  std::uint32_t bytes = 0;
  Addr addr = 0;
  std::uint64_t count = 0;  // alu repetitions / barrier id / dma handle
  std::uint64_t a = 0;      // store data, cas expected, fetch-add delta bits
  std::uint64_t b = 0;      // cas desired
  const DmaRequest* dma = nullptr;
  // results
  std::uint64_t out = 0;
  bool ok = false;
};

struct OpAwaiter {
  ThreadContext* ctx;
  Op op;
  bool await_ready() const noexcept { return false; }
  void await_suspend(std::coroutine_handle<> h) noexcept;
};

template <typename T>
constexpr void check_word() {
  static_assert(std::is_trivially_copyable_v<T> && sizeof(T) <= 8, "simulated words are at most 8 bytes");
}

template <typename T>
std::uint64_t to_bits(T v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(T));
  return bits;
}

template <typename T>
T from_bits(std::uint64_t bits) {
  T v;
  std::memcpy(&v, &bits, sizeof(T));
  return v;
}

}  // namespace detail

// Handle a simulated thread program uses to issue instructions. Obtained
// from Machine::context(); valid for the Machine's lifetime.
class ThreadContext {
 public:
  struct Void : detail::OpAwaiter {
    void await_resume() const noexcept {}
  };
  template <typename T>
  struct Value : detail::OpAwaiter {
    T await_resume() const noexcept { return detail::from_bits<T>(op.out); }
  };
  struct Cas : detail::OpAwaiter {
    CasResult await_resume() const noexcept { return {op.ok, op.out}; }
  };
  struct Dma : detail::OpAwaiter {
    DmaHandle await_resume() const noexcept { return {op.out}; }
  };

  const ThreadSlot& slot() const { return slot_; }
  std::uint32_t block() const { return slot_.block; }
  std::uint32_t tid() const { return tid_; }
  std::uint32_t local_tid() const { return local_tid_; }
  bool is_mtc() const { return is_mtc_; }
  Machine& machine() const { return *machine_; }
  // Cycle at which the thread's next instruction will issue.
  Cycle now() const;

  // n back-to-back unit-latency ALU instructions.
  Void alu(std::uint64_t n = 1) { return make<Void>(detail::OpKind::kAlu, 0, 0, n); }

  template <typename T>
  Value<T> load(Addr addr) {
    detail::check_word<T>();
    return make<Value<T>>(detail::OpKind::kLoad, addr, sizeof(T));
  }
  template <typename T>
  Void store(Addr addr, T v) {
    detail::check_word<T>();
    auto w = make<Void>(detail::OpKind::kStore, addr, sizeof(T));
    w.op.a = detail::to_bits(v);
    return w;
  }
  // 64-bit compare-and-swap. `remote` issues it as a remote atomic at the
  // block owning addr.
  Cas cas(Addr addr, std::uint64_t expected, std::uint64_t desired, bool remote = false) {
    auto w = make<Cas>(detail::OpKind::kCas, addr, 8);
    w.op.a = expected;
    w.op.b = desired;
    w.op.remote = remote;
    return w;
  }
  Value<std::int64_t> fetch_add(Addr addr, std::int64_t delta, bool remote = false) {
    auto w = make<Value<std::int64_t>>(detail::OpKind::kFetchAddInt, addr, 8);
    w.op.a = detail::to_bits(delta);
    w.op.remote = remote;
    return w;
  }
  Value<double> fetch_add_real(Addr addr, double delta, bool remote = false) {
    auto w = make<Value<double>>(detail::OpKind::kFetchAddReal, addr, 8);
    w.op.a = detail::to_bits(delta);
    w.op.remote = remote;
    return w;
  }
  // The request must stay alive until the instruction issues.
  Dma dma(const DmaRequest& req) {
    auto w = make<Dma>(detail::OpKind::kDmaSubmit, 0, 0);
    w.op.dma = &req;
    return w;
  }
  Void dma_wait(DmaHandle h) { return make<Void>(detail::OpKind::kDmaWait, 0, 0, h.id); }
  Void barrier(std::uint32_t id) { return make<Void>(detail::OpKind::kBarrier, 0, 0, id); }
  // Writes back and invalidates this block's cache.
  Void cache_flush() { return make<Void>(detail::OpKind::kFlush, 0, 0); }

  // Attributes this thread's subsequent cycles to `label` in the trace.
  void set_phase(std::uint32_t label);

 private:
  friend class Machine;
  friend struct detail::OpAwaiter;

  template <typename W>
  W make(detail::OpKind kind, Addr addr, std::uint32_t bytes, std::uint64_t count = 0) {
    W w{};
    w.ctx = this;
    w.op.kind = kind;
    w.op.addr = addr;
    w.op.bytes = bytes;
    w.op.count = count;
    return w;
  }

  Machine* machine_ = nullptr;
  ThreadSlot slot_;
  std::uint32_t tid_ = 0;
  std::uint32_t local_tid_ = 0;
  bool is_mtc_ = true;
  detail::Op* pending_ = nullptr;
  std::coroutine_handle<> current_;
};

class Machine {
 public:
  explicit Machine(const MachineConfig& config);
  ~Machine();
  Machine(const Machine&) = delete;
  Machine& operator=(const Machine&) = delete;

  const MachineConfig& config() const { return config_; }
  std::uint32_t total_threads() const { return config_.total_threads(); }

  // Global thread id layout is block-major; inside a block the MTC threads
  // (core * threads_per_mtc + thread) come first, then one per STC.
  std::uint32_t thread_id(const ThreadSlot& s) const;
  ThreadSlot slot_of(std::uint32_t tid) const;
  ThreadSlot mtc_slot(std::uint32_t block, std::uint32_t index) const;  // index < mtc_threads_per_block
  ThreadSlot stc_slot(std::uint32_t block, std::uint32_t stc) const;

  // DRAM allocation with affinity to `block`; 64-byte aligned, zero filled.
  Range dgas_partition(std::uint64_t bytes, std::uint32_t affinity);
  Range spad(std::uint32_t block) const;
  bool is_mapped(Addr addr, std::uint64_t bytes) const;
  Space space_of(Addr addr) const;
  std::uint32_t affinity_of(Addr addr) const;

  // Host-side (untimed) memory access, for staging inputs and reading results.
  void read_bytes(Addr addr, void* out, std::uint64_t bytes) const;
  void write_bytes(Addr addr, const void* in, std::uint64_t bytes);
  template <typename T>
  T peek(Addr addr) const {
    T v;
    read_bytes(addr, &v, sizeof(T));
    return v;
  }
  template <typename T>
  void poke(Addr addr, T v) {
    write_bytes(addr, &v, sizeof(T));
  }
  void fill(Addr addr, std::uint64_t bytes, std::uint8_t byte);

  ThreadContext& context(const ThreadSlot& s);
  void spawn(const ThreadSlot& s, Task<> program);
  // Barrier over `participants` arrivals; reusable. A flushing barrier writes
  // back and invalidates the caches of `flush_blocks` before release.
  std::uint32_t make_barrier(std::uint32_t participants, std::vector<std::uint32_t> flush_blocks = {});

  // Runs all spawned programs to completion. May be called once.
  ExecutionTrace run();

 private:
  friend class ThreadContext;
  friend struct detail::OpAwaiter;
  struct Impl;
  MachineConfig config_;
  std::vector<ThreadContext> contexts_;
  std::unique_ptr<Impl> impl_;
};

inline void detail::OpAwaiter::await_suspend(std::coroutine_handle<> h) noexcept {
  ctx->pending_ = &op;
  ctx->current_ = h;
}

}  // namespace smash::sim
