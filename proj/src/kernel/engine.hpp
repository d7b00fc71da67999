#pragma once

// Shared machinery of the three kernel versions: device memory layout,
// window jobs, shipping, the prefix pass and output download.

#include <cstdint>
#include <deque>
#include <vector>

#include "smash/kernel/smash.hpp"
#include "smash/sim/machine.hpp"

namespace smash::kimpl {

using sim::Addr;
using sim::Machine;
using sim::Task;
using sim::ThreadContext;

struct DevCsr {
  Addr row_ptr = 0, col = 0, val = 0;
};

// Control words at the start of each block's scratchpad.
enum CtrlWord : std::uint64_t {
  kTokenCounter = 0,
  kDoneCounter = 1,
  kFlags = 2,  // four rotating overflow flags
  kFragBase = 6,
  kSections = 8,  // section counts, then section prefixes
};

std::uint64_t ctrl_bytes(std::uint32_t nsec);

struct BlockMem {
  std::uint32_t barrier = 0;
  // scratchpad
  Addr ctrl = 0, row_count = 0, row_base = 0, row_len = 0, row_aux = 0;
  Addr tags = 0, vals = 0;
  Addr tok_base = 0, tok_count = 0;
  Addr dcol[2]{}, dval[2]{}, doff[2]{};
  // DRAM with affinity to the block
  Addr dtable[2]{};
  Addr part_rowptr = 0, part_col = 0, part_val = 0, part_boff = 0, part_bcol = 0;
  Addr dense_acc = 0;

  Addr word(std::uint64_t w) const { return ctrl + 8 * w; }
  Addr flag(std::uint32_t attempt) const { return word(kFlags + attempt % 4); }
};

// One executed window: a planned window or a version-1 replan piece of one.
struct Job {
  Window w;
  std::uint32_t plan_index = 0;
  std::uint64_t a_begin = 0, a_end = 0;  // A nonzero range
  std::vector<std::uint32_t> dense_ord;  // ordinal among the window's dense rows, or kNone

  static constexpr std::uint32_t kNone = ~std::uint32_t{0};
  std::uint32_t rows() const { return std::uint32_t(w.rows()); }
  // Column stride of version 2/3 tags. Odd, so col * stride is a bijection
  // modulo any power-of-two table size.
  std::uint64_t tag_stride() const { return std::uint64_t(rows()) | 1; }
  bool dense(std::uint32_t j) const { return w.row_class[j] == RowClass::kDense; }
};

struct ThreadStats {
  ProbeStats total, cur;
  std::uint64_t flops_total = 0, flops_cur = 0;

  void commit() {
    total += cur;
    flops_total += flops_cur;
    discard();
  }
  void discard() {
    cur = {};
    flops_cur = 0;
  }
};

struct Attempt {
  std::uint32_t plan_index = 0;
  std::uint32_t block = 0;
  std::uint32_t attempt = 0;
  bool overflow = false;
};

class Env {
 public:
  Env(int version, const CsrMatrix& a, const CsrMatrix& b, const sim::MachineConfig& cfg, const WindowPlan& plan,
      const KernelOptions& opt);

  const int version;
  const CsrMatrix& a;
  const CsrMatrix& b;
  const WindowPlan& plan;
  const KernelOptions opt;
  Machine m;

  std::uint32_t nsec = 0;  // MTC threads per block = writeback sections
  std::uint32_t nblocks = 0;
  std::uint64_t cap = 0;   // hashtable slots
  std::uint64_t ncols = 0;
  std::uint64_t section_slots = 0;
  std::uint64_t dense_entries = 0;  // v3 dense staging capacity per buffer

  DevCsr A, B;
  Addr manifest = 0;   // u32 per A nonzero: offset of its B row inside the window package
  Addr tok_bound = 0;  // u32 per token (v3)
  Addr tok_order = 0;  // u32 per token (v2, v3): claim order, heaviest half-rows first
  Addr out_start = 0, out_len = 0, out_col = 0, out_val = 0, out_cursor = 0;
  std::vector<std::vector<Index>> packages;  // distinct B rows per planned window
  std::vector<BlockMem> blocks;
  std::vector<ThreadStats> stats;
  std::vector<Attempt> attempts;
  sim::ExecutionTrace trace;  // set after Machine::run

  Job make_job(std::uint32_t plan_index, Index begin, Index end, bool force_dense = false) const;
  std::deque<Job> initial_jobs(std::uint32_t block) const;
  std::uint32_t label(std::uint32_t block, std::uint32_t attempt, std::uint32_t phase) const {
    return (attempt * nblocks + block) * 3 + phase;
  }
  std::uint64_t section_of(std::uint64_t slot) const {
    return std::min<std::uint64_t>(slot / section_slots, nsec - 1);
  }
  std::uint64_t section_begin(std::uint64_t s) const { return s * section_slots; }
  std::uint64_t section_end(std::uint64_t s) const { return s + 1 == nsec ? cap : (s + 1) * section_slots; }
  Addr dense_acc(std::uint32_t block, std::uint32_t ord) const {
    return blocks[block].dense_acc + std::uint64_t(ord) * ncols * 16;
  }

  // Distribution phase of the block's setup core: ships the job's A rows,
  // its manifest slice and, unless already resident, the B index lists of
  // its planned window into the partition.
  Task<> ship(ThreadContext& ctx, const Job& job, bool package = true);
  // Run by the last MTC thread to finish hashing: row bases, section
  // prefixes, fragment allocation, counter reset.
  Task<> prefix(ThreadContext& ctx, const Job& job, bool overflow);
  // Writes out_start/out_len for rows j = s, s+nsec, ... and drains their
  // dense accumulators (only resets them when `emit` is false).
  Task<> finish_rows(ThreadContext& ctx, const Job& job, std::uint32_t s, bool emit);
  // Row-wise products of A nonzeros [p0, p1) (job-local) for output row j.
  // Returns false if version 1 exceeded its displacement bound.
  struct Staging {
    Addr flag = 0;           // v1: overflow flag of the current attempt
    std::uint64_t next = 0;  // v3: next free dense index of the current token
    std::uint32_t parity = 0;
  };
  Task<bool> products(ThreadContext& ctx, const Job& job, std::uint32_t j, std::uint64_t p0, std::uint64_t p1,
                      Staging& cur);

  KernelReport report();

 private:
  Addr alloc(std::uint64_t bytes, std::uint32_t affinity);
  DevCsr upload(const CsrMatrix& m);
  void layout_block(std::uint32_t block, std::uint64_t max_rows, std::uint64_t max_anz, std::uint64_t max_bcols);
};

// Per-version thread programs.
Task<> v1_mtc(Env& e, std::uint32_t block, std::uint32_t s);
Task<> v1_stc(Env& e, std::uint32_t block);
Task<> v2_mtc(Env& e, std::uint32_t block, std::uint32_t s);
Task<> v3_mtc(Env& e, std::uint32_t block, std::uint32_t s);
Task<> tokens_stc(Env& e, std::uint32_t block);

}  // namespace smash::kimpl
