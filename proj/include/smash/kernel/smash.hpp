#pragma once

// The three scratchpad-hashing SpGEMM kernels, expressed as programs for the
// block simulator. Each run uploads A and B, executes every window through
// distribution, hashing and writeback phases, and downloads C.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "smash/kernel/hashing.hpp"
#include "smash/kernel/window_plan.hpp"
#include "smash/sim/machine.hpp"
#include "smash/sparse.hpp"

namespace smash {

struct KernelOptions {
  PlanConfig plan;                       // spad_bins is derived from the machine by plan_for_machine
  std::uint64_t offset_threshold = 64;   // max probe displacement for the sorted writeback (version 1)
  std::uint64_t dram_table_factor = 8;   // version 3 table slots as a multiple of spad_bins, power of two
};

// Hashing-phase accounting for one planned window. Version 1 may execute a
// window as several attempts (overflow replans); their cycles are summed.
struct WindowStats {
  Index row_begin = 0;
  Index row_end = 0;
  std::uint32_t block = 0;
  std::uint32_t attempts = 0;
  std::vector<std::uint64_t> hashing_active;  // per MTC thread of the block

  double mean() const;
  double stddev() const;
  double imbalance() const;  // stddev / mean, 0 for an idle window
  double max_over_mean() const;
};

struct KernelReport {
  int version = 0;
  sim::MachineConfig machine;
  sim::ExecutionTrace trace;
  std::uint64_t windows = 0;       // executed windows (three barriers each)
  std::uint64_t plan_windows = 0;
  std::uint64_t replans = 0;       // version 1 overflow retries
  std::uint64_t flops = 0;         // partial products merged
  std::uint64_t table_slots = 0;
  unsigned hash_shift = 0;
  ProbeStats probe;
  std::vector<WindowStats> window_stats;
  CsrMatrix output;
  // Per phase (distribution, hashing, writeback): issued instructions summed over MTC threads.
  std::uint64_t phase_issued[3] = {0, 0, 0};
};

// Hashtable slots that fit the scratchpad next to the control and row areas.
std::uint64_t table_slots_for(const sim::MachineConfig& machine, const PlanConfig& plan);
WindowPlan plan_for_machine(const CsrMatrix& a, const CsrMatrix& b, const sim::MachineConfig& machine,
                            const KernelOptions& options = {});

KernelReport smash_v1(const CsrMatrix& a, const CsrMatrix& b, const sim::MachineConfig& machine,
                      const WindowPlan& plan, const KernelOptions& options = {});
KernelReport smash_v2(const CsrMatrix& a, const CsrMatrix& b, const sim::MachineConfig& machine,
                      const WindowPlan& plan, const KernelOptions& options = {});
// Runs with native 8-byte access enabled regardless of `machine`.
KernelReport smash_v3(const CsrMatrix& a, const CsrMatrix& b, const sim::MachineConfig& machine,
                      const WindowPlan& plan, const KernelOptions& options = {});

// Plans with plan_for_machine and dispatches on version 1..3.
KernelReport run_smash(int version, const CsrMatrix& a, const CsrMatrix& b, const sim::MachineConfig& machine,
                       const KernelOptions& options = {});

nlohmann::json kernel_report_to_json(const KernelReport& report, bool include_samples = false);
std::string kernel_report_json(const KernelReport& report, bool include_samples = false);

}  // namespace smash
