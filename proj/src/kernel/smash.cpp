#include "smash/kernel/smash.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "engine.hpp"
#include "smash/error.hpp"
#include "smash/sim/trace_io.hpp"

namespace smash {

double WindowStats::mean() const {
  if (hashing_active.empty()) return 0.0;
  const double sum = std::accumulate(hashing_active.begin(), hashing_active.end(), 0.0,
                                     [](double acc, std::uint64_t v) { return acc + double(v); });
  return sum / double(hashing_active.size());
}

double WindowStats::stddev() const {
  if (hashing_active.empty()) return 0.0;
  const double mu = mean();
  double ss = 0.0;
  for (const auto v : hashing_active) ss += (double(v) - mu) * (double(v) - mu);
  return std::sqrt(ss / double(hashing_active.size()));
}

double WindowStats::imbalance() const {
  const double mu = mean();
  return mu == 0.0 ? 0.0 : stddev() / mu;
}

double WindowStats::max_over_mean() const {
  const double mu = mean();
  if (mu == 0.0) return 0.0;
  return double(*std::max_element(hashing_active.begin(), hashing_active.end())) / mu;
}

std::uint64_t table_slots_for(const sim::MachineConfig& machine, const PlanConfig& plan) {
  const std::uint64_t reserved = kimpl::ctrl_bytes(machine.mtc_threads_per_block()) + 4 * 8 * plan.max_window_rows;
  if (machine.spad_bytes <= reserved + 16)
    fail(ErrorCode::kCapacity, "smash: scratchpad too small for the row areas");
  const std::uint64_t slots = (machine.spad_bytes - reserved) / 16;
  return std::uint64_t{1} << (63 - std::countl_zero(slots));
}

WindowPlan plan_for_machine(const CsrMatrix& a, const CsrMatrix& b, const sim::MachineConfig& machine,
                            const KernelOptions& options) {
  PlanConfig cfg = options.plan;
  cfg.spad_bins = table_slots_for(machine, cfg);
  return plan_windows(a, b, cfg);
}

namespace {

KernelReport run_version(int version, const CsrMatrix& a, const CsrMatrix& b, const sim::MachineConfig& machine,
                         const WindowPlan& plan, const KernelOptions& options) {
  machine.validate();
  kimpl::Env env(version, a, b, machine, plan, options);
  for (std::uint32_t blk = 0; blk < env.nblocks; ++blk) {
    for (std::uint32_t s = 0; s < env.nsec; ++s) {
      const auto slot = env.m.mtc_slot(blk, s);
      switch (version) {
        case 1: env.m.spawn(slot, kimpl::v1_mtc(env, blk, s)); break;
        case 2: env.m.spawn(slot, kimpl::v2_mtc(env, blk, s)); break;
        default: env.m.spawn(slot, kimpl::v3_mtc(env, blk, s)); break;
      }
    }
    const auto stc = env.m.stc_slot(blk, 0);
    env.m.spawn(stc, version == 1 ? kimpl::v1_stc(env, blk) : kimpl::tokens_stc(env, blk));
  }
  env.trace = env.m.run();
  return env.report();
}

}  // namespace

KernelReport smash_v1(const CsrMatrix& a, const CsrMatrix& b, const sim::MachineConfig& machine,
                      const WindowPlan& plan, const KernelOptions& options) {
  return run_version(1, a, b, machine, plan, options);
}

KernelReport smash_v2(const CsrMatrix& a, const CsrMatrix& b, const sim::MachineConfig& machine,
                      const WindowPlan& plan, const KernelOptions& options) {
  return run_version(2, a, b, machine, plan, options);
}

KernelReport smash_v3(const CsrMatrix& a, const CsrMatrix& b, const sim::MachineConfig& machine,
                      const WindowPlan& plan, const KernelOptions& options) {
  sim::MachineConfig m = machine;
  m.native_8byte_access = true;
  return run_version(3, a, b, m, plan, options);
}

KernelReport run_smash(int version, const CsrMatrix& a, const CsrMatrix& b, const sim::MachineConfig& machine,
                       const KernelOptions& options) {
  if (version < 1 || version > 3) fail(ErrorCode::kInvalidArgument, "smash: version must be 1, 2 or 3");
  if (a.ncols != b.nrows) fail(ErrorCode::kDimensionMismatch, "smash: inner dimensions differ");
  const WindowPlan plan = plan_for_machine(a, b, machine, options);
  switch (version) {
    case 1: return smash_v1(a, b, machine, plan, options);
    case 2: return smash_v2(a, b, machine, plan, options);
    default: return smash_v3(a, b, machine, plan, options);
  }
}

nlohmann::json kernel_report_to_json(const KernelReport& r, bool include_samples) {
  nlohmann::json j;
  j["version"] = r.version;
  j["machine"] = sim::format_machine_config(r.machine);
  auto trace = sim::trace_to_json(r.trace, include_samples);
  trace.erase("phases");
  j["trace"] = std::move(trace);
  j["windows"] = r.windows;
  j["plan_windows"] = r.plan_windows;
  j["replans"] = r.replans;
  j["flops"] = r.flops;
  j["table_slots"] = r.table_slots;
  j["hash_shift"] = r.hash_shift;
  j["probe"] = {{"insertions", r.probe.insertions},
                {"merges", r.probe.merges},
                {"collisions", r.probe.collisions},
                {"max_probe_length", r.probe.max_probe_length}};
  j["phase_issued"] = {{"distribution", r.phase_issued[0]},
                       {"hashing", r.phase_issued[1]},
                       {"writeback", r.phase_issued[2]}};
  auto& ws = j["window_stats"] = nlohmann::json::array();
  for (const auto& w : r.window_stats)
    ws.push_back({{"row_begin", w.row_begin},
                  {"row_end", w.row_end},
                  {"block", w.block},
                  {"attempts", w.attempts},
                  {"mean", w.mean()},
                  {"stddev", w.stddev()},
                  {"imbalance", w.imbalance()},
                  {"max_over_mean", w.max_over_mean()}});
  j["output"] = {{"nrows", r.output.nrows}, {"ncols", r.output.ncols}, {"nnz", r.output.nnz()},
                 {"sorted", r.output.sorted}};
  return j;
}

std::string kernel_report_json(const KernelReport& r, bool include_samples) {
  return kernel_report_to_json(r, include_samples).dump(2);
}

}  // namespace smash
