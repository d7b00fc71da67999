#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace smash::sim {

// Latencies and bandwidths in core cycles.
struct CostTable {
  std::uint32_t spad_access_cycles = 2;
  std::uint32_t dram_access_cycles = 100;
  std::uint32_t dram_peak_bytes_per_cycle = 8;
  std::uint32_t dma_setup_cycles = 50;
  std::uint32_t dma_bytes_per_cycle = 8;
  std::uint32_t barrier_cycles = 10;
  std::uint32_t issue_width_per_mtc = 1;
  std::uint32_t cache_hit_cycles = 2;
  // Added to any access or atomic served by another block.
  std::uint32_t remote_access_cycles = 50;

  void validate() const;
};

struct MachineConfig {
  std::uint32_t blocks = 1;
  std::uint32_t mtc_per_block = 4;
  std::uint32_t stc_per_block = 2;
  std::uint32_t threads_per_mtc = 16;
  std::uint64_t spad_bytes = 4096 * 1024;
  std::uint64_t cache_bytes = 16 * 1024;
  std::uint32_t cache_assoc = 4;
  std::uint32_t cache_line_bytes = 64;
  CostTable cost;
  // Memory controller serves sub-line uncached accesses (atomics, DMA
  // gather/scatter elements) at their own width instead of a full line.
  bool native_8byte_access = false;
  std::uint64_t dram_capacity_bytes = 0;  // 0 = unlimited
  std::uint32_t dma_queue_depth = 16;
  std::uint64_t sample_interval = 10000;
  // Permutes round-robin priority inside every core; 0 keeps natural order.
  std::uint64_t schedule_seed = 0;

  void validate() const;

  std::uint32_t cores_per_block() const { return mtc_per_block + stc_per_block; }
  std::uint32_t threads_per_block() const { return mtc_per_block * threads_per_mtc + stc_per_block; }
  std::uint32_t mtc_threads_per_block() const { return mtc_per_block * threads_per_mtc; }
  std::uint32_t total_threads() const { return blocks * threads_per_block(); }
  std::uint64_t cache_sets() const { return cache_bytes / (std::uint64_t{cache_line_bytes} * cache_assoc); }
};

// Plain-text key=value; '#' starts a comment. Unknown keys are rejected.
MachineConfig load_machine_config(const std::filesystem::path& path);
MachineConfig parse_machine_config(const std::string& text, const std::string& origin = "<string>");
std::string format_machine_config(const MachineConfig& cfg);

}  // namespace smash::sim
