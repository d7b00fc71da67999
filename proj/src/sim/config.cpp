#include "smash/sim/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "smash/error.hpp"

namespace smash::sim {

namespace {

bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace

void CostTable::validate() const {
  auto positive = [](std::uint32_t v, const char* name) {
    if (v == 0) fail(ErrorCode::kInvalidArgument, std::string("cost table: ") + name + " must be positive");
  };
  positive(spad_access_cycles, "spad_access_cycles");
  positive(dram_access_cycles, "dram_access_cycles");
  positive(dram_peak_bytes_per_cycle, "dram_peak_bytes_per_cycle");
  positive(dma_setup_cycles, "dma_setup_cycles");
  positive(dma_bytes_per_cycle, "dma_bytes_per_cycle");
  positive(barrier_cycles, "barrier_cycles");
  positive(cache_hit_cycles, "cache_hit_cycles");
  positive(remote_access_cycles, "remote_access_cycles");
  if (issue_width_per_mtc != 1) fail(ErrorCode::kInvalidArgument, "cost table: issue width per MTC is fixed at 1");
}

void MachineConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::kInvalidArgument, "machine config: " + m); };
  if (blocks < 1 || mtc_per_block < 1 || stc_per_block < 1 || threads_per_mtc < 1) bad("all counts must be >= 1");
  if (spad_bytes == 0 || spad_bytes % 64 != 0) bad("spad_bytes must be a positive multiple of 64");
  if (spad_bytes > (std::uint64_t{1} << 32)) bad("spad_bytes must not exceed 4 GiB");
  if (blocks > 4096) bad("at most 4096 blocks");
  if (!is_pow2(cache_line_bytes) || cache_line_bytes < 8) bad("cache_line_bytes must be a power of two >= 8");
  if (cache_assoc < 1) bad("cache_assoc must be >= 1");
  if (cache_bytes % (std::uint64_t{cache_line_bytes} * cache_assoc) != 0 || cache_sets() == 0)
    bad("cache_bytes must be a positive multiple of line size times associativity");
  if (dma_queue_depth < 1) bad("dma_queue_depth must be >= 1");
  if (sample_interval < 1) bad("sample_interval must be >= 1");
  cost.validate();
}

namespace {

using Setter = std::function<void(MachineConfig&, std::uint64_t)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> s;
    auto u32 = [](std::uint32_t MachineConfig::*f) {
      return [f](MachineConfig& c, std::uint64_t v) { c.*f = static_cast<std::uint32_t>(v); };
    };
    auto u64 = [](std::uint64_t MachineConfig::*f) { return [f](MachineConfig& c, std::uint64_t v) { c.*f = v; }; };
    auto cost = [](std::uint32_t CostTable::*f) {
      return [f](MachineConfig& c, std::uint64_t v) { c.cost.*f = static_cast<std::uint32_t>(v); };
    };
    s["blocks"] = u32(&MachineConfig::blocks);
    s["mtc_per_block"] = u32(&MachineConfig::mtc_per_block);
    s["stc_per_block"] = u32(&MachineConfig::stc_per_block);
    s["threads_per_mtc"] = u32(&MachineConfig::threads_per_mtc);
    s["spad_bytes"] = u64(&MachineConfig::spad_bytes);
    s["spad_kb"] = [](MachineConfig& c, std::uint64_t v) { c.spad_bytes = v * 1024; };
    s["cache_bytes"] = u64(&MachineConfig::cache_bytes);
    s["cache_kb"] = [](MachineConfig& c, std::uint64_t v) { c.cache_bytes = v * 1024; };
    s["cache_assoc"] = u32(&MachineConfig::cache_assoc);
    s["cache_line_bytes"] = u32(&MachineConfig::cache_line_bytes);
    s["native_8byte_access"] = [](MachineConfig& c, std::uint64_t v) { c.native_8byte_access = v != 0; };
    s["dram_capacity_bytes"] = u64(&MachineConfig::dram_capacity_bytes);
    s["dma_queue_depth"] = u32(&MachineConfig::dma_queue_depth);
    s["sample_interval"] = u64(&MachineConfig::sample_interval);
    s["schedule_seed"] = u64(&MachineConfig::schedule_seed);
    s["spad_access_cycles"] = cost(&CostTable::spad_access_cycles);
    s["dram_access_cycles"] = cost(&CostTable::dram_access_cycles);
    s["dram_peak_bytes_per_cycle"] = cost(&CostTable::dram_peak_bytes_per_cycle);
    s["dma_setup_cycles"] = cost(&CostTable::dma_setup_cycles);
    s["dma_bytes_per_cycle"] = cost(&CostTable::dma_bytes_per_cycle);
    s["barrier_cycles"] = cost(&CostTable::barrier_cycles);
    s["issue_width_per_mtc"] = cost(&CostTable::issue_width_per_mtc);
    s["cache_hit_cycles"] = cost(&CostTable::cache_hit_cycles);
    s["remote_access_cycles"] = cost(&CostTable::remote_access_cycles);
    return s;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

MachineConfig parse_machine_config(const std::string& text, const std::string& origin) {
  MachineConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kParse, where + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) fail(ErrorCode::kParse, where + ": unknown key '" + key + "'");
    std::uint64_t v = 0;
    if (val == "true" || val == "on") {
      v = 1;
    } else if (val == "false" || val == "off") {
      v = 0;
    } else {
      auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
      if (ec != std::errc{} || ptr != val.data() + val.size())
        fail(ErrorCode::kParse, where + ": value for '" + key + "' is not an unsigned integer");
    }
    it->second(cfg, v);
  }
  cfg.validate();
  return cfg;
}

MachineConfig load_machine_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_machine_config(ss.str(), path.string());
}

std::string format_machine_config(const MachineConfig& c) {
  std::ostringstream o;
  o << "blocks=" << c.blocks << "\nmtc_per_block=" << c.mtc_per_block << "\nstc_per_block=" << c.stc_per_block
    << "\nthreads_per_mtc=" << c.threads_per_mtc << "\nspad_bytes=" << c.spad_bytes
    << "\ncache_bytes=" << c.cache_bytes << "\ncache_assoc=" << c.cache_assoc
    << "\ncache_line_bytes=" << c.cache_line_bytes << "\nnative_8byte_access=" << (c.native_8byte_access ? 1 : 0)
    << "\ndram_capacity_bytes=" << c.dram_capacity_bytes << "\ndma_queue_depth=" << c.dma_queue_depth
    << "\nsample_interval=" << c.sample_interval << "\nschedule_seed=" << c.schedule_seed
    << "\nspad_access_cycles=" << c.cost.spad_access_cycles << "\ndram_access_cycles=" << c.cost.dram_access_cycles
    << "\ndram_peak_bytes_per_cycle=" << c.cost.dram_peak_bytes_per_cycle
    << "\ndma_setup_cycles=" << c.cost.dma_setup_cycles << "\ndma_bytes_per_cycle=" << c.cost.dma_bytes_per_cycle
    << "\nbarrier_cycles=" << c.cost.barrier_cycles << "\nissue_width_per_mtc=" << c.cost.issue_width_per_mtc
    << "\ncache_hit_cycles=" << c.cost.cache_hit_cycles
    << "\nremote_access_cycles=" << c.cost.remote_access_cycles << "\n";
  return o.str();
}

}  // namespace smash::sim
