#include "smash/sim/trace_io.hpp"

#include <sstream>

namespace smash::sim {

namespace {

nlohmann::json counters_json(const ThreadCounters& c) {
  return {{"issued", c.issued}, {"active_cycles", c.active_cycles}, {"stall_cycles", c.stall_cycles}};
}

}  // namespace

nlohmann::json trace_to_json(const ExecutionTrace& t, bool include_samples) {
  nlohmann::json j;
  j["total_cycles"] = t.total_cycles;
  j["blocks"] = t.blocks;
  j["threads_per_block"] = t.threads_per_block;
  j["mtc_threads_per_block"] = t.mtc_threads_per_block;
  j["dram_bytes_read"] = t.dram_bytes_read;
  j["dram_bytes_written"] = t.dram_bytes_written;
  j["spad_accesses"] = t.spad_accesses;
  j["cache_hits"] = t.cache_hits;
  j["cache_misses"] = t.cache_misses;
  j["dma_ops"] = t.dma_ops;
  j["barrier_count"] = t.barrier_count;
  j["total_instructions"] = t.total_instructions;
  j["mtc_instructions"] = t.mtc_instructions;
  j["sample_interval"] = t.sample_interval;
  auto& threads = j["threads"] = nlohmann::json::array();
  for (const auto& c : t.threads) threads.push_back(counters_json(c));
  auto& phases = j["phases"] = nlohmann::json::object();
  for (const auto& [label, per_thread] : t.phases) {
    auto& arr = phases[std::to_string(label)] = nlohmann::json::array();
    for (const auto& c : per_thread) arr.push_back(counters_json(c));
  }
  if (include_samples) j["samples"] = t.samples;
  return j;
}

std::string trace_threads_csv(const ExecutionTrace& t) {
  std::ostringstream o;
  o << "thread,block,local,kind,issued,active_cycles,stall_cycles,utilization\n";
  for (std::size_t tid = 0; tid < t.threads.size(); ++tid) {
    const auto& c = t.threads[tid];
    const double util = t.total_cycles ? double(c.active_cycles) / double(t.total_cycles) : 0.0;
    o << tid << ',' << tid / t.threads_per_block << ',' << tid % t.threads_per_block << ','
      << (t.is_mtc_thread(tid) ? "mtc" : "stc") << ',' << c.issued << ',' << c.active_cycles << ','
      << c.stall_cycles << ',' << util << '\n';
  }
  return o.str();
}

std::string trace_samples_csv(const ExecutionTrace& t) {
  std::ostringstream o;
  o << "interval,start_cycle,thread,active_cycles\n";
  for (std::size_t k = 0; k < t.samples.size(); ++k)
    for (std::size_t tid = 0; tid < t.samples[k].size(); ++tid)
      o << k << ',' << k * t.sample_interval << ',' << tid << ',' << t.samples[k][tid] << '\n';
  return o.str();
}

}  // namespace smash::sim
