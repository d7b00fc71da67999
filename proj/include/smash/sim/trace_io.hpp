#pragma once

#include <string>

#include <json.hpp>

#include "smash/sim/machine.hpp"

namespace smash::sim {

nlohmann::json trace_to_json(const ExecutionTrace& trace, bool include_samples = true);

// thread,block,local,kind,issued,active_cycles,stall_cycles,utilization
std::string trace_threads_csv(const ExecutionTrace& trace);

// interval,start_cycle,thread,active_cycles
std::string trace_samples_csv(const ExecutionTrace& trace);

}  // namespace smash::sim
