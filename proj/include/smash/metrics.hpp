#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smash/sim/machine.hpp"

namespace smash {

struct IntensityReport {
  std::uint64_t flop = 0;
  std::uint64_t nnz_a = 0, nnz_b = 0, nnz_c = 0;
  double bytes_per_element = 12.0;
  std::optional<double> cf;  // empty when nnz_c == 0
  double ai = 0.0;           // flop / ((nnz_a + nnz_b + nnz_c) * bytes_per_element)

  double ai_rounded() const;  // two decimals
};

// Throws kInvalidArgument if bytes_per_element <= 0 or nothing is moved.
IntensityReport arithmetic_intensity(std::uint64_t nnz_a, std::uint64_t nnz_b, std::uint64_t nnz_c,
                                     std::uint64_t flop, double bytes_per_element = 12.0);

// Instructions per cycle. The trace overload counts MTC instructions only,
// so the result is bounded by the number of MTCs. Zero cycles throw.
double aggregate_ipc(std::uint64_t instructions, std::uint64_t cycles);
double aggregate_ipc(const sim::ExecutionTrace& trace);

// (read + written) / (cycles * peak); 0 for an idle trace.
double bandwidth_utilization(const sim::ExecutionTrace& trace, double peak_bytes_per_cycle);

struct HistogramBin {
  double low = 0.0, high = 0.0;
  std::uint64_t count = 0;
};

struct UtilizationReport {
  std::vector<double> per_thread;  // MTC threads in global id order
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::vector<HistogramBin> histogram;
  std::uint64_t interval = 0;
  std::vector<double> series;  // mean MTC utilization per interval
};

// `interval` must be a positive multiple of the trace's sampling interval
// (when the trace carries samples). Bins split [0, 1] evenly; the last bin
// is closed.
UtilizationReport utilization_stats(const sim::ExecutionTrace& trace, std::uint64_t interval,
                                    std::uint32_t bins = 10);

nlohmann::json intensity_to_json(const IntensityReport& r);
nlohmann::json utilization_to_json(const UtilizationReport& r);
std::string histogram_csv(const UtilizationReport& r);  // bin_low,bin_high,count
std::string series_csv(const UtilizationReport& r);     // interval,start_cycle,mean_utilization

// One-row summary of a simulated run.
struct RunMetrics {
  std::uint64_t cycles = 0;
  std::uint64_t instructions = 0;
  double ipc = 0.0;
  double bandwidth_utilization = 0.0;
  double cache_hit_rate = 0.0;
  double utilization_mean = 0.0;
  double utilization_stddev = 0.0;
  IntensityReport intensity;
};

RunMetrics run_metrics(const sim::ExecutionTrace& trace, const IntensityReport& intensity, double peak_bytes_per_cycle);
nlohmann::json run_metrics_to_json(const RunMetrics& m);
std::string run_metrics_csv_header();
std::string run_metrics_csv_row(const RunMetrics& m);

}  // namespace smash
