#include "smash/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "smash/error.hpp"

namespace smash {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

double IntensityReport::ai_rounded() const { return std::round(ai * 100.0) / 100.0; }

IntensityReport arithmetic_intensity(std::uint64_t nnz_a, std::uint64_t nnz_b, std::uint64_t nnz_c,
                                     std::uint64_t flop, double bytes_per_element) {
  if (!(bytes_per_element > 0.0)) fail(ErrorCode::kInvalidArgument, "arithmetic_intensity: bytes per element must be positive");
  const std::uint64_t elements = nnz_a + nnz_b + nnz_c;
  if (elements == 0) fail(ErrorCode::kInvalidArgument, "arithmetic_intensity: no elements moved");
  IntensityReport r;
  r.flop = flop;
  r.nnz_a = nnz_a;
  r.nnz_b = nnz_b;
  r.nnz_c = nnz_c;
  r.bytes_per_element = bytes_per_element;
  if (nnz_c > 0) r.cf = double(flop) / double(nnz_c);
  r.ai = double(flop) / (double(elements) * bytes_per_element);
  return r;
}

double aggregate_ipc(std::uint64_t instructions, std::uint64_t cycles) {
  if (cycles == 0) fail(ErrorCode::kInvalidArgument, "aggregate_ipc: zero-cycle trace");
  return double(instructions) / double(cycles);
}

double aggregate_ipc(const sim::ExecutionTrace& trace) {
  return aggregate_ipc(trace.mtc_instructions, trace.total_cycles);
}

double bandwidth_utilization(const sim::ExecutionTrace& trace, double peak_bytes_per_cycle) {
  if (!(peak_bytes_per_cycle > 0.0)) fail(ErrorCode::kInvalidArgument, "bandwidth_utilization: peak must be positive");
  if (trace.total_cycles == 0) return 0.0;
  return double(trace.dram_bytes_read + trace.dram_bytes_written) / (double(trace.total_cycles) * peak_bytes_per_cycle);
}

UtilizationReport utilization_stats(const sim::ExecutionTrace& trace, std::uint64_t interval, std::uint32_t bins) {
  if (interval == 0) fail(ErrorCode::kInvalidArgument, "utilization_stats: interval must be positive");
  if (bins == 0) fail(ErrorCode::kInvalidArgument, "utilization_stats: need at least one bin");
  UtilizationReport r;
  r.interval = interval;

  std::vector<std::size_t> mtc;
  for (std::size_t t = 0; t < trace.threads.size(); ++t)
    if (trace.is_mtc_thread(t)) mtc.push_back(t);

  for (const auto t : mtc) {
    const double u = trace.total_cycles == 0 ? 0.0 : double(trace.threads[t].active_cycles) / double(trace.total_cycles);
    r.per_thread.push_back(std::min(u, 1.0));
  }
  if (!r.per_thread.empty()) {
    double sum = 0.0;
    for (const double u : r.per_thread) sum += u;
    r.mean = sum / double(r.per_thread.size());
    double ss = 0.0;
    for (const double u : r.per_thread) ss += (u - r.mean) * (u - r.mean);
    r.stddev = std::sqrt(ss / double(r.per_thread.size()));
  }

  r.histogram.resize(bins);
  for (std::uint32_t k = 0; k < bins; ++k) {
    r.histogram[k].low = double(k) / bins;
    r.histogram[k].high = double(k + 1) / bins;
  }
  for (const double u : r.per_thread)
    ++r.histogram[std::min<std::uint32_t>(std::uint32_t(u * bins), bins - 1)].count;

  if (!trace.samples.empty() && !mtc.empty()) {
    const std::uint64_t base = trace.sample_interval;
    if (base == 0 || interval % base != 0)
      fail(ErrorCode::kInvalidArgument, "utilization_stats: interval " + std::to_string(interval) +
                                            " is not a multiple of the sampling interval " + std::to_string(base));
    const std::uint64_t per = interval / base;
    for (std::size_t k0 = 0; k0 < trace.samples.size(); k0 += per) {
      const std::size_t k1 = std::min<std::size_t>(trace.samples.size(), k0 + per);
      const std::uint64_t start = k0 * base;
      const std::uint64_t span = std::min<std::uint64_t>(trace.total_cycles, k1 * base) - start;
      std::uint64_t active = 0;
      for (std::size_t k = k0; k < k1; ++k)
        for (const auto t : mtc) active += trace.samples[k][t];
      r.series.push_back(span == 0 ? 0.0 : double(active) / (double(span) * double(mtc.size())));
    }
  }
  return r;
}

nlohmann::json intensity_to_json(const IntensityReport& r) {
  nlohmann::json j;
  j["flop"] = r.flop;
  j["nnz_a"] = r.nnz_a;
  j["nnz_b"] = r.nnz_b;
  j["nnz_c"] = r.nnz_c;
  j["bytes_per_element"] = r.bytes_per_element;
  j["cf"] = r.cf ? nlohmann::json(*r.cf) : nlohmann::json("undefined");
  j["ai"] = r.ai;
  j["ai_2dp"] = r.ai_rounded();
  return j;
}

nlohmann::json utilization_to_json(const UtilizationReport& r) {
  nlohmann::json j;
  j["mean"] = r.mean;
  j["stddev"] = r.stddev;
  j["per_thread"] = r.per_thread;
  auto& h = j["histogram"] = nlohmann::json::array();
  for (const auto& b : r.histogram) h.push_back({{"low", b.low}, {"high", b.high}, {"count", b.count}});
  j["interval"] = r.interval;
  j["series"] = r.series;
  return j;
}

std::string histogram_csv(const UtilizationReport& r) {
  std::ostringstream os;
  os << "bin_low,bin_high,count\n";
  for (const auto& b : r.histogram) os << num(b.low) << ',' << num(b.high) << ',' << b.count << '\n';
  return os.str();
}

std::string series_csv(const UtilizationReport& r) {
  std::ostringstream os;
  os << "interval,start_cycle,mean_utilization\n";
  for (std::size_t k = 0; k < r.series.size(); ++k)
    os << k << ',' << k * r.interval << ',' << num(r.series[k]) << '\n';
  return os.str();
}

RunMetrics run_metrics(const sim::ExecutionTrace& trace, const IntensityReport& intensity, double peak_bytes_per_cycle) {
  RunMetrics m;
  m.cycles = trace.total_cycles;
  m.instructions = trace.mtc_instructions;
  m.ipc = trace.total_cycles == 0 ? 0.0 : aggregate_ipc(trace);
  m.bandwidth_utilization = bandwidth_utilization(trace, peak_bytes_per_cycle);
  m.cache_hit_rate = trace.cache_hit_rate();
  const auto util = utilization_stats(trace, std::max<std::uint64_t>(trace.sample_interval, 1));
  m.utilization_mean = util.mean;
  m.utilization_stddev = util.stddev;
  m.intensity = intensity;
  return m;
}

nlohmann::json run_metrics_to_json(const RunMetrics& m) {
  return {{"cycles", m.cycles},
          {"mtc_instructions", m.instructions},
          {"aggregate_ipc", m.ipc},
          {"bandwidth_utilization", m.bandwidth_utilization},
          {"cache_hit_rate", m.cache_hit_rate},
          {"utilization_mean", m.utilization_mean},
          {"utilization_stddev", m.utilization_stddev},
          {"intensity", intensity_to_json(m.intensity)}};
}

std::string run_metrics_csv_header() {
  return "cycles,mtc_instructions,aggregate_ipc,bandwidth_utilization,cache_hit_rate,utilization_mean,"
         "utilization_stddev,flop,nnz_a,nnz_b,nnz_c,cf,ai\n";
}

std::string run_metrics_csv_row(const RunMetrics& m) {
  std::ostringstream os;
  const auto& in = m.intensity;
  os << m.cycles << ',' << m.instructions << ',' << num(m.ipc) << ',' << num(m.bandwidth_utilization) << ','
     << num(m.cache_hit_rate) << ',' << num(m.utilization_mean) << ',' << num(m.utilization_stddev) << ',' << in.flop
     << ',' << in.nnz_a << ',' << in.nnz_b << ',' << in.nnz_c << ',' << (in.cf ? num(*in.cf) : "undefined") << ','
     << num(in.ai) << '\n';
  return os.str();
}

}  // namespace smash
