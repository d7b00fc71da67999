#include "smash/smash.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <string>
#include <tuple>

#include <json.hpp>

#include "smash/dataflow.hpp"
#include "smash/error.hpp"
#include "smash/kernel/smash.hpp"
#include "smash/matrix_io.hpp"
#include "smash/metrics.hpp"
#include "smash/rmat.hpp"
#include "smash/sim/config.hpp"

struct smash_matrix {
  smash::CsrMatrix m;
};

struct smash_machine {
  smash::sim::MachineConfig cfg;
};

struct smash_report {
  smash_kernel kernel = SMASH_KERNEL_V1;
  smash::CsrMatrix output;
  smash_summary summary{};
  std::string json;
  std::string metrics_csv;
  std::string histogram_csv;
};

namespace {

using smash::CsrMatrix;
using smash::ErrorCode;
using json = nlohmann::json;

thread_local std::string g_error;

constexpr std::size_t kOracleLimit = 2048;

smash_status to_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidArgument: return SMASH_E_INVALID_ARGUMENT;
    case ErrorCode::kDimensionMismatch: return SMASH_E_DIMENSION_MISMATCH;
    case ErrorCode::kOutOfBounds: return SMASH_E_OUT_OF_BOUNDS;
    case ErrorCode::kParse: return SMASH_E_PARSE;
    case ErrorCode::kIo: return SMASH_E_IO;
    case ErrorCode::kCapacity: return SMASH_E_CAPACITY;
    case ErrorCode::kWindowOverflow: return SMASH_E_WINDOW_OVERFLOW;
    case ErrorCode::kDeadlock: return SMASH_E_DEADLOCK;
    case ErrorCode::kUnmappedAddress: return SMASH_E_UNMAPPED_ADDRESS;
    case ErrorCode::kVerification: return SMASH_E_VERIFICATION;
  }
  return SMASH_E_INTERNAL;
}

smash_status set_error(smash_status s, std::string msg) {
  g_error = std::move(msg);
  return s;
}

template <class F>
smash_status guarded(F&& f) {
  try {
    g_error.clear();
    return f();
  } catch (const smash::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(SMASH_E_IO, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(SMASH_E_CAPACITY, "out of host memory");
  } catch (const std::exception& e) {
    return set_error(SMASH_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(SMASH_E_INTERNAL, "unknown exception");
  }
}

smash_status null_arg(const char* what) { return set_error(SMASH_E_INVALID_ARGUMENT, std::string(what) + " is NULL"); }

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

std::uint64_t fnv1a(const CsrMatrix& raw) {
  const CsrMatrix m = smash::canonicalize(raw);
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ p[i]) * 1099511628211ull;
  };
  const std::uint64_t dims[2] = {m.nrows, m.ncols};
  mix(dims, sizeof dims);
  mix(m.row_ptr.data(), m.row_ptr.size() * sizeof(smash::Offset));
  mix(m.col_idx.data(), m.col_idx.size() * sizeof(smash::Index));
  mix(m.values.data(), m.values.size() * sizeof(double));
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json describe(const CsrMatrix& m) {
  return {{"nrows", m.nrows}, {"ncols", m.ncols}, {"nnz", m.nnz()}, {"fingerprint", hex(fnv1a(m))}};
}

// Empty operands move nothing; report zero intensity instead of failing the run.
smash::IntensityReport intensity_of(const CsrMatrix& a, const CsrMatrix& b, std::uint64_t nnz_c, std::uint64_t flop) {
  if (a.nnz() + b.nnz() + nnz_c == 0) return smash::IntensityReport{};
  return smash::arithmetic_intensity(a.nnz(), b.nnz(), nnz_c, flop);
}

bool over_guard(const CsrMatrix& a, const CsrMatrix& b) {
  return a.nrows > kOracleLimit || a.ncols > kOracleLimit || b.ncols > kOracleLimit;
}

const char* const kKernelNames[] = {"v1", "v2", "v3", "inner", "outer", "rowwise", "colwise", "oracle"};

json probe_json(const smash_summary& s) {
  return {{"insertions", s.insertions},
          {"merges", s.merges},
          {"collisions", s.collisions},
          {"max_probe_length", s.max_probe_length}};
}

json summary_json(const smash_summary& s) {
  json j;
  j["simulated"] = bool(s.simulated);
  if (s.simulated) {
    j["cycles"] = s.cycles;
    j["mtc_instructions"] = s.instructions;
    j["aggregate_ipc"] = s.aggregate_ipc;
    j["bandwidth_utilization"] = s.bandwidth_utilization;
    j["cache_hit_rate"] = s.cache_hit_rate;
    j["dram_bytes"] = s.dram_bytes;
    j["windows"] = s.windows;
    j["replans"] = s.replans;
    j["utilization_mean"] = s.utilization_mean;
    j["utilization_stddev"] = s.utilization_stddev;
    j["probe"] = probe_json(s);
  }
  j["flops"] = s.flops;
  j["nnz_c"] = s.nnz_c;
  return j;
}

void run_simulated(smash_report& r, int version, const CsrMatrix& a, const CsrMatrix& b,
                   smash::sim::MachineConfig cfg, const smash_run_options& o, json& out) {
  if (o.interval) cfg.sample_interval = o.interval;
  smash::KernelReport k = smash::run_smash(version, a, b, cfg);
  const auto intensity = intensity_of(a, b, k.output.nnz(), k.flops);
  const double peak = k.machine.cost.dram_peak_bytes_per_cycle;
  const auto metrics = smash::run_metrics(k.trace, intensity, peak);
  const auto util = smash::utilization_stats(k.trace, std::max<std::uint64_t>(k.trace.sample_interval, 1),
                                             o.histogram_bins ? o.histogram_bins : 10);

  smash_summary& s = r.summary;
  s.simulated = 1;
  s.cycles = k.trace.total_cycles;
  s.instructions = k.trace.mtc_instructions;
  s.aggregate_ipc = metrics.ipc;
  s.bandwidth_utilization = metrics.bandwidth_utilization;
  s.cache_hit_rate = metrics.cache_hit_rate;
  s.dram_bytes = k.trace.dram_bytes_read + k.trace.dram_bytes_written;
  s.flops = k.flops;
  s.nnz_c = k.output.nnz();
  s.insertions = k.probe.insertions;
  s.merges = k.probe.merges;
  s.collisions = k.probe.collisions;
  s.max_probe_length = k.probe.max_probe_length;
  s.windows = k.windows;
  s.replans = k.replans;
  s.utilization_mean = util.mean;
  s.utilization_stddev = util.stddev;

  out["summary"] = summary_json(s);
  out["metrics"] = smash::run_metrics_to_json(metrics);
  out["utilization"] = smash::utilization_to_json(util);
  out["details"] = smash::kernel_report_to_json(k, false);
  r.metrics_csv = smash::run_metrics_csv_header() + smash::run_metrics_csv_row(metrics);
  r.histogram_csv = smash::histogram_csv(util);
  r.output = std::move(k.output);
}

void run_native(smash_report& r, smash_kernel kernel, const CsrMatrix& a, const CsrMatrix& b, json& out) {
  smash::DataflowStats st;
  switch (kernel) {
    case SMASH_KERNEL_INNER: std::tie(r.output, st) = smash::spgemm_inner(a, smash::csr_to_csc(b)); break;
    case SMASH_KERNEL_OUTER: std::tie(r.output, st) = smash::spgemm_outer(smash::csr_to_csc(a), b); break;
    case SMASH_KERNEL_ROWWISE: std::tie(r.output, st) = smash::spgemm_rowwise(a, b); break;
    case SMASH_KERNEL_COLWISE: {
      auto [c, s] = smash::spgemm_colwise(smash::csr_to_csc(a), smash::csr_to_csc(b));
      r.output = smash::csc_to_csr(c);
      st = s;
      break;
    }
    default: {
      r.output = smash::dense_multiply_oracle(a, b);
      for (const auto f : smash::symbolic_row_flops(a, b)) st.flops += f;
      st.output_writes = r.output.nnz();
      break;
    }
  }
  smash_summary& s = r.summary;
  s.simulated = 0;
  s.flops = st.flops;
  s.nnz_c = r.output.nnz();
  const auto intensity = intensity_of(a, b, r.output.nnz(), st.flops);
  out["summary"] = summary_json(s);
  out["dataflow"] = {{"input_a_element_reads", st.input_a_element_reads},
                     {"input_b_element_reads", st.input_b_element_reads},
                     {"intermediate_partials_peak", st.intermediate_partials_peak},
                     {"output_writes", st.output_writes},
                     {"flops", st.flops}};
  out["metrics"] = {{"intensity", smash::intensity_to_json(intensity)}};
  r.metrics_csv = "flop,nnz_a,nnz_b,nnz_c,cf,ai\n" + std::to_string(intensity.flop) + ',' +
                  std::to_string(intensity.nnz_a) + ',' + std::to_string(intensity.nnz_b) + ',' +
                  std::to_string(intensity.nnz_c) + ',' +
                  (intensity.cf ? json(*intensity.cf).dump() : std::string("undefined")) + ',' +
                  json(intensity.ai).dump() + '\n';
  r.histogram_csv = "bin_low,bin_high,count\n";
}

}  // namespace

extern "C" {

const char* smash_last_error(void) { return g_error.c_str(); }

const char* smash_status_name(smash_status s) {
  switch (s) {
    case SMASH_OK: return "ok";
    case SMASH_E_INVALID_ARGUMENT: return "invalid argument";
    case SMASH_E_DIMENSION_MISMATCH: return "dimension mismatch";
    case SMASH_E_OUT_OF_BOUNDS: return "out of bounds";
    case SMASH_E_PARSE: return "parse error";
    case SMASH_E_IO: return "i/o error";
    case SMASH_E_CAPACITY: return "capacity exceeded";
    case SMASH_E_WINDOW_OVERFLOW: return "window overflow";
    case SMASH_E_DEADLOCK: return "deadlock";
    case SMASH_E_UNMAPPED_ADDRESS: return "unmapped address";
    case SMASH_E_VERIFICATION: return "verification failed";
    case SMASH_E_SIZE_GUARD: return "size guard";
    case SMASH_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* smash_version(void) { return "1.0.0"; }

void smash_string_free(char* s) { std::free(s); }

void smash_rmat_defaults(smash_rmat_params* p) {
  if (!p) return;
  p->scale = smash::kHeadlineScale;
  p->edges = 0;
  p->target_nnz = smash::kHeadlineNnz;
  p->a = smash::kHeadlineSkew[0];
  p->b = smash::kHeadlineSkew[1];
  p->c = smash::kHeadlineSkew[2];
  p->d = smash::kHeadlineSkew[3];
  p->seed = 1;
}

smash_status smash_matrix_rmat(const smash_rmat_params* p, smash_matrix** out) {
  if (!p) return null_arg("params");
  if (!out) return null_arg("out");
  return guarded([&] {
    smash::RmatParams r;
    r.scale = p->scale;
    r.a = p->a;
    r.b = p->b;
    r.c = p->c;
    r.d = p->d;
    r.seed = p->seed;
    if (p->edges) {
      r.edges = p->edges;
    } else {
      if (p->target_nnz == 0)
        return set_error(SMASH_E_INVALID_ARGUMENT, "rmat: give an edge count or a target nnz");
      r.edges = smash::rmat_edges_for_nnz(r, p->target_nnz);
    }
    *out = new smash_matrix{smash::rmat_matrix(r)};
    return SMASH_OK;
  });
}

smash_status smash_matrix_load(const char* path, smash_matrix** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new smash_matrix{smash::load_matrix(path)};
    return SMASH_OK;
  });
}

smash_status smash_matrix_save(const smash_matrix* m, const char* path) {
  if (!m) return null_arg("matrix");
  if (!path) return null_arg("path");
  return guarded([&] {
    const std::filesystem::path p(path);
    if (p.extension() == ".smsh")
      smash::snapshot_write(p, m->m);
    else
      smash::mm_write(p, m->m);
    return SMASH_OK;
  });
}

smash_status smash_matrix_from_csr(uint64_t nrows, uint64_t ncols, const uint64_t* row_ptr, const uint32_t* col_idx,
                                   const double* values, smash_matrix** out) {
  if (!row_ptr) return null_arg("row_ptr");
  if (!out) return null_arg("out");
  return guarded([&] {
    CsrMatrix m;
    m.nrows = nrows;
    m.ncols = ncols;
    m.row_ptr.assign(row_ptr, row_ptr + nrows + 1);
    const std::uint64_t nnz = m.row_ptr.back();
    if (nnz && (!col_idx || !values)) return null_arg("col_idx/values");
    m.col_idx.assign(col_idx, col_idx + nnz);
    m.values.assign(values, values + nnz);
    m.sorted = true;
    for (std::uint64_t r = 0; r < nrows && m.sorted; ++r)
      for (auto p = m.row_ptr[r] + 1; p < m.row_ptr[r + 1]; ++p)
        if (m.col_idx[p - 1] >= m.col_idx[p]) {
          m.sorted = false;
          break;
        }
    m.validate();
    *out = new smash_matrix{std::move(m)};
    return SMASH_OK;
  });
}

smash_status smash_matrix_shape(const smash_matrix* m, uint64_t* nrows, uint64_t* ncols, uint64_t* nnz) {
  if (!m) return null_arg("matrix");
  if (nrows) *nrows = m->m.nrows;
  if (ncols) *ncols = m->m.ncols;
  if (nnz) *nnz = m->m.nnz();
  return SMASH_OK;
}

smash_status smash_matrix_fingerprint(const smash_matrix* m, uint64_t* out) {
  if (!m) return null_arg("matrix");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = fnv1a(m->m);
    return SMASH_OK;
  });
}

void smash_matrix_free(smash_matrix* m) { delete m; }

smash_status smash_machine_default(smash_machine** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new smash_machine{};
    return SMASH_OK;
  });
}

smash_status smash_machine_load(const char* path, smash_machine** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new smash_machine{smash::sim::load_machine_config(path)};
    return SMASH_OK;
  });
}

smash_status smash_machine_parse(const char* text, smash_machine** out) {
  if (!text) return null_arg("text");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new smash_machine{smash::sim::parse_machine_config(text)};
    return SMASH_OK;
  });
}

smash_status smash_machine_format(const smash_machine* m, char** out) {
  if (!m) return null_arg("machine");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = dup_string(smash::sim::format_machine_config(m->cfg));
    return SMASH_OK;
  });
}

void smash_machine_free(smash_machine* m) { delete m; }

smash_status smash_kernel_parse(const char* name, smash_kernel* out) {
  if (!name) return null_arg("name");
  if (!out) return null_arg("out");
  for (int k = 0; k < 8; ++k)
    if (std::strcmp(name, kKernelNames[k]) == 0) {
      *out = smash_kernel(k);
      return SMASH_OK;
    }
  return set_error(SMASH_E_INVALID_ARGUMENT, std::string("unknown kernel '") + name +
                                                 "' (expected v1, v2, v3, inner, outer, rowwise, colwise or oracle)");
}

const char* smash_kernel_name(smash_kernel k) {
  const int i = int(k);
  return i >= 0 && i < 8 ? kKernelNames[i] : "unknown";
}

int smash_kernel_simulated(smash_kernel k) { return k == SMASH_KERNEL_V1 || k == SMASH_KERNEL_V2 || k == SMASH_KERNEL_V3; }

void smash_run_options_defaults(smash_run_options* o) {
  if (!o) return;
  o->interval = 0;
  o->force = 0;
  o->histogram_bins = 10;
}

smash_status smash_run(smash_kernel kernel, const smash_matrix* a, const smash_matrix* b, const smash_machine* machine,
                       const smash_run_options* options, smash_report** out) {
  if (!a || !b) return null_arg("operand");
  if (!out) return null_arg("out");
  if (int(kernel) < 0 || int(kernel) > 7) return set_error(SMASH_E_INVALID_ARGUMENT, "unknown kernel");
  smash_run_options o;
  smash_run_options_defaults(&o);
  if (options) o = *options;
  return guarded([&] {
    const CsrMatrix& A = a->m;
    const CsrMatrix& B = b->m;
    if (A.ncols != B.nrows)
      return set_error(SMASH_E_DIMENSION_MISMATCH, "A is " + std::to_string(A.nrows) + "x" + std::to_string(A.ncols) +
                                                       " but B is " + std::to_string(B.nrows) + "x" +
                                                       std::to_string(B.ncols));
    if (kernel == SMASH_KERNEL_ORACLE && !o.force && over_guard(A, B))
      return set_error(SMASH_E_SIZE_GUARD, "dense oracle refused above 2048x2048; use --force to override");
    auto r = std::make_unique<smash_report>();
    r->kernel = kernel;
    json j;
    j["kernel"] = kKernelNames[int(kernel)];
    j["inputs"] = {{"a", describe(A)}, {"b", describe(B)}};
    if (smash_kernel_simulated(kernel))
      run_simulated(*r, int(kernel) + 1, A, B, machine ? machine->cfg : smash::sim::MachineConfig{}, o, j);
    else
      run_native(*r, kernel, A, B, j);
    j["output"] = describe(r->output);
    r->json = j.dump(2) + "\n";
    *out = r.release();
    return SMASH_OK;
  });
}

smash_status smash_verify(const smash_matrix* a, const smash_matrix* b, const smash_report* r, int force) {
  if (!a || !b) return null_arg("operand");
  if (!r) return null_arg("report");
  return guarded([&] {
    if (a->m.ncols != b->m.nrows) return set_error(SMASH_E_DIMENSION_MISMATCH, "operand shapes do not chain");
    if (!force && over_guard(a->m, b->m))
      return set_error(SMASH_E_SIZE_GUARD, "dense oracle refused above 2048x2048; use --force to override");
    const CsrMatrix expected = smash::dense_multiply_oracle(a->m, b->m);
    const auto mm = smash::compare_matrices(expected, r->output, 1e-9);
    if (mm.equal) return SMASH_OK;
    return set_error(SMASH_E_VERIFICATION, "first difference at (" + std::to_string(mm.row) + ", " +
                                               std::to_string(mm.col) + "): expected " + json(mm.expected).dump() +
                                               ", got " + json(mm.actual).dump() + " (" + mm.reason + ")");
  });
}

smash_status smash_report_summary(const smash_report* r, smash_summary* out) {
  if (!r) return null_arg("report");
  if (!out) return null_arg("out");
  *out = r->summary;
  return SMASH_OK;
}

smash_status smash_report_output(const smash_report* r, smash_matrix** out) {
  if (!r) return null_arg("report");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new smash_matrix{r->output};
    return SMASH_OK;
  });
}

smash_status smash_report_json(const smash_report* r, char** out) {
  if (!r) return null_arg("report");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = dup_string(r->json);
    return SMASH_OK;
  });
}

smash_status smash_report_metrics_csv(const smash_report* r, char** out) {
  if (!r) return null_arg("report");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = dup_string(r->metrics_csv);
    return SMASH_OK;
  });
}

smash_status smash_report_histogram_csv(const smash_report* r, char** out) {
  if (!r) return null_arg("report");
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = dup_string(r->histogram_csv);
    return SMASH_OK;
  });
}

void smash_report_free(smash_report* r) { delete r; }

}  // extern "C"
