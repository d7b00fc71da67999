// Command-line front end over the C interface.
//
// Exit codes: 0 success, 1 verification or run failure, 2 usage error,
// 3 I/O error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smash/smash.h"

namespace {

using json = nlohmann::json;

enum Exit { kOk = 0, kFailed = 1, kUsage = 2, kIo = 3 };

struct CliError {
  int code;
  std::string message;
};

int exit_for(smash_status s) {
  switch (s) {
    case SMASH_OK: return kOk;
    case SMASH_E_INVALID_ARGUMENT:
    case SMASH_E_DIMENSION_MISMATCH:
    case SMASH_E_SIZE_GUARD: return kUsage;
    case SMASH_E_IO:
    case SMASH_E_PARSE: return kIo;
    default: return kFailed;
  }
}

void check(smash_status s, const std::string& context) {
  if (s != SMASH_OK) throw CliError{exit_for(s), context + ": " + smash_status_name(s) + ": " + smash_last_error()};
}

struct MatrixDeleter {
  void operator()(smash_matrix* m) const { smash_matrix_free(m); }
};
struct MachineDeleter {
  void operator()(smash_machine* m) const { smash_machine_free(m); }
};
struct ReportDeleter {
  void operator()(smash_report* r) const { smash_report_free(r); }
};
using Matrix = std::unique_ptr<smash_matrix, MatrixDeleter>;
using MachinePtr = std::unique_ptr<smash_machine, MachineDeleter>;
using Report = std::unique_ptr<smash_report, ReportDeleter>;

std::string take_string(char* s) {
  std::string out(s ? s : "");
  smash_string_free(s);
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CliError{kIo, "cannot open '" + path + "' for writing"};
  f << text;
  if (!f) throw CliError{kIo, "failed writing '" + path + "'"};
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CliError{kIo, "cannot read '" + path + "'"};
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// Strips the extension of `path` and appends `suffix`.
std::string sibling(const std::string& path, const std::string& suffix) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? path.substr(0, dot) : path) + suffix;
}

std::string fmt(double v) { return json(v).dump(); }

// Generator flags shared by gen, run and compare.
struct GenOptions {
  unsigned scale = 14;
  std::uint64_t edges = 0;
  std::uint64_t target_nnz = 0;
  std::vector<double> probs;
  std::uint64_t seed = 1;

  void add(CLI::App* cmd) {
    cmd->add_option("--scale", scale, "R-MAT scale; dimension is 2^scale")->capture_default_str();
    cmd->add_option("--edges", edges, "generated edges (duplicates are merged)");
    cmd->add_option("--target-nnz", target_nnz, "pick the edge count reaching this many nonzeros");
    cmd->add_option("--probs", probs, "quadrant probabilities a,b,c,d")->delimiter(',')->expected(4);
    cmd->add_option("--seed", seed, "generator seed")->capture_default_str();
  }

  smash_rmat_params params(std::uint64_t with_seed) const {
    smash_rmat_params p;
    smash_rmat_defaults(&p);
    p.scale = scale;
    p.seed = with_seed;
    p.edges = edges;
    if (target_nnz) p.target_nnz = target_nnz;
    if (!probs.empty()) {
      p.a = probs[0];
      p.b = probs[1];
      p.c = probs[2];
      p.d = probs[3];
    }
    return p;
  }
};

Matrix generate(const smash_rmat_params& p) {
  smash_matrix* m = nullptr;
  check(smash_matrix_rmat(&p, &m), "generate");
  return Matrix(m);
}

Matrix load(const std::string& path) {
  smash_matrix* m = nullptr;
  check(smash_matrix_load(path.c_str(), &m), "load " + path);
  return Matrix(m);
}

// Operands: a file when given, otherwise R-MAT with seeds 2*seed and 2*seed+1.
struct Inputs {
  std::string a_path, b_path;
  GenOptions gen;

  void add(CLI::App* cmd) {
    cmd->add_option("--a", a_path, "left operand (MatrixMarket or .smsh)");
    cmd->add_option("--b", b_path, "right operand (MatrixMarket or .smsh)");
    gen.add(cmd);
  }

  std::pair<Matrix, Matrix> materialize() const {
    Matrix a = a_path.empty() ? generate(gen.params(2 * gen.seed)) : load(a_path);
    Matrix b = b_path.empty() ? generate(gen.params(2 * gen.seed + 1)) : load(b_path);
    return {std::move(a), std::move(b)};
  }
};

MachinePtr machine_from(const std::string& path) {
  smash_machine* m = nullptr;
  if (path.empty())
    check(smash_machine_default(&m), "machine");
  else
    check(smash_machine_load(path.c_str(), &m), "machine config " + path);
  return MachinePtr(m);
}

smash_kernel parse_kernel(const std::string& name) {
  smash_kernel k;
  if (smash_kernel_parse(name.c_str(), &k) != SMASH_OK) throw CliError{kUsage, smash_last_error()};
  return k;
}

struct RunSettings {
  std::string machine_config;
  std::uint64_t interval = 0;
  std::uint32_t bins = 10;
  bool force = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--machine-config", machine_config, "machine description, key=value lines");
    cmd->add_option("--interval", interval, "utilization sampling interval in cycles");
    cmd->add_option("--bins", bins, "utilization histogram bins")->capture_default_str();
    cmd->add_flag("--force", force, "allow the dense oracle on operands above 2048x2048");
  }

  smash_run_options options() const {
    smash_run_options o;
    smash_run_options_defaults(&o);
    o.interval = interval;
    o.force = force ? 1 : 0;
    o.histogram_bins = bins;
    return o;
  }
};

Report run_one(smash_kernel k, const Matrix& a, const Matrix& b, const smash_machine* machine,
               const RunSettings& settings) {
  smash_report* r = nullptr;
  const auto o = settings.options();
  check(smash_run(k, a.get(), b.get(), machine, &o, &r), std::string("run ") + smash_kernel_name(k));
  return Report(r);
}

json report_json(const smash_report* r) {
  char* s = nullptr;
  check(smash_report_json(r, &s), "report");
  return json::parse(take_string(s));
}

// ---- gen ----

int cmd_gen(const GenOptions& g, const std::string& out) {
  if (g.edges == 0 && g.target_nnz == 0) throw CliError{kUsage, "gen: give --edges or --target-nnz"};
  const Matrix m = generate(g.params(g.seed));
  check(smash_matrix_save(m.get(), out.c_str()), "write " + out);
  std::uint64_t rows = 0, cols = 0, nnz = 0;
  smash_matrix_shape(m.get(), &rows, &cols, &nnz);
  const double sparsity = 1.0 - double(nnz) / (double(rows) * double(cols));
  std::printf("%s: %llux%llu nnz=%llu sparsity=%.4f%%\n", out.c_str(), (unsigned long long)rows,
              (unsigned long long)cols, (unsigned long long)nnz, 100.0 * sparsity);
  return kOk;
}

// ---- run ----

void print_summary(const std::string& kernel, const json& s) {
  std::printf("kernel %s\n", kernel.c_str());
  if (s.value("simulated", false)) {
    std::printf("  cycles                 %llu\n", (unsigned long long)s["cycles"].get<std::uint64_t>());
    std::printf("  aggregate IPC          %.4f\n", s["aggregate_ipc"].get<double>());
    std::printf("  bandwidth utilization  %.4f\n", s["bandwidth_utilization"].get<double>());
    std::printf("  cache hit rate         %.4f\n", s["cache_hit_rate"].get<double>());
    std::printf("  utilization mean/std   %.4f / %.4f\n", s["utilization_mean"].get<double>(),
                s["utilization_stddev"].get<double>());
    const auto& p = s["probe"];
    std::printf("  probe                  insertions=%llu merges=%llu collisions=%llu max=%llu\n",
                (unsigned long long)p["insertions"].get<std::uint64_t>(),
                (unsigned long long)p["merges"].get<std::uint64_t>(),
                (unsigned long long)p["collisions"].get<std::uint64_t>(),
                (unsigned long long)p["max_probe_length"].get<std::uint64_t>());
    std::printf("  windows / replans      %llu / %llu\n", (unsigned long long)s["windows"].get<std::uint64_t>(),
                (unsigned long long)s["replans"].get<std::uint64_t>());
  }
  std::printf("  flops                  %llu\n", (unsigned long long)s["flops"].get<std::uint64_t>());
  std::printf("  nnz(C)                 %llu\n", (unsigned long long)s["nnz_c"].get<std::uint64_t>());
}

struct RunArgs {
  std::string kernel;
  Inputs inputs;
  RunSettings settings;
  std::string out, report, metrics, histogram;
  bool verify = false;
};

int cmd_run(const RunArgs& args) {
  const smash_kernel k = parse_kernel(args.kernel);
  const auto [a, b] = args.inputs.materialize();
  const MachinePtr machine = machine_from(args.settings.machine_config);
  const Report r = run_one(k, a, b, machine.get(), args.settings);

  const json j = report_json(r.get());
  print_summary(args.kernel, j["summary"]);

  if (!args.report.empty()) {
    write_file(args.report, j.dump(2) + "\n");
    char* csv = nullptr;
    check(smash_report_metrics_csv(r.get(), &csv), "metrics");
    write_file(args.metrics.empty() ? sibling(args.report, ".metrics.csv") : args.metrics, take_string(csv));
    check(smash_report_histogram_csv(r.get(), &csv), "histogram");
    write_file(args.histogram.empty() ? sibling(args.report, ".hist.csv") : args.histogram, take_string(csv));
  }
  if (!args.out.empty()) {
    smash_matrix* c = nullptr;
    check(smash_report_output(r.get(), &c), "output");
    const Matrix cm(c);
    check(smash_matrix_save(cm.get(), args.out.c_str()), "write " + args.out);
  }
  if (args.verify) {
    const smash_status s = smash_verify(a.get(), b.get(), r.get(), args.settings.force ? 1 : 0);
    if (s == SMASH_E_SIZE_GUARD) throw CliError{kUsage, std::string("verify: ") + smash_last_error()};
    if (s == SMASH_E_VERIFICATION) {
      std::fprintf(stderr, "verification FAILED: %s\n", smash_last_error());
      return kFailed;
    }
    check(s, "verify");
    std::printf("verification passed\n");
  }
  return kOk;
}

// ---- compare / report ----

struct Row {
  std::string kernel;
  json summary;
  json inputs;
};

Row row_from(const json& j) {
  if (!j.contains("summary") || !j.contains("kernel") || !j.contains("inputs"))
    throw CliError{kUsage, "not a kernel report (missing kernel/summary/inputs)"};
  return {j["kernel"].get<std::string>(), j["summary"], j["inputs"]};
}

const char* kTableHeader =
    "kernel,cycles,speedup,aggregate_ipc,bandwidth_utilization,cache_hit_rate,insertions,merges,collisions,"
    "max_probe_length,flops,nnz_c\n";

std::string table_row(const Row& r, const std::optional<double>& speedup) {
  const json& s = r.summary;
  std::ostringstream os;
  os << r.kernel << ',';
  if (s.value("simulated", false)) {
    const auto& p = s["probe"];
    os << s["cycles"].get<std::uint64_t>() << ',' << (speedup ? fmt(*speedup) : "") << ','
       << fmt(s["aggregate_ipc"].get<double>()) << ',' << fmt(s["bandwidth_utilization"].get<double>()) << ','
       << fmt(s["cache_hit_rate"].get<double>()) << ',' << p["insertions"].get<std::uint64_t>() << ','
       << p["merges"].get<std::uint64_t>() << ',' << p["collisions"].get<std::uint64_t>() << ','
       << p["max_probe_length"].get<std::uint64_t>() << ',';
  } else {
    os << ",,,,,,,,,";
  }
  os << s["flops"].get<std::uint64_t>() << ',' << s["nnz_c"].get<std::uint64_t>() << '\n';
  return os.str();
}

int emit_comparison(const std::vector<Row>& rows, const std::string& csv_path, const std::string& json_path) {
  if (rows.size() < 2) throw CliError{kUsage, "compare: need >= 2 runs"};
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].inputs != rows[0].inputs)
      throw CliError{kUsage, "compare: mismatched inputs between '" + rows[0].kernel + "' and '" + rows[i].kernel + "'"};

  const bool base_sim = rows[0].summary.value("simulated", false);
  std::string csv = kTableHeader;
  json out;
  out["inputs"] = rows[0].inputs;
  out["baseline"] = rows[0].kernel;
  auto& runs = out["runs"] = json::array();
  std::printf("%-8s %14s %8s %8s %8s %8s\n", "kernel", "cycles", "speedup", "IPC", "BW", "hit");
  for (const Row& r : rows) {
    std::optional<double> speedup;
    const bool sim = r.summary.value("simulated", false);
    if (sim && base_sim && r.summary["cycles"].get<std::uint64_t>() > 0)
      speedup = double(rows[0].summary["cycles"].get<std::uint64_t>()) /
                double(r.summary["cycles"].get<std::uint64_t>());
    csv += table_row(r, speedup);
    json e = {{"kernel", r.kernel}, {"summary", r.summary}};
    e["speedup"] = speedup ? json(*speedup) : json(nullptr);
    runs.push_back(e);
    if (sim)
      std::printf("%-8s %14llu %8s %8.3f %8.3f %8.3f\n", r.kernel.c_str(),
                  (unsigned long long)r.summary["cycles"].get<std::uint64_t>(),
                  speedup ? (fmt(*speedup).substr(0, 6) + "x").c_str() : "-", r.summary["aggregate_ipc"].get<double>(),
                  r.summary["bandwidth_utilization"].get<double>(), r.summary["cache_hit_rate"].get<double>());
    else
      std::printf("%-8s %14s %8s %8s %8s %8s\n", r.kernel.c_str(), "native", "-", "-", "-", "-");
  }
  if (!csv_path.empty()) write_file(csv_path, csv);
  if (!json_path.empty()) write_file(json_path, out.dump(2) + "\n");
  return kOk;
}

struct CompareArgs {
  std::vector<std::string> kernels;
  std::vector<std::string> from;
  Inputs inputs;
  RunSettings settings;
  std::string out, report;
};

int cmd_compare(const CompareArgs& args) {
  if (!args.from.empty() && !args.kernels.empty())
    throw CliError{kUsage, "compare: use either --kernel or --from, not both"};
  std::vector<Row> rows;
  if (!args.from.empty()) {
    for (const auto& path : args.from) {
      json j;
      try {
        j = json::parse(read_file(path));
      } catch (const json::exception& e) {
        throw CliError{kIo, "compare: " + path + ": " + e.what()};
      }
      rows.push_back(row_from(j));
    }
  } else {
    if (args.kernels.size() < 2) throw CliError{kUsage, "compare: need >= 2 runs"};
    std::vector<smash_kernel> ks;
    for (const auto& k : args.kernels) ks.push_back(parse_kernel(k));
    const auto [a, b] = args.inputs.materialize();
    const MachinePtr machine = machine_from(args.settings.machine_config);
    for (const smash_kernel k : ks) {
      const Report r = run_one(k, a, b, machine.get(), args.settings);
      rows.push_back(row_from(report_json(r.get())));
    }
  }
  return emit_comparison(rows, args.out, args.report);
}

int cmd_report(const std::vector<std::string>& files, const std::string& out) {
  std::string csv = kTableHeader;
  for (const auto& path : files) {
    json j;
    try {
      j = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw CliError{kIo, "report: " + path + ": " + e.what()};
    }
    const Row r = row_from(j);
    print_summary(r.kernel, r.summary);
    csv += table_row(r, std::nullopt);
  }
  if (!out.empty()) write_file(out, csv);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scratchpad-hashing SpGEMM simulator and benchmark harness"};
  app.require_subcommand(1);

  GenOptions gen;
  std::string gen_out;
  auto* g = app.add_subcommand("gen", "generate an R-MAT matrix");
  gen.add(g);
  g->add_option("--out", gen_out, "output path (.mtx or .smsh)")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "run one kernel");
  r->add_option("--kernel", run.kernel, "v1|v2|v3|inner|outer|rowwise|colwise|oracle")->required();
  run.inputs.add(r);
  run.settings.add(r);
  r->add_option("--out", run.out, "write the product matrix");
  r->add_option("--report", run.report, "write the JSON report (plus .metrics.csv and .hist.csv siblings)");
  r->add_option("--metrics", run.metrics, "metrics CSV path");
  r->add_option("--histogram", run.histogram, "utilization histogram CSV path");
  r->add_flag("--verify", run.verify, "check the product against the dense oracle");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "run or load several kernels on the same inputs and tabulate");
  c->add_option("--kernel", cmp.kernels, "kernels, comma separated; the first is the speedup baseline")
      ->delimiter(',');
  c->add_option("--from", cmp.from, "existing JSON reports instead of running");
  cmp.inputs.add(c);
  cmp.settings.add(c);
  c->add_option("--out", cmp.out, "comparison CSV");
  c->add_option("--report", cmp.report, "comparison JSON");

  std::vector<std::string> report_files;
  std::string report_out;
  auto* rep = app.add_subcommand("report", "summarize JSON reports");
  rep->add_option("reports", report_files, "report files")->required();
  rep->add_option("--out", report_out, "summary CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen, gen_out);
    if (r->parsed()) return cmd_run(run);
    if (c->parsed()) return cmd_compare(cmp);
    return cmd_report(report_files, report_out);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailed;
  }
}
