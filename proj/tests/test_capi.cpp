#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "smash/smash.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  smash_string_free(s);
  return out;
}

// [[1 0] [0 2]] and [[0 3] [4 0]]
smash_matrix* small(bool left) {
  const uint64_t rp[] = {0, 1, 2};
  const uint32_t ci_l[] = {0, 1}, ci_r[] = {1, 0};
  const double v_l[] = {1, 2}, v_r[] = {3, 4};
  smash_matrix* m = nullptr;
  REQUIRE(smash_matrix_from_csr(2, 2, rp, left ? ci_l : ci_r, left ? v_l : v_r, &m) == SMASH_OK);
  return m;
}

smash_matrix* rmat(unsigned scale, uint64_t nnz, uint64_t seed) {
  smash_rmat_params p;
  smash_rmat_defaults(&p);
  p.scale = scale;
  p.target_nnz = nnz;
  p.seed = seed;
  smash_matrix* m = nullptr;
  REQUIRE(smash_matrix_rmat(&p, &m) == SMASH_OK);
  return m;
}

}  // namespace

TEST_CASE("defaults and names") {
  smash_rmat_params p;
  smash_rmat_defaults(&p);
  CHECK(p.scale == 14);
  CHECK(p.target_nnz == 254211);
  CHECK(p.a + p.b + p.c + p.d == doctest::Approx(1.0));
  CHECK(std::string(smash_status_name(SMASH_E_SIZE_GUARD)).size() > 0);
  CHECK(smash_version()[0] != '\0');

  smash_kernel k;
  CHECK(smash_kernel_parse("v3", &k) == SMASH_OK);
  CHECK(k == SMASH_KERNEL_V3);
  CHECK(std::string(smash_kernel_name(SMASH_KERNEL_COLWISE)) == "colwise");
  CHECK(smash_kernel_simulated(SMASH_KERNEL_V1));
  CHECK_FALSE(smash_kernel_simulated(SMASH_KERNEL_INNER));
  CHECK(smash_kernel_parse("v4", &k) == SMASH_E_INVALID_ARGUMENT);
  CHECK(std::string(smash_last_error()).find("v4") != std::string::npos);
}

TEST_CASE("null and malformed arguments") {
  smash_matrix* m = nullptr;
  CHECK(smash_matrix_rmat(nullptr, &m) == SMASH_E_INVALID_ARGUMENT);
  CHECK(smash_matrix_load("/nonexistent/x.mtx", &m) == SMASH_E_IO);
  const uint64_t rp[] = {0, 2, 1};
  const uint32_t ci[] = {0, 1};
  const double v[] = {1, 1};
  CHECK(smash_matrix_from_csr(2, 2, rp, ci, v, &m) == SMASH_E_INVALID_ARGUMENT);
  CHECK(m == nullptr);

  smash_machine* mc = nullptr;
  CHECK(smash_machine_parse("threads_per_mtc = banana\n", &mc) == SMASH_E_PARSE);
  smash_matrix_free(nullptr);
  smash_report_free(nullptr);
  smash_machine_free(nullptr);
}

TEST_CASE("every kernel multiplies the 2x2 example") {
  smash_matrix *a = small(true), *b = small(false);
  for (int k = SMASH_KERNEL_V1; k <= SMASH_KERNEL_ORACLE; ++k) {
    CAPTURE(k);
    smash_report* r = nullptr;
    REQUIRE(smash_run(smash_kernel(k), a, b, nullptr, nullptr, &r) == SMASH_OK);
    smash_summary s;
    REQUIRE(smash_report_summary(r, &s) == SMASH_OK);
    CHECK(s.nnz_c == 2);
    CHECK(s.flops == 2);
    CHECK(s.simulated == smash_kernel_simulated(smash_kernel(k)));
    if (s.simulated) {
      CHECK(s.cycles > 0);
      CHECK(s.aggregate_ipc > 0.0);
    }
    CHECK(smash_verify(a, b, r, 0) == SMASH_OK);

    smash_matrix* c = nullptr;
    REQUIRE(smash_report_output(r, &c) == SMASH_OK);
    uint64_t rows, cols, nnz;
    smash_matrix_shape(c, &rows, &cols, &nnz);
    CHECK(rows == 2);
    CHECK(nnz == 2);
    smash_matrix_free(c);
    smash_report_free(r);
  }
  smash_matrix_free(a);
  smash_matrix_free(b);
}

TEST_CASE("dimension mismatch and size guard") {
  smash_matrix* a = small(true);
  smash_matrix* tall = rmat(3, 10, 1);
  smash_report* r = nullptr;
  CHECK(smash_run(SMASH_KERNEL_V2, a, tall, nullptr, nullptr, &r) == SMASH_E_DIMENSION_MISMATCH);
  CHECK(r == nullptr);

  smash_matrix* big = rmat(12, 2000, 5);
  CHECK(smash_run(SMASH_KERNEL_ORACLE, big, big, nullptr, nullptr, &r) == SMASH_E_SIZE_GUARD);
  REQUIRE(smash_run(SMASH_KERNEL_ROWWISE, big, big, nullptr, nullptr, &r) == SMASH_OK);
  CHECK(smash_verify(big, big, r, 0) == SMASH_E_SIZE_GUARD);
  smash_report_free(r);
  smash_matrix_free(big);
  smash_matrix_free(tall);
  smash_matrix_free(a);
}

TEST_CASE("verification names the first differing entry") {
  smash_matrix *a = small(true), *b = small(false), *wrong = small(true);
  smash_report* r = nullptr;
  // A*A is [[1 0] [0 4]], not A*B.
  REQUIRE(smash_run(SMASH_KERNEL_INNER, a, wrong, nullptr, nullptr, &r) == SMASH_OK);
  CHECK(smash_verify(a, b, r, 0) == SMASH_E_VERIFICATION);
  CHECK(std::string(smash_last_error()).find("(0,") != std::string::npos);
  smash_report_free(r);
  smash_matrix_free(a);
  smash_matrix_free(b);
  smash_matrix_free(wrong);
}

TEST_CASE("report json, csv and machine overrides") {
  smash_matrix *a = rmat(8, 800, 2), *b = rmat(8, 800, 3);
  smash_machine* m = nullptr;
  REQUIRE(smash_machine_parse("spad_bytes = 1048576\n", &m) == SMASH_OK);
  const std::string text = [&] {
    char* s = nullptr;
    smash_machine_format(m, &s);
    return take(s);
  }();
  CHECK(text.find("spad_bytes") != std::string::npos);

  smash_run_options o;
  smash_run_options_defaults(&o);
  o.histogram_bins = 4;
  smash_report* r = nullptr;
  REQUIRE(smash_run(SMASH_KERNEL_V2, a, b, m, &o, &r) == SMASH_OK);

  char* s = nullptr;
  REQUIRE(smash_report_json(r, &s) == SMASH_OK);
  const auto j = nlohmann::json::parse(take(s));
  CHECK(j["kernel"] == "v2");
  CHECK(j["inputs"]["a"]["nrows"] == 256);
  CHECK(j.contains("metrics"));
  CHECK(j["utilization"]["histogram"].size() == 4);

  REQUIRE(smash_report_histogram_csv(r, &s) == SMASH_OK);
  const std::string hist = take(s);
  CHECK(hist.rfind("bin_low,bin_high,count\n", 0) == 0);
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 5);

  REQUIRE(smash_report_metrics_csv(r, &s) == SMASH_OK);
  CHECK(std::count(s, s + std::string(s).size(), '\n') == 2);
  smash_string_free(s);

  smash_report_free(r);
  smash_machine_free(m);
  smash_matrix_free(a);
  smash_matrix_free(b);
}

TEST_CASE("matrix save, load and fingerprint") {
  smash_matrix* a = rmat(7, 300, 9);
  uint64_t fa = 0, fb = 0;
  REQUIRE(smash_matrix_fingerprint(a, &fa) == SMASH_OK);
  for (const char* path : {"capi_roundtrip.smsh", "capi_roundtrip.mtx"}) {
    CAPTURE(path);
    REQUIRE(smash_matrix_save(a, path) == SMASH_OK);
    smash_matrix* b = nullptr;
    REQUIRE(smash_matrix_load(path, &b) == SMASH_OK);
    REQUIRE(smash_matrix_fingerprint(b, &fb) == SMASH_OK);
    CHECK(fa == fb);
    smash_matrix_free(b);
    std::remove(path);
  }
  smash_matrix_free(a);
}
