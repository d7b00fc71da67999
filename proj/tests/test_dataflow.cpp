#include <doctest.h>

#include <numeric>

#include "smash/dataflow.hpp"
#include "smash/error.hpp"
#include "smash/rmat.hpp"
#include "test_util.hpp"

using namespace smash;
using smash::testing::from_rows;
using smash::testing::random_csr;

namespace {

const CsrMatrix kA = from_rows(2, 2, {1, 0, 0, 2});
const CsrMatrix kB = from_rows(2, 2, {0, 3, 4, 0});
const std::vector<double> kC{0, 3, 8, 0};

std::uint64_t total_flops(const CsrMatrix& a, const CsrMatrix& b) {
  const auto f = symbolic_row_flops(a, b);
  return std::accumulate(f.begin(), f.end(), std::uint64_t{0});
}

}  // namespace

TEST_CASE("inner product") {
  const auto [c, st] = spgemm_inner(kA, csr_to_csc(kB));
  CHECK(to_dense(c) == kC);
  CHECK(st.intermediate_partials_peak == 1);
  CHECK(st.flops == 2);

  const auto b = random_csr(10, 10, 0.3, 4);
  const auto [ib, ist] = spgemm_inner(CsrMatrix::identity(10), csr_to_csc(b));
  CHECK(compare_matrices(b, ib).equal);
  CHECK(ist.input_b_element_reads >= b.nnz());
  CHECK(ist.intermediate_partials_peak == 1);
}

TEST_CASE("outer product") {
  const auto [c, st] = spgemm_outer(csr_to_csc(kA), kB);
  CHECK(to_dense(c) == kC);
  CHECK(st.intermediate_partials_peak == 2);

  const auto d = CsrMatrix::identity(6);
  CHECK(spgemm_outer(csr_to_csc(d), d).second.intermediate_partials_peak == 6);

  const auto e = CsrMatrix::empty(4, 4);
  const auto [ce, se] = spgemm_outer(csr_to_csc(e), random_csr(4, 4, 0.5, 1));
  CHECK(ce.nnz() == 0);
  CHECK(se.intermediate_partials_peak == 0);
}

TEST_CASE("row-wise product") {
  const auto [c, st] = spgemm_rowwise(kA, kB);
  CHECK(to_dense(c) == kC);

  const auto a = from_rows(2, 2, {0, 0, 1, 1});
  const auto [c2, st2] = spgemm_rowwise(a, kB);
  CHECK(c2.row_nnz(0) == 0);

  const auto ra = random_csr(30, 20, 0.2, 8), rb = random_csr(20, 25, 0.2, 9);
  const auto [c3, st3] = spgemm_rowwise(ra, rb);
  CHECK(st3.flops == total_flops(ra, rb));
  std::size_t max_row = 0;
  for (std::size_t i = 0; i < c3.nrows; ++i) max_row = std::max(max_row, c3.row_nnz(i));
  CHECK(st3.intermediate_partials_peak <= max_row);
}

TEST_CASE("column-wise product") {
  const auto [c, st] = spgemm_colwise(csr_to_csc(kA), csr_to_csc(kB));
  CHECK(to_dense(c) == kC);

  // (AB)^T = B^T A^T
  const auto ra = random_csr(12, 15, 0.2, 21), rb = random_csr(9, 12, 0.2, 22);
  const auto [ct, stt] = spgemm_colwise(csr_to_csc(transpose(ra)), csr_to_csc(transpose(rb)));
  const auto [r, str] = spgemm_rowwise(rb, ra);
  (void)stt;
  (void)str;
  CHECK(compare_matrices(r, transpose(csc_to_csr(ct))).equal);

  const auto b = from_rows(2, 2, {1, 0, 1, 0});
  const auto [c2, st2] = spgemm_colwise(csr_to_csc(kA), csr_to_csc(b));
  CHECK(c2.col_nnz(1) == 0);
}

TEST_CASE("dimension mismatch is rejected by every dataflow") {
  const auto a = CsrMatrix::empty(2, 3), b = CsrMatrix::empty(2, 2);
  CHECK_THROWS_AS(spgemm_inner(a, csr_to_csc(b)), Error);
  CHECK_THROWS_AS(spgemm_outer(csr_to_csc(a), b), Error);
  CHECK_THROWS_AS(spgemm_rowwise(a, b), Error);
  CHECK_THROWS_AS(spgemm_colwise(csr_to_csc(a), csr_to_csc(b)), Error);
}

TEST_CASE("all dataflows agree with the oracle on random inputs") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t n = 8 + seed * 6;
    const double density = 0.001 + 0.099 * double(seed % 10) / 9.0;
    const auto a = random_csr(n, n, density, 100 + seed), b = random_csr(n, n, density, 200 + seed);
    const auto ref = dense_multiply_oracle(a, b);
    const auto flops = total_flops(a, b);
    const auto [ci, si] = spgemm_inner(a, csr_to_csc(b));
    const auto [co, so] = spgemm_outer(csr_to_csc(a), b);
    const auto [cr, sr] = spgemm_rowwise(a, b);
    const auto [cc, sc] = spgemm_colwise(csr_to_csc(a), csr_to_csc(b));
    CHECK(compare_matrices(ref, ci).equal);
    CHECK(compare_matrices(ref, co).equal);
    CHECK(compare_matrices(ref, cr).equal);
    CHECK(compare_matrices(ref, csc_to_csr(cc)).equal);
    CHECK(si.flops == flops);
    CHECK(so.flops == flops);
    CHECK(sr.flops == flops);
    CHECK(sc.flops == flops);
  }
}

TEST_CASE("counter ordering on a skewed input") {
  RmatParams p;
  p.scale = 8;
  p.edges = 2000;
  p.seed = 5;
  const auto a = rmat_matrix(p);
  p.seed = 6;
  const auto b = rmat_matrix(p);
  const auto si = spgemm_inner(a, csr_to_csc(b)).second;
  const auto so = spgemm_outer(csr_to_csc(a), b).second;
  const auto sr = spgemm_rowwise(a, b).second;
  CHECK(so.intermediate_partials_peak >= sr.intermediate_partials_peak);
  CHECK(so.intermediate_partials_peak >= si.intermediate_partials_peak);
  CHECK(si.input_a_element_reads + si.input_b_element_reads >= so.input_a_element_reads + so.input_b_element_reads);
}
