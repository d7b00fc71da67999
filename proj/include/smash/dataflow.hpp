#pragma once

// Single-threaded reference SpGEMM in the four classic loop orders. Each one
// counts element touches so the dataflows' reuse and buffering trade-offs can
// be compared on the same operands.

#include <cstdint>
#include <utility>

#include "smash/sparse.hpp"

namespace smash {

struct DataflowStats {
  std::uint64_t input_a_element_reads = 0;
  std::uint64_t input_b_element_reads = 0;
  // Largest number of simultaneously live partial products.
  std::uint64_t intermediate_partials_peak = 0;
  std::uint64_t output_writes = 0;
  std::uint64_t flops = 0;
};

// Dot products of A rows with B columns, matched by sorted index intersection.
// Only (i,j) pairs that share at least one k are visited.
std::pair<CsrMatrix, DataflowStats> spgemm_inner(const CsrMatrix& a, const CscMatrix& b);

// Sum of column-of-A times row-of-B outer products, all partials buffered
// before a single merge.
std::pair<CsrMatrix, DataflowStats> spgemm_outer(const CscMatrix& a, const CsrMatrix& b);

// Gustavson: C[i,:] = sum_k A[i,k] * B[k,:] with a per-row accumulator.
std::pair<CsrMatrix, DataflowStats> spgemm_rowwise(const CsrMatrix& a, const CsrMatrix& b);

// C[:,j] = sum_k A[:,k] * B[k,j] with a per-column accumulator.
std::pair<CscMatrix, DataflowStats> spgemm_colwise(const CscMatrix& a, const CscMatrix& b);

}  // namespace smash
