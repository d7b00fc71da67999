#pragma once

// Compressed sparse storage, conversions, the dense verification oracle and
// the symbolic (FLOP counting) pass shared by every kernel.

#include <cstdint>
#include <span>
#include <vector>

namespace smash {

using Index = std::uint32_t;
using Offset = std::uint64_t;

struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0.0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct CsrMatrix {
  std::size_t nrows = 0;
  std::size_t ncols = 0;
  std::vector<Offset> row_ptr{0};
  std::vector<Index> col_idx;
  std::vector<double> values;
  // True when every row has strictly increasing column indices.
  bool sorted = true;

  std::size_t nnz() const { return col_idx.size(); }
  std::size_t row_nnz(std::size_t r) const { return row_ptr[r + 1] - row_ptr[r]; }

  static CsrMatrix empty(std::size_t nrows, std::size_t ncols);
  static CsrMatrix identity(std::size_t n);

  // Throws Error(kInvalidArgument) describing the first violated invariant.
  void validate() const;
  std::vector<Triplet> to_triplets() const;
};

struct CscMatrix {
  std::size_t nrows = 0;
  std::size_t ncols = 0;
  std::vector<Offset> col_ptr{0};
  std::vector<Index> row_idx;
  std::vector<double> values;
  bool sorted = true;

  std::size_t nnz() const { return row_idx.size(); }
  std::size_t col_nnz(std::size_t c) const { return col_ptr[c + 1] - col_ptr[c]; }

  void validate() const;
};

// Duplicates are summed, rows sorted by column. Zero sums are kept.
CsrMatrix csr_from_triplets(std::span<const Triplet> triplets, std::size_t nrows, std::size_t ncols);

CscMatrix csr_to_csc(const CsrMatrix& m);
CsrMatrix csc_to_csr(const CscMatrix& m);
CscMatrix transpose_to_csc(const CsrMatrix& m);  // CSR of M read as CSC of M^T
CsrMatrix transpose(const CsrMatrix& m);

// Sort every row by column and drop exact 0.0 values.
CsrMatrix canonicalize(const CsrMatrix& m);
CsrMatrix prune(const CsrMatrix& m);

std::vector<double> to_dense(const CsrMatrix& m);
std::vector<double> to_dense(const CscMatrix& m);
CsrMatrix from_dense(std::span<const double> dense, std::size_t nrows, std::size_t ncols);

// Exact dense triple loop; result is sorted and pruned.
CsrMatrix dense_multiply_oracle(const CsrMatrix& a, const CsrMatrix& b);

// result[i] = sum over nonzeros a[i,k] of nnz(B row k).
std::vector<std::uint64_t> symbolic_row_flops(const CsrMatrix& a, const CsrMatrix& b);

struct Mismatch {
  bool equal = true;
  std::size_t row = 0;
  std::size_t col = 0;
  double expected = 0.0;
  double actual = 0.0;
  const char* reason = "";
};

// Structural equality after canonicalization, values within rel_tol relative.
Mismatch compare_matrices(const CsrMatrix& expected, const CsrMatrix& actual, double rel_tol = 1e-9);

}  // namespace smash
