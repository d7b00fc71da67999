#pragma once

#include <filesystem>
#include <vector>

#include "smash/sparse.hpp"

namespace smash {

struct CoordinateFile {
  std::size_t nrows = 0;
  std::size_t ncols = 0;
  std::vector<Triplet> triplets;  // 0-based
};

// MatrixMarket "coordinate real general" (pattern and integer fields are read as real).
CoordinateFile mm_read(const std::filesystem::path& path);
CsrMatrix mm_read_csr(const std::filesystem::path& path);
// Values are written with 17 significant digits so a read back is exact.
void mm_write(const std::filesystem::path& path, const CsrMatrix& m);

// Binary snapshot: "SMSH1", u64 nrows/ncols/nnz, u64 row_ptr[nrows+1],
// u32 col_idx[nnz], f64 values[nnz]; all little-endian.
void snapshot_write(const std::filesystem::path& path, const CsrMatrix& m);
CsrMatrix snapshot_read(const std::filesystem::path& path);

// Dispatches on extension: ".smsh" is a snapshot, anything else MatrixMarket.
CsrMatrix load_matrix(const std::filesystem::path& path);

}  // namespace smash
