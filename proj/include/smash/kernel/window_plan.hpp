#pragma once

// Partition of the output rows into windows whose merged outputs fit the
// scratchpad hashtable, with per-row dense/sparse classification.

#include <cstdint>
#include <vector>

#include "smash/sparse.hpp"

namespace smash {

struct PlanConfig {
  std::uint64_t spad_bins = 131072;    // hashtable slots, power of two
  double occupancy_limit = 0.5;        // fraction of spad_bins a window may fill
  std::uint64_t dense_threshold = 0;   // rows with more flops are dense; 0 means ncols(B)
  std::uint64_t max_window_rows = 16384;
  std::uint64_t max_dense_rows = 16;   // per window, bounds the DRAM accumulators

  void validate() const;
};

enum class RowClass : std::uint8_t { kSparse, kDense };

struct Window {
  Index row_begin = 0;
  Index row_end = 0;
  std::uint64_t est_flops = 0;
  std::uint64_t est_outputs = 0;  // hashtable occupancy bound: sum of sparse-row upper bounds
  unsigned hash_shift = 0;
  std::vector<RowClass> row_class;

  std::size_t rows() const { return row_end - row_begin; }
  bool dense(Index row) const { return row_class[row - row_begin] == RowClass::kDense; }
  std::size_t dense_rows() const;
};

struct WindowPlan {
  std::vector<Window> windows;
  std::uint64_t dense_threshold = 0;
  std::uint64_t spad_bins = 0;
  unsigned hash_shift = 0;  // largest per-window shift
  std::uint64_t ncols = 0;
  std::uint64_t nrows = 0;
  PlanConfig config;
  std::vector<std::uint64_t> row_flops;

  // Window over [begin, end) using this plan's classification rules.
  Window make_window(Index begin, Index end) const;
  // Throws kInvalidArgument unless windows tile [0, nrows) and respect capacity.
  void validate() const;
};

WindowPlan plan_windows(const CsrMatrix& a, const CsrMatrix& b, const PlanConfig& config = {});

}  // namespace smash
