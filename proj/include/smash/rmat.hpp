#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "smash/sparse.hpp"

namespace smash {

struct RmatParams {
  unsigned scale = 10;  // matrix dimension is 2^scale
  std::uint64_t edges = 0;
  // Quadrant probabilities: a top-left, b top-right, c bottom-left, d bottom-right.
  double a = 0.57, b = 0.19, c = 0.19, d = 0.05;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t dimension() const { return std::size_t{1} << scale; }
};

// Recursive quadrant descent, one uniform draw per level from a seeded
// mt19937_64. Output order is the draw order; duplicates are kept.
std::vector<Triplet> rmat_generate(const RmatParams& p);

CsrMatrix rmat_matrix(const RmatParams& p);

// Smallest edge count whose deduplicated nnz reaches target_nnz. The generator
// emits a prefix-stable stream, so nnz is monotone in the edge count.
std::uint64_t rmat_edges_for_nnz(RmatParams p, std::uint64_t target_nnz);

// Quadrant skew used for the 16K x 16K evaluation workload. It reproduces the
// reported input/output sparsity (inputs ~99.9%, output ~98%).
inline constexpr std::array<double, 4> kHeadlineSkew{0.40, 0.17, 0.17, 0.26};
inline constexpr unsigned kHeadlineScale = 14;
inline constexpr std::uint64_t kHeadlineNnz = 254211;

}  // namespace smash
