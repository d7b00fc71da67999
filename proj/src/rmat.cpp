#include "smash/rmat.hpp"

#include <cmath>
#include <random>
#include <string>

#include "smash/error.hpp"

namespace smash {

void RmatParams::validate() const {
  if (scale < 1 || scale > 31) fail(ErrorCode::kInvalidArgument, "rmat: scale must be in [1, 31]");
  if (a < 0 || b < 0 || c < 0 || d < 0) fail(ErrorCode::kInvalidArgument, "rmat: probabilities must be >= 0");
  if (std::abs(a + b + c + d - 1.0) > 1e-9) fail(ErrorCode::kInvalidArgument, "rmat: probabilities must sum to 1");
}

std::vector<Triplet> rmat_generate(const RmatParams& p) {
  p.validate();
  std::mt19937_64 rng(p.seed);
  // 53-bit uniform in [0,1), independent of the standard library's distributions.
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double ab = p.a + p.b, abc = p.a + p.b + p.c;
  std::vector<Triplet> out;
  out.reserve(p.edges);
  for (std::uint64_t e = 0; e < p.edges; ++e) {
    Index row = 0, col = 0;
    for (unsigned level = 0; level < p.scale; ++level) {
      const Index bit = Index{1} << (p.scale - 1 - level);
      const double u = uniform();
      if (u < p.a) {
      } else if (u < ab) {
        col |= bit;
      } else if (u < abc) {
        row |= bit;
      } else {
        row |= bit;
        col |= bit;
      }
    }
    out.push_back({row, col, 1.0});
  }
  return out;
}

CsrMatrix rmat_matrix(const RmatParams& p) {
  auto t = rmat_generate(p);
  return csr_from_triplets(t, p.dimension(), p.dimension());
}

std::uint64_t rmat_edges_for_nnz(RmatParams p, std::uint64_t target_nnz) {
  p.validate();
  const std::uint64_t cells = std::uint64_t{1} << (2 * p.scale);
  if (target_nnz > cells) fail(ErrorCode::kInvalidArgument, "rmat: target nnz exceeds matrix capacity");
  auto nnz_at = [&p](std::uint64_t edges) {
    p.edges = edges;
    return rmat_matrix(p).nnz();
  };
  std::uint64_t lo = target_nnz, hi = target_nnz;
  while (nnz_at(hi) < target_nnz) {
    lo = hi;
    hi *= 2;
  }
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (nnz_at(mid) >= target_nnz)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

}  // namespace smash
