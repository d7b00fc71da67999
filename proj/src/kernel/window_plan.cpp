#include "smash/kernel/window_plan.hpp"

#include <algorithm>
#include <string>

#include "smash/error.hpp"
#include "smash/kernel/hashing.hpp"

namespace smash {

void PlanConfig::validate() const {
  if (!is_pow2(spad_bins)) fail(ErrorCode::kInvalidArgument, "plan: spad_bins must be a power of two");
  if (!(occupancy_limit > 0.0 && occupancy_limit <= 1.0))
    fail(ErrorCode::kInvalidArgument, "plan: occupancy_limit must be in (0, 1]");
  if (max_window_rows == 0) fail(ErrorCode::kInvalidArgument, "plan: max_window_rows must be positive");
}

std::size_t Window::dense_rows() const {
  return std::size_t(std::count(row_class.begin(), row_class.end(), RowClass::kDense));
}

namespace {

std::uint64_t limit_of(const PlanConfig& c) {
  return std::max<std::uint64_t>(1, std::uint64_t(c.occupancy_limit * double(c.spad_bins)));
}

}  // namespace

Window WindowPlan::make_window(Index begin, Index end) const {
  Window w;
  w.row_begin = begin;
  w.row_end = end;
  w.row_class.resize(end - begin, RowClass::kSparse);
  const std::uint64_t limit = limit_of(config);
  for (Index r = begin; r < end; ++r) {
    const std::uint64_t f = row_flops[r];
    const std::uint64_t ub = std::min<std::uint64_t>(f, ncols);
    w.est_flops += f;
    if (f > dense_threshold || ub > limit)
      w.row_class[r - begin] = RowClass::kDense;
    else
      w.est_outputs += ub;
  }
  w.hash_shift = shift_for(std::uint64_t(end - begin) * std::max<std::uint64_t>(ncols, 1), spad_bins);
  return w;
}

WindowPlan plan_windows(const CsrMatrix& a, const CsrMatrix& b, const PlanConfig& config) {
  config.validate();
  if (a.ncols != b.nrows)
    fail(ErrorCode::kDimensionMismatch, "plan: A is " + std::to_string(a.nrows) + "x" + std::to_string(a.ncols) +
                                            ", B is " + std::to_string(b.nrows) + "x" + std::to_string(b.ncols));
  WindowPlan p;
  p.config = config;
  p.spad_bins = config.spad_bins;
  p.ncols = b.ncols;
  p.nrows = a.nrows;
  p.dense_threshold = config.dense_threshold ? config.dense_threshold : std::max<std::uint64_t>(b.ncols, 1);
  p.row_flops = symbolic_row_flops(a, b);

  const std::uint64_t limit = limit_of(config);
  Index begin = 0;
  std::uint64_t occupancy = 0, dense = 0;
  auto close = [&](Index end) {
    p.windows.push_back(p.make_window(begin, end));
    begin = end;
    occupancy = dense = 0;
  };
  for (Index r = 0; r < a.nrows; ++r) {
    const std::uint64_t f = p.row_flops[r];
    const std::uint64_t ub = std::min<std::uint64_t>(f, p.ncols);
    const bool is_dense = f > p.dense_threshold || ub > limit;
    const std::uint64_t add = is_dense ? 0 : ub;
    const bool full = occupancy + add > limit || r - begin >= config.max_window_rows ||
                      (is_dense && dense >= config.max_dense_rows);
    if (r > begin && full) close(r);
    occupancy += add;
    dense += is_dense;
  }
  close(Index(a.nrows));
  for (const auto& w : p.windows) p.hash_shift = std::max(p.hash_shift, w.hash_shift);
  return p;
}

void WindowPlan::validate() const {
  Index next = 0;
  for (const auto& w : windows) {
    if (w.row_begin != next || w.row_end < w.row_begin)
      fail(ErrorCode::kInvalidArgument, "plan: windows do not tile the rows at row " + std::to_string(next));
    if (w.est_outputs > spad_bins) fail(ErrorCode::kInvalidArgument, "plan: window exceeds hashtable capacity");
    if (w.row_class.size() != w.rows()) fail(ErrorCode::kInvalidArgument, "plan: row classes do not match window");
    next = w.row_end;
  }
  if (next != nrows) fail(ErrorCode::kInvalidArgument, "plan: windows do not cover every row");
}

}  // namespace smash
