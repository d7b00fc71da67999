#include "smash/dataflow.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "smash/error.hpp"

namespace smash {

namespace {

void check_inner_dims(std::size_t a_cols, std::size_t b_rows, const char* who) {
  if (a_cols != b_rows)
    fail(ErrorCode::kDimensionMismatch, std::string(who) + ": a.ncols=" + std::to_string(a_cols) +
                                            " != b.nrows=" + std::to_string(b_rows));
}

// Sparse accumulator for one output row (or column). Keeps insertion order of
// first touches so emission can be sorted once per row.
class SparseAccumulator {
 public:
  explicit SparseAccumulator(std::size_t width) : values_(width, 0.0), live_(width, false) {}

  void add(Index j, double v) {
    if (!live_[j]) {
      live_[j] = true;
      touched_.push_back(j);
    }
    values_[j] += v;
  }

  std::size_t size() const { return touched_.size(); }

  template <typename Emit>
  void drain(Emit&& emit) {
    std::sort(touched_.begin(), touched_.end());
    for (Index j : touched_) {
      emit(j, values_[j]);
      values_[j] = 0.0;
      live_[j] = false;
    }
    touched_.clear();
  }

 private:
  std::vector<double> values_;
  std::vector<bool> live_;
  std::vector<Index> touched_;
};

}  // namespace

std::pair<CsrMatrix, DataflowStats> spgemm_inner(const CsrMatrix& a, const CscMatrix& b) {
  check_inner_dims(a.ncols, b.nrows, "spgemm_inner");
  DataflowStats st;
  // Pattern of B by rows, used only to enumerate candidate (i,j) pairs.
  std::vector<Offset> brow_ptr(b.nrows + 1, 0);
  for (Index r : b.row_idx) ++brow_ptr[r + 1];
  for (std::size_t r = 0; r < b.nrows; ++r) brow_ptr[r + 1] += brow_ptr[r];
  std::vector<Index> brow_cols(b.nnz());
  {
    std::vector<Offset> cursor(brow_ptr.begin(), brow_ptr.end() - 1);
    for (std::size_t c = 0; c < b.ncols; ++c)
      for (Offset p = b.col_ptr[c]; p < b.col_ptr[c + 1]; ++p) brow_cols[cursor[b.row_idx[p]]++] = Index(c);
  }

  CsrMatrix c = CsrMatrix::empty(a.nrows, b.ncols);
  std::vector<bool> mark(b.ncols, false);
  std::vector<Index> candidates;
  for (std::size_t i = 0; i < a.nrows; ++i) {
    candidates.clear();
    for (Offset p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      const Index k = a.col_idx[p];
      for (Offset q = brow_ptr[k]; q < brow_ptr[k + 1]; ++q) {
        if (!mark[brow_cols[q]]) {
          mark[brow_cols[q]] = true;
          candidates.push_back(brow_cols[q]);
        }
      }
    }
    std::sort(candidates.begin(), candidates.end());
    for (Index j : candidates) {
      mark[j] = false;
      Offset pa = a.row_ptr[i], ea = a.row_ptr[i + 1];
      Offset pb = b.col_ptr[j], eb = b.col_ptr[j + 1];
      double dot = 0.0;
      bool hit = false;
      if (pa < ea) ++st.input_a_element_reads;
      if (pb < eb) ++st.input_b_element_reads;
      while (pa < ea && pb < eb) {
        const Index ka = a.col_idx[pa], kb = b.row_idx[pb];
        if (ka == kb) {
          dot += a.values[pa] * b.values[pb];
          ++st.flops;
          hit = true;
          if (++pa < ea) ++st.input_a_element_reads;
          if (++pb < eb) ++st.input_b_element_reads;
        } else if (ka < kb) {
          if (++pa < ea) ++st.input_a_element_reads;
        } else {
          if (++pb < eb) ++st.input_b_element_reads;
        }
      }
      if (hit) {
        st.intermediate_partials_peak = 1;
        c.col_idx.push_back(j);
        c.values.push_back(dot);
        ++st.output_writes;
      }
    }
    c.row_ptr[i + 1] = c.col_idx.size();
  }
  return {std::move(c), st};
}

std::pair<CsrMatrix, DataflowStats> spgemm_outer(const CscMatrix& a, const CsrMatrix& b) {
  check_inner_dims(a.ncols, b.nrows, "spgemm_outer");
  DataflowStats st;
  std::vector<Triplet> partials;
  for (std::size_t n = 0; n < a.ncols; ++n) {
    const std::size_t acount = a.col_nnz(n), bcount = b.row_nnz(n);
    if (acount == 0 || bcount == 0) continue;
    st.input_a_element_reads += acount;
    st.input_b_element_reads += bcount;
    for (Offset p = a.col_ptr[n]; p < a.col_ptr[n + 1]; ++p) {
      for (Offset q = b.row_ptr[n]; q < b.row_ptr[n + 1]; ++q) {
        partials.push_back({a.row_idx[p], b.col_idx[q], a.values[p] * b.values[q]});
        ++st.flops;
      }
    }
  }
  st.intermediate_partials_peak = partials.size();
  CsrMatrix c = csr_from_triplets(partials, a.nrows, b.ncols);
  st.output_writes = c.nnz();
  return {std::move(c), st};
}

std::pair<CsrMatrix, DataflowStats> spgemm_rowwise(const CsrMatrix& a, const CsrMatrix& b) {
  check_inner_dims(a.ncols, b.nrows, "spgemm_rowwise");
  DataflowStats st;
  CsrMatrix c = CsrMatrix::empty(a.nrows, b.ncols);
  SparseAccumulator acc(b.ncols);
  for (std::size_t i = 0; i < a.nrows; ++i) {
    for (Offset p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      ++st.input_a_element_reads;
      const Index k = a.col_idx[p];
      const double av = a.values[p];
      for (Offset q = b.row_ptr[k]; q < b.row_ptr[k + 1]; ++q) {
        ++st.input_b_element_reads;
        acc.add(b.col_idx[q], av * b.values[q]);
        ++st.flops;
      }
    }
    st.intermediate_partials_peak = std::max<std::uint64_t>(st.intermediate_partials_peak, acc.size());
    acc.drain([&](Index j, double v) {
      c.col_idx.push_back(j);
      c.values.push_back(v);
      ++st.output_writes;
    });
    c.row_ptr[i + 1] = c.col_idx.size();
  }
  return {std::move(c), st};
}

std::pair<CscMatrix, DataflowStats> spgemm_colwise(const CscMatrix& a, const CscMatrix& b) {
  check_inner_dims(a.ncols, b.nrows, "spgemm_colwise");
  DataflowStats st;
  CscMatrix c;
  c.nrows = a.nrows;
  c.ncols = b.ncols;
  c.col_ptr.assign(b.ncols + 1, 0);
  SparseAccumulator acc(a.nrows);
  for (std::size_t j = 0; j < b.ncols; ++j) {
    for (Offset q = b.col_ptr[j]; q < b.col_ptr[j + 1]; ++q) {
      ++st.input_b_element_reads;
      const Index k = b.row_idx[q];
      const double bv = b.values[q];
      for (Offset p = a.col_ptr[k]; p < a.col_ptr[k + 1]; ++p) {
        ++st.input_a_element_reads;
        acc.add(a.row_idx[p], a.values[p] * bv);
        ++st.flops;
      }
    }
    st.intermediate_partials_peak = std::max<std::uint64_t>(st.intermediate_partials_peak, acc.size());
    acc.drain([&](Index i, double v) {
      c.row_idx.push_back(i);
      c.values.push_back(v);
      ++st.output_writes;
    });
    c.col_ptr[j + 1] = c.row_idx.size();
  }
  return {std::move(c), st};
}

}  // namespace smash
