#include "smash/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "smash/error.hpp"

namespace smash {

CsrMatrix CsrMatrix::empty(std::size_t nrows, std::size_t ncols) {
  CsrMatrix m;
  m.nrows = nrows;
  m.ncols = ncols;
  m.row_ptr.assign(nrows + 1, 0);
  return m;
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  CsrMatrix m = empty(n, n);
  m.col_idx.resize(n);
  m.values.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.row_ptr[i + 1] = i + 1;
    m.col_idx[i] = static_cast<Index>(i);
  }
  return m;
}

namespace {

void validate_compressed(std::size_t outer, std::size_t inner, const std::vector<Offset>& ptr,
                         const std::vector<Index>& idx, const std::vector<double>& values, bool sorted,
                         const char* what) {
  auto bad = [what](const std::string& msg) { fail(ErrorCode::kInvalidArgument, std::string(what) + ": " + msg); };
  if (ptr.size() != outer + 1) bad("pointer array has wrong length");
  if (ptr.front() != 0) bad("pointer array must start at 0");
  if (ptr.back() != idx.size()) bad("pointer array must end at nnz");
  if (idx.size() != values.size()) bad("index and value arrays differ in length");
  for (std::size_t o = 0; o < outer; ++o) {
    if (ptr[o + 1] < ptr[o]) bad("pointer array decreases at " + std::to_string(o));
    for (Offset p = ptr[o]; p < ptr[o + 1]; ++p) {
      if (idx[p] >= inner) bad("index out of range at position " + std::to_string(p));
      if (sorted && p > ptr[o] && idx[p] <= idx[p - 1]) bad("unsorted indices in " + std::to_string(o));
    }
  }
}

}  // namespace

void CsrMatrix::validate() const { validate_compressed(nrows, ncols, row_ptr, col_idx, values, sorted, "csr"); }

void CscMatrix::validate() const { validate_compressed(ncols, nrows, col_ptr, row_idx, values, sorted, "csc"); }

std::vector<Triplet> CsrMatrix::to_triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < nrows; ++r)
    for (Offset p = row_ptr[r]; p < row_ptr[r + 1]; ++p)
      out.push_back({static_cast<Index>(r), col_idx[p], values[p]});
  return out;
}

CsrMatrix csr_from_triplets(std::span<const Triplet> triplets, std::size_t nrows, std::size_t ncols) {
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    if (t.row >= nrows || t.col >= ncols)
      fail(ErrorCode::kOutOfBounds, "triplet " + std::to_string(i) + " (" + std::to_string(t.row) + "," +
                                        std::to_string(t.col) + ") outside " + std::to_string(nrows) + "x" +
                                        std::to_string(ncols));
  }
  // Counting sort by row, then sort each row by column and fold duplicates.
  std::vector<Offset> counts(nrows + 1, 0);
  for (const auto& t : triplets) ++counts[t.row + 1];
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  std::vector<std::pair<Index, double>> entries(triplets.size());
  std::vector<Offset> cursor(counts.begin(), counts.end() - 1);
  for (const auto& t : triplets) entries[cursor[t.row]++] = {t.col, t.value};

  CsrMatrix m = CsrMatrix::empty(nrows, ncols);
  m.col_idx.reserve(entries.size());
  m.values.reserve(entries.size());
  for (std::size_t r = 0; r < nrows; ++r) {
    auto first = entries.begin() + static_cast<std::ptrdiff_t>(counts[r]);
    auto last = entries.begin() + static_cast<std::ptrdiff_t>(counts[r + 1]);
    std::stable_sort(first, last, [](const auto& x, const auto& y) { return x.first < y.first; });
    for (auto it = first; it != last; ++it) {
      if (m.col_idx.size() > m.row_ptr[r] && m.col_idx.back() == it->first) {
        m.values.back() += it->second;
      } else {
        m.col_idx.push_back(it->first);
        m.values.push_back(it->second);
      }
    }
    m.row_ptr[r + 1] = m.col_idx.size();
  }
  return m;
}

CscMatrix csr_to_csc(const CsrMatrix& m) {
  CscMatrix t;
  t.nrows = m.nrows;
  t.ncols = m.ncols;
  t.col_ptr.assign(m.ncols + 1, 0);
  for (Index c : m.col_idx) ++t.col_ptr[c + 1];
  std::partial_sum(t.col_ptr.begin(), t.col_ptr.end(), t.col_ptr.begin());
  t.row_idx.resize(m.nnz());
  t.values.resize(m.nnz());
  std::vector<Offset> cursor(t.col_ptr.begin(), t.col_ptr.end() - 1);
  for (std::size_t r = 0; r < m.nrows; ++r) {
    for (Offset p = m.row_ptr[r]; p < m.row_ptr[r + 1]; ++p) {
      Offset dst = cursor[m.col_idx[p]]++;
      t.row_idx[dst] = static_cast<Index>(r);
      t.values[dst] = m.values[p];
    }
  }
  // Rows are visited in order, so each column comes out sorted.
  t.sorted = true;
  return t;
}

CsrMatrix csc_to_csr(const CscMatrix& m) {
  CsrMatrix t;
  t.nrows = m.nrows;
  t.ncols = m.ncols;
  t.row_ptr.assign(m.nrows + 1, 0);
  for (Index r : m.row_idx) ++t.row_ptr[r + 1];
  std::partial_sum(t.row_ptr.begin(), t.row_ptr.end(), t.row_ptr.begin());
  t.col_idx.resize(m.nnz());
  t.values.resize(m.nnz());
  std::vector<Offset> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::size_t c = 0; c < m.ncols; ++c) {
    for (Offset p = m.col_ptr[c]; p < m.col_ptr[c + 1]; ++p) {
      Offset dst = cursor[m.row_idx[p]]++;
      t.col_idx[dst] = static_cast<Index>(c);
      t.values[dst] = m.values[p];
    }
  }
  t.sorted = true;
  return t;
}

CscMatrix transpose_to_csc(const CsrMatrix& m) {
  CscMatrix t;
  t.nrows = m.ncols;
  t.ncols = m.nrows;
  t.col_ptr = m.row_ptr;
  t.row_idx = m.col_idx;
  t.values = m.values;
  t.sorted = m.sorted;
  return t;
}

CsrMatrix transpose(const CsrMatrix& m) {
  CscMatrix csc = csr_to_csc(m);
  CsrMatrix t;
  t.nrows = m.ncols;
  t.ncols = m.nrows;
  t.row_ptr = std::move(csc.col_ptr);
  t.col_idx = std::move(csc.row_idx);
  t.values = std::move(csc.values);
  t.sorted = true;
  return t;
}

CsrMatrix prune(const CsrMatrix& m) {
  CsrMatrix out = CsrMatrix::empty(m.nrows, m.ncols);
  out.sorted = m.sorted;
  for (std::size_t r = 0; r < m.nrows; ++r) {
    for (Offset p = m.row_ptr[r]; p < m.row_ptr[r + 1]; ++p) {
      if (m.values[p] == 0.0) continue;
      out.col_idx.push_back(m.col_idx[p]);
      out.values.push_back(m.values[p]);
    }
    out.row_ptr[r + 1] = out.col_idx.size();
  }
  return out;
}

CsrMatrix canonicalize(const CsrMatrix& m) {
  if (m.sorted) return prune(m);
  CsrMatrix out = CsrMatrix::empty(m.nrows, m.ncols);
  std::vector<std::pair<Index, double>> row;
  for (std::size_t r = 0; r < m.nrows; ++r) {
    row.clear();
    for (Offset p = m.row_ptr[r]; p < m.row_ptr[r + 1]; ++p) row.emplace_back(m.col_idx[p], m.values[p]);
    std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [c, v] : row) {
      if (v == 0.0) continue;
      out.col_idx.push_back(c);
      out.values.push_back(v);
    }
    out.row_ptr[r + 1] = out.col_idx.size();
  }
  return out;
}

std::vector<double> to_dense(const CsrMatrix& m) {
  std::vector<double> d(m.nrows * m.ncols, 0.0);
  for (std::size_t r = 0; r < m.nrows; ++r)
    for (Offset p = m.row_ptr[r]; p < m.row_ptr[r + 1]; ++p) d[r * m.ncols + m.col_idx[p]] += m.values[p];
  return d;
}

std::vector<double> to_dense(const CscMatrix& m) {
  std::vector<double> d(m.nrows * m.ncols, 0.0);
  for (std::size_t c = 0; c < m.ncols; ++c)
    for (Offset p = m.col_ptr[c]; p < m.col_ptr[c + 1]; ++p) d[m.row_idx[p] * m.ncols + c] += m.values[p];
  return d;
}

CsrMatrix from_dense(std::span<const double> dense, std::size_t nrows, std::size_t ncols) {
  if (dense.size() != nrows * ncols) fail(ErrorCode::kDimensionMismatch, "dense buffer size does not match shape");
  CsrMatrix m = CsrMatrix::empty(nrows, ncols);
  for (std::size_t r = 0; r < nrows; ++r) {
    for (std::size_t c = 0; c < ncols; ++c) {
      double v = dense[r * ncols + c];
      if (v == 0.0) continue;
      m.col_idx.push_back(static_cast<Index>(c));
      m.values.push_back(v);
    }
    m.row_ptr[r + 1] = m.col_idx.size();
  }
  return m;
}

CsrMatrix dense_multiply_oracle(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.ncols != b.nrows)
    fail(ErrorCode::kDimensionMismatch, "oracle: a.ncols=" + std::to_string(a.ncols) +
                                            " != b.nrows=" + std::to_string(b.nrows));
  const std::size_t n = a.nrows, k = a.ncols, m = b.ncols;
  std::vector<double> da = to_dense(a);
  std::vector<double> db = to_dense(b);
  std::vector<double> dc(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = dc.data() + i * m;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = da[i * k + kk];
      if (av == 0.0) continue;
      const double* brow = db.data() + kk * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
  return from_dense(dc, n, m);
}

std::vector<std::uint64_t> symbolic_row_flops(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.ncols != b.nrows)
    fail(ErrorCode::kDimensionMismatch, "symbolic: a.ncols=" + std::to_string(a.ncols) +
                                            " != b.nrows=" + std::to_string(b.nrows));
  std::vector<std::uint64_t> flops(a.nrows, 0);
  for (std::size_t i = 0; i < a.nrows; ++i) {
    std::uint64_t f = 0;
    for (Offset p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) f += b.row_nnz(a.col_idx[p]);
    flops[i] = f;
  }
  return flops;
}

Mismatch compare_matrices(const CsrMatrix& expected, const CsrMatrix& actual, double rel_tol) {
  Mismatch mm;
  if (expected.nrows != actual.nrows || expected.ncols != actual.ncols) {
    mm.equal = false;
    mm.reason = "shape";
    return mm;
  }
  const CsrMatrix e = canonicalize(expected);
  const CsrMatrix a = canonicalize(actual);
  for (std::size_t r = 0; r < e.nrows; ++r) {
    Offset pe = e.row_ptr[r], pa = a.row_ptr[r];
    const Offset ee = e.row_ptr[r + 1], ae = a.row_ptr[r + 1];
    while (pe < ee || pa < ae) {
      mm.row = r;
      if (pa == ae || (pe < ee && e.col_idx[pe] < a.col_idx[pa])) {
        mm = {false, r, e.col_idx[pe], e.values[pe], 0.0, "missing entry"};
        return mm;
      }
      if (pe == ee || a.col_idx[pa] < e.col_idx[pe]) {
        mm = {false, r, a.col_idx[pa], 0.0, a.values[pa], "unexpected entry"};
        return mm;
      }
      const double x = e.values[pe], y = a.values[pa];
      if (std::abs(x - y) > rel_tol * std::max(std::abs(x), std::abs(y))) {
        mm = {false, r, e.col_idx[pe], x, y, "value"};
        return mm;
      }
      ++pe;
      ++pa;
    }
  }
  return mm;
}

}  // namespace smash
