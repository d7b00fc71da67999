#include "smash/matrix_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "smash/error.hpp"

namespace smash {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == '%') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(const std::string& line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) toks.emplace_back(line.data() + i, j - i);
    i = j;
  }
  return toks;
}

}  // namespace

CoordinateFile mm_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kParse, path.string() + ": empty file");
  {
    std::istringstream banner(lower(line));
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%matrixmarket" || object != "matrix")
      fail(ErrorCode::kParse, path.string() + ": missing MatrixMarket banner");
    if (format != "coordinate") fail(ErrorCode::kParse, path.string() + ": only coordinate format is supported");
    if (field != "real" && field != "integer" && field != "pattern")
      fail(ErrorCode::kParse, path.string() + ": unsupported field '" + field + "'");
    if (symmetry != "general") fail(ErrorCode::kParse, path.string() + ": only general symmetry is supported");
  }
  const bool pattern = lower(line).find("pattern") != std::string::npos;

  std::size_t line_no = 1;
  CoordinateFile f;
  std::size_t declared = 0;
  bool have_size = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    auto toks = split_ws(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (!have_size) {
      if (toks.size() != 3 || !parse_number(toks[0], f.nrows) || !parse_number(toks[1], f.ncols) ||
          !parse_number(toks[2], declared))
        fail(ErrorCode::kParse, where + ": malformed size line");
      have_size = true;
      f.triplets.reserve(declared);
      continue;
    }
    std::size_t r = 0, c = 0;
    double v = 1.0;
    const std::size_t want = pattern ? 2 : 3;
    if (toks.size() != want || !parse_number(toks[0], r) || !parse_number(toks[1], c) ||
        (!pattern && !parse_number(toks[2], v)))
      fail(ErrorCode::kParse, where + ": non-numeric or malformed entry");
    if (r < 1 || c < 1 || r > f.nrows || c > f.ncols)
      fail(ErrorCode::kOutOfBounds, where + ": index (" + std::to_string(r) + "," + std::to_string(c) +
                                        ") outside declared bounds");
    f.triplets.push_back({static_cast<Index>(r - 1), static_cast<Index>(c - 1), v});
  }
  if (!have_size) fail(ErrorCode::kParse, path.string() + ": missing size line");
  if (f.triplets.size() != declared)
    fail(ErrorCode::kParse, path.string() + ": declared " + std::to_string(declared) + " entries, found " +
                                std::to_string(f.triplets.size()));
  return f;
}

CsrMatrix mm_read_csr(const std::filesystem::path& path) {
  CoordinateFile f = mm_read(path);
  return csr_from_triplets(f.triplets, f.nrows, f.ncols);
}

void mm_write(const std::filesystem::path& path, const CsrMatrix& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.nrows << ' ' << m.ncols << ' ' << m.nnz() << '\n';
  std::array<char, 64> buf{};
  for (std::size_t r = 0; r < m.nrows; ++r) {
    for (Offset p = m.row_ptr[r]; p < m.row_ptr[r + 1]; ++p) {
      auto res = std::to_chars(buf.data(), buf.data() + buf.size(), m.values[p], std::chars_format::general, 17);
      out << (r + 1) << ' ' << (m.col_idx[p] + 1) << ' ' << std::string_view(buf.data(), res.ptr - buf.data())
          << '\n';
    }
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

namespace {

constexpr std::array<char, 5> kMagic{'S', 'M', 'S', 'H', '1'};

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void put_array(std::ostream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
void get_array(std::istream& in, std::vector<T>& v, std::size_t n, const std::string& path) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) fail(ErrorCode::kParse, path + ": truncated snapshot");
}

}  // namespace

void snapshot_write(const std::filesystem::path& path, const CsrMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint64_t>(out, m.nrows);
  put<std::uint64_t>(out, m.ncols);
  put<std::uint64_t>(out, m.nnz());
  put_array(out, m.row_ptr);
  put_array(out, m.col_idx);
  put_array(out, m.values);
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

CsrMatrix snapshot_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::array<char, 5> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) fail(ErrorCode::kParse, path.string() + ": bad snapshot magic");
  std::uint64_t hdr[3];
  in.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (!in) fail(ErrorCode::kParse, path.string() + ": truncated snapshot header");
  CsrMatrix m;
  m.nrows = hdr[0];
  m.ncols = hdr[1];
  get_array(in, m.row_ptr, m.nrows + 1, path.string());
  get_array(in, m.col_idx, hdr[2], path.string());
  get_array(in, m.values, hdr[2], path.string());
  m.sorted = false;
  m.validate();
  // Recover the flag from the data.
  m.sorted = true;
  for (std::size_t r = 0; r < m.nrows && m.sorted; ++r)
    for (Offset p = m.row_ptr[r] + 1; p < m.row_ptr[r + 1]; ++p)
      if (m.col_idx[p] <= m.col_idx[p - 1]) {
        m.sorted = false;
        break;
      }
  return m;
}

CsrMatrix load_matrix(const std::filesystem::path& path) {
  if (path.extension() == ".smsh") return snapshot_read(path);
  return mm_read_csr(path);
}

}  // namespace smash
