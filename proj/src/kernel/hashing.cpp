#include "smash/kernel/hashing.hpp"

#include <bit>
#include <string>

#include "smash/error.hpp"

namespace smash {

std::uint64_t tag_encode(std::uint64_t i, std::uint64_t j, std::uint64_t ncols) {
  if (ncols == 0 || j >= ncols) fail(ErrorCode::kOutOfBounds, "tag_encode: column out of range");
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 63;
  if (i > (kLimit - 1 - j) / ncols)
    fail(ErrorCode::kInvalidArgument, "tag_encode: tag for row " + std::to_string(i) + " overflows 63 bits");
  return i * ncols + j;
}

std::pair<std::uint64_t, std::uint64_t> tag_decode(std::uint64_t tag, std::uint64_t ncols) {
  if (ncols == 0) fail(ErrorCode::kInvalidArgument, "tag_decode: zero columns");
  return {tag / ncols, tag % ncols};
}

bool is_pow2(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

std::uint64_t hash_upper(std::uint64_t tag, unsigned shift, std::uint64_t capacity) {
  return (shift >= 64 ? 0 : tag >> shift) & (capacity - 1);
}

std::uint64_t hash_lower(std::uint64_t tag, std::uint64_t capacity) { return tag & (capacity - 1); }

unsigned shift_for(std::uint64_t bins, std::uint64_t capacity) {
  unsigned s = 0;
  while (bins > 0 && ((bins - 1) >> s) >= capacity) ++s;
  return s;
}

ProbeStats& ProbeStats::operator+=(const ProbeStats& o) {
  insertions += o.insertions;
  merges += o.merges;
  collisions += o.collisions;
  max_probe_length = std::max(max_probe_length, o.max_probe_length);
  return *this;
}

HashTable::HashTable(std::uint64_t capacity, Residence residence)
    : tags_(capacity, kEmptyTag), values_(capacity, 0.0), residence_(residence) {
  if (!is_pow2(capacity)) fail(ErrorCode::kInvalidArgument, "hashtable capacity must be a power of two");
}

std::uint64_t HashTable::probe_insert(std::uint64_t tag, double value, std::uint64_t home) {
  if (tag == kEmptyTag) fail(ErrorCode::kInvalidArgument, "probe_insert: reserved tag");
  const std::uint64_t cap = capacity();
  for (std::uint64_t d = 0; d < cap; ++d) {
    const std::uint64_t slot = (home + d) & (cap - 1);
    if (tags_[slot] == kEmptyTag) {
      tags_[slot] = tag;
      values_[slot] = value;
      ++stats_.insertions;
      stats_.max_probe_length = std::max(stats_.max_probe_length, d);
      return slot;
    }
    if (tags_[slot] == tag) {
      values_[slot] += value;
      ++stats_.merges;
      stats_.max_probe_length = std::max(stats_.max_probe_length, d);
      return slot;
    }
    ++stats_.collisions;
  }
  fail(ErrorCode::kWindowOverflow, "hashtable full after " + std::to_string(cap) + " probes");
}

void HashTable::clear() {
  std::fill(tags_.begin(), tags_.end(), kEmptyTag);
  std::fill(values_.begin(), values_.end(), 0.0);
  stats_ = {};
}

std::uint64_t insertion_sort_by_tag(std::vector<TaggedValue>& v) {
  std::uint64_t moves = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const TaggedValue x = v[i];
    std::size_t j = i;
    while (j > 0 && v[j - 1].tag > x.tag) {
      v[j] = v[j - 1];
      --j;
      ++moves;
    }
    v[j] = x;
  }
  return moves;
}

}  // namespace smash
