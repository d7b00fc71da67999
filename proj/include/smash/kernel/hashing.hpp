#pragma once

// Output-coordinate tags, the two slot hash functions and a host-side
// open-addressing table that mirrors the probe rules the simulated kernels
// execute instruction by instruction.

#include <cstdint>
#include <utility>
#include <vector>

#include "smash/sparse.hpp"

namespace smash {

inline constexpr std::uint64_t kEmptyTag = ~std::uint64_t{0};  // -1 as a signed word

std::uint64_t tag_encode(std::uint64_t i, std::uint64_t j, std::uint64_t ncols);
std::pair<std::uint64_t, std::uint64_t> tag_decode(std::uint64_t tag, std::uint64_t ncols);

// Keeps tag order between tags that differ above bit `shift`.
std::uint64_t hash_upper(std::uint64_t tag, unsigned shift, std::uint64_t capacity);
// Keeps the low bits; consecutive tags land in consecutive slots.
std::uint64_t hash_lower(std::uint64_t tag, std::uint64_t capacity);

bool is_pow2(std::uint64_t x);
// ceil(log2(bins / capacity)) clamped at 0: every tag below `bins` maps under `capacity`.
unsigned shift_for(std::uint64_t bins, std::uint64_t capacity);

struct ProbeStats {
  std::uint64_t insertions = 0;  // distinct tags claimed
  std::uint64_t merges = 0;      // values added into an existing tag
  std::uint64_t collisions = 0;  // probe steps over a slot holding another tag
  std::uint64_t max_probe_length = 0;

  ProbeStats& operator+=(const ProbeStats& o);
};

enum class Residence : std::uint8_t { kSpad, kDram };

class HashTable {
 public:
  explicit HashTable(std::uint64_t capacity, Residence residence = Residence::kSpad);

  std::uint64_t capacity() const { return tags_.size(); }
  Residence residence() const { return residence_; }
  std::uint64_t tag_at(std::uint64_t slot) const { return tags_[slot]; }
  double value_at(std::uint64_t slot) const { return values_[slot]; }
  const ProbeStats& stats() const { return stats_; }

  // Linear probe from `home`, wrapping. Merges into a matching tag or claims
  // the first empty slot. Throws kWindowOverflow when no slot is found.
  std::uint64_t probe_insert(std::uint64_t tag, double value, std::uint64_t home);

  void clear();

 private:
  std::vector<std::uint64_t> tags_;
  std::vector<double> values_;
  Residence residence_;
  ProbeStats stats_;
};

struct TaggedValue {
  std::uint64_t tag = 0;
  double value = 0.0;

  friend bool operator==(const TaggedValue&, const TaggedValue&) = default;
};

// Section scan of the sorted writeback: visits slots [begin, end + overlap)
// (capped at one full turn, wrapping), keeps entries whose home slot lies in
// [begin, end) and returns them in tag order. `home` maps a tag to its slot.
template <typename HomeFn>
std::vector<TaggedValue> writeback_compact(const HashTable& t, std::uint64_t begin, std::uint64_t end,
                                           std::uint64_t overlap, HomeFn home);

// Stable insertion sort by tag; returns the number of element moves.
std::uint64_t insertion_sort_by_tag(std::vector<TaggedValue>& v);

template <typename HomeFn>
std::vector<TaggedValue> writeback_compact(const HashTable& t, std::uint64_t begin, std::uint64_t end,
                                           std::uint64_t overlap, HomeFn home) {
  std::vector<TaggedValue> out;
  const std::uint64_t cap = t.capacity();
  const std::uint64_t span = std::min(cap, end - begin + overlap);
  for (std::uint64_t k = 0; k < span; ++k) {
    const std::uint64_t slot = (begin + k) % cap;
    const std::uint64_t tag = t.tag_at(slot);
    if (tag == kEmptyTag) continue;
    const std::uint64_t h = home(tag);
    if (h >= begin && h < end) out.push_back({tag, t.value_at(slot)});
  }
  insertion_sort_by_tag(out);
  return out;
}

}  // namespace smash
