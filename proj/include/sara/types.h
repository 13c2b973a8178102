#pragma once

#include <compare>
#include <cstdint>
#include <utility>

namespace sara {

// Unordered image pair stored canonically with i < j.
struct ImagePair {
  uint32_t i = 0;
  uint32_t j = 0;

  ImagePair() = default;
  ImagePair(uint32_t a, uint32_t b) : i(a < b ? a : b), j(a < b ? b : a) {}

  auto operator<=>(const ImagePair&) const = default;
  bool touches(uint32_t node) const { return i == node || j == node; }
  uint32_t other(uint32_t node) const { return node == i ? j : i; }
};

// Row-major index of a pair in an n x n matrix; used as an RNG stream id.
inline uint64_t pair_stream_id(const ImagePair& pair, uint32_t n) {
  return static_cast<uint64_t>(pair.i) * n + pair.j;
}

inline uint64_t num_exhaustive_pairs(uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

}  // namespace sara
