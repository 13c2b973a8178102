#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace sara {

// Counter-based generator: the n-th draw of stream s under seed k is a pure
// function of (k, s, n), so independent streams can be handed to worker
// threads without affecting results.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t stream)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound), bound > 0. Rejection removes modulo bias.
  uint64_t below(uint64_t bound) {
    const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % bound);
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  // Standard normal via Box-Muller; platform independent, unlike
  // std::normal_distribution.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  uint64_t counter() const { return counter_; }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t key_;
  uint64_t counter_ = 0;
};

// Partial Fisher-Yates: moves a uniform sample of `count` distinct elements
// into the front of `values`.
template <typename T>
void partial_shuffle(std::span<T> values, size_t count, CounterRng& rng) {
  for (size_t i = 0; i < count && i + 1 < values.size(); ++i) {
    const size_t j = i + static_cast<size_t>(rng.below(values.size() - i));
    std::swap(values[i], values[j]);
  }
}

}  // namespace sara
