#pragma once

#include <cstdint>

namespace ksfno {

/// Counter-based SplitMix64. Draw k of stream `seed` is
///   mix64(seed + (k + 1) * 0x9E3779B97F4A7C15)
/// which makes any draw addressable without replaying the stream. The
/// identifier is written into file headers; bump it if the mapping changes.
class CounterRng {
 public:
  static constexpr std::uint32_t kAlgorithmId = 1;  // "splitmix64-ctr-v1"

  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t at(std::uint64_t seed, std::uint64_t k) {
    return mix64(seed + (k + 1) * 0x9E3779B97F4A7C15ULL);
  }

  std::uint64_t next_u64() { return at(seed_, counter_++); }

  /// Uniform on [0, 1) from the top 53 bits.
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

  /// Uniform integer in [0, bound) by rejection, bound > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace ksfno
