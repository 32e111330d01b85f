#pragma once

#include <cstdint>

namespace mum {

/**
 * Small splittable PRNG (splitmix64 core).
 *
 * Every consumer owns its stream explicitly: nothing in the library reads
 * ambient randomness, and child streams derived via split() are independent
 * of draws made later on the parent. All derived samples (uniform ints,
 * doubles, normals) are produced by fixed integer/float arithmetic, so a
 * given seed yields the same sequence on every platform.
 */
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Independent child stream; parent advances by one draw.
  SplitRng split() { return SplitRng(next_u64() ^ 0x6A09E667F3BCC909ull); }

  /// Uniform in [0, n). Rejection sampling, so no modulo bias.
  std::uint64_t next_below(std::uint64_t n);

  /// Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double next_range(double lo, double hi) { return lo + next_double() * (hi - lo); }

  float next_float() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

  bool next_bool() { return (next_u64() >> 63) != 0; }

  bool bernoulli(double p) { return next_double() < p; }

  /// Standard normal via Box-Muller (pairs cached).
  double next_normal();

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace mum
