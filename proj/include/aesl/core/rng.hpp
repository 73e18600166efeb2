#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace aesl {

/// Splittable counter-based generator (SplitMix64 core). The stream for a
/// given key is a pure function of the counter, so identical seeds give
/// identical streams on every platform, and split() derives statistically
/// independent child streams for parallel workers.
struct RngState {
  std::uint64_t key = 0;
  std::uint64_t counter = 0;

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  static RngState from_seed(std::uint64_t seed) { return RngState{mix(seed ^ kGolden), 0}; }

  /// Child stream; independent of the parent's counter position.
  RngState split(std::uint64_t stream_id) const {
    return RngState{mix(key + kGolden * (stream_id + 1)), 0};
  }

  std::uint64_t next_u64() {
    std::uint64_t v = key + kGolden * ++counter;
    return mix(v);
  }

  /// Uniform in [0,1) with 53 mantissa bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Index in [0, n). n must be > 0.
  std::uint64_t next_index(std::uint64_t n) { return next_u64() % n; }

  /// Box-Muller; consumes exactly two draws per call.
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
};

}  // namespace aesl
