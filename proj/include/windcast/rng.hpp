#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace windcast {

/// SplitMix64 (Steele, Lea & Flood 2014). The recurrence is fixed here
/// instead of relying on a standard-library engine/distribution pair so
/// that streams agree bit-for-bit across platforms and languages:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// uniform() takes the top 53 bits: (z >> 11) * 2^-53, in [0, 1).
/// normal() is Box-Muller on two consecutive uniforms, cosine branch only:
///   sqrt(-2 ln(1 - u1)) * cos(2 pi u2).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % bound;
  }

 private:
  std::uint64_t state_;
};

}  // namespace windcast
