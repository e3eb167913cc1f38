#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cnlasso {

// Counter-based SplitMix64 stream. Output j is a hash of (key, j), so streams
// derived from the same seed with distinct stream ids are independent and a
// stream can be reproduced in isolation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(derive_seed(seed, stream)), counter_(0) {}

  std::uint64_t next() { return mix(key_ + (++counter_) * kGamma); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, bound); bound must be >= 1.
  std::uint64_t uniform_int(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t v = next();
      if (v >= threshold) return v % bound;
    }
  }

  // Standard normal via Box-Muller; consumes two uniforms per pair.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;          // [0,1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    have_cached_ = true;
    return radius * std::cos(angle);
  }

  // Independent child stream keyed off this stream's identity (not its position).
  Rng derive(std::uint64_t stream) const { return Rng(key_, stream); }

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix(seed + kGamma) ^ mix(stream * kGamma + 0xD1B54A32D192ED03ULL);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// Fixed stream ids so every consumer draws from its own lane.
namespace streams {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kGraph = 3;
inline constexpr std::uint64_t kSplit = 4;
inline constexpr std::uint64_t kFolds = 5;
inline constexpr std::uint64_t kReplicateBase = 1000;
}  // namespace streams

}  // namespace cnlasso
