#pragma once

// Deterministic random number generation.
//
// Samplers promise bit-identical output for a given seed regardless of how the
// batch is chunked across threads, so every batch element owns an independent
// stream derived from (seed, element index). Standard-library distributions
// are implementation-defined and therefore unusable here; normals come from a
// fixed Box-Muller transform over a fixed-bit-layout generator.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tsr {

/// splitmix64 step: advances `state` and returns the next mixed word.
/// Used for seeding; fine quality for that purpose and trivially portable.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for task `index` of a job seeded with `seed`. The two inputs are
/// mixed asymmetrically so (seed, index) and (seed', index') collide only by
/// 64-bit accident.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t sm = seed;
  const std::uint64_t base = splitmix64_next(sm);
  return base ^ (index * 0x9e3779b97f4a7c15ULL + 0xd1b54a32d192ed03ULL);
}

/// xoshiro256++ with Box-Muller normal draws. One instance per batch element;
/// sequential draws along a trajectory, so parallel and serial integration of
/// a batch consume identical values.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  /// Stream for element `index` of a run seeded with `seed`.
  static RngStream derived(std::uint64_t seed, std::uint64_t index) {
    return RngStream(derive_seed(seed, index));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; generates pairs and caches the spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // 1 - uniform() lies in (0, 1], keeping the log argument positive.
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log1p(-u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace tsr
