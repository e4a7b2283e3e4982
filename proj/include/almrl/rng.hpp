/**
 * @file rng.hpp
 * @brief Seeded, splittable random streams.
 *
 * Every stream is a xoshiro256** generator whose 256-bit state is filled by
 * splitmix64 from a single 64-bit key. The key is a pure function of
 * (base_seed, stream_id):
 *
 *     key = splitmix64_mix(base_seed ^ splitmix64_mix(stream_id + golden))
 *
 * Standard normals use the Box-Muller transform. Each transform yields two
 * variates; the second is cached and returned by the next call, so the draw
 * sequence of a stream is fully determined by its seed.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace almrl {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// splitmix64 finalizer (Stafford variant 13).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Order-sensitive hash of a tuple of indices into a stream id.
constexpr std::uint64_t hash_indices(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC908ULL;
  for (std::uint64_t p : parts) {
    h = splitmix64_mix(h + kGolden + splitmix64_mix(p));
  }
  return h;
}

struct SeedSpec {
  std::uint64_t base_seed = 0;
  std::uint64_t stream_id = 0;

  friend constexpr bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(SeedSpec seed) noexcept {
    std::uint64_t x = splitmix64_mix(seed.base_seed ^ splitmix64_mix(seed.stream_id + kGolden));
    for (auto& word : state_) {
      x += kGolden;
      word = splitmix64_mix(x);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  /// xoshiro256** step.
  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double standard_normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // 1 - U lies in (0, 1], so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Stream derive_stream(SeedSpec seed) noexcept { return Stream(seed); }

inline double next_standard_normal(Stream& stream) noexcept { return stream.standard_normal(); }

}  // namespace almrl
