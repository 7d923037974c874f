#pragma once

// Counter-based random streams.
//
// A stream is identified by a 64-bit key derived from
// (seed, index, round, purpose). The n-th output of a stream (n = 1, 2, ...)
// is splitmix64_mix(key + n * 0x9E3779B97F4A7C15). Doubles take the top 53
// bits; normals use the Box-Muller transform on two uniforms and consume
// outputs in pairs. Everything here is fixed arithmetic on uint64_t and
// double, so the streams can be reproduced bit-for-bit in other languages.

#include <cstdint>
#include <limits>

namespace hybandit {

enum class Purpose : std::uint64_t {
  Params = 1,
  Context = 2,
  Noise = 3,
  Trial = 4,
  Environment = 5,
  ReplayLog = 6,
};

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Chains the splitmix64 finalizer over seed, index, round and purpose.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index,
                                   std::uint64_t round,
                                   Purpose purpose) noexcept {
  std::uint64_t k = splitmix64_mix(seed + kGolden);
  k = splitmix64_mix(k ^ (index + kGolden));
  k = splitmix64_mix(k ^ (round + 2 * kGolden));
  k = splitmix64_mix(k ^ (static_cast<std::uint64_t>(purpose) + 3 * kGolden));
  return k;
}

/// Child seed for hierarchical seeding (experiment -> environment -> trial).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index,
                                    Purpose purpose) noexcept {
  return stream_key(parent, index, 0, purpose);
}

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}
  CounterRng(std::uint64_t seed, std::uint64_t index, std::uint64_t round,
             Purpose purpose) noexcept
      : key_(stream_key(seed, index, round, purpose)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    return splitmix64_mix(key_ + (++counter_) * kGolden);
  }

  /// Uniform on [0, 1).
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1].
  double uniform_positive() noexcept {
    return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal (Box-Muller, both values of a pair are used).
  double normal() noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hybandit
