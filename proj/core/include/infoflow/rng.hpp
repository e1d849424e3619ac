#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

// Counter-derived random streams. Every logical sampling site (a weight
// matrix, a Monte Carlo draw, a noise row) gets its own stream keyed by
// (seed, path...), so results do not depend on thread count or batching.

namespace infoflow::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

/// Fold a path of integers into a single stream key.
inline std::uint64_t derive_key(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> path) {
  std::uint64_t k = mix64(seed + kGolden);
  for (std::uint64_t p : path) {
    k = mix64(k ^ (p + kGolden + (k << 6) + (k >> 2)));
  }
  return k;
}

/// xoshiro256++ with splitmix64 state expansion. Fixed algorithm, so
/// sequences are reproducible across platforms and standard library versions
/// (std::normal_distribution is implementation-defined; this is not).
class Stream {
 public:
  explicit Stream(std::uint64_t key) {
    std::uint64_t s = key;
    for (auto& w : state_) {
      s += kGolden;
      w = mix64(s);
    }
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

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; caches the second value of each pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0,1] keeps the log finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Stream substream(std::uint64_t seed,
                        std::initializer_list<std::uint64_t> path) {
  return Stream(derive_key(seed, path));
}

// Purpose tags keep unrelated sampling sites on disjoint streams.
namespace tag {
inline constexpr std::uint64_t kMcDraw = 0x01;
inline constexpr std::uint64_t kMcOuter = 0x02;
inline constexpr std::uint64_t kWeightInit = 0x03;
inline constexpr std::uint64_t kForwardNoise = 0x04;
inline constexpr std::uint64_t kTrainNoise = 0x05;
inline constexpr std::uint64_t kShuffle = 0x06;
inline constexpr std::uint64_t kDataset = 0x07;
inline constexpr std::uint64_t kResample = 0x08;
inline constexpr std::uint64_t kUncond = 0x09;
inline constexpr std::uint64_t kCond = 0x0a;
inline constexpr std::uint64_t kPairSubsample = 0x0b;
inline constexpr std::uint64_t kLadder = 0x0c;
inline constexpr std::uint64_t kTestNoise = 0x0d;
inline constexpr std::uint64_t kLayerNoise = 0x0e;
}  // namespace tag

}  // namespace infoflow::rng
