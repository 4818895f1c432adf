#pragma once

#include <cstdint>
#include <cstddef>
#include <string_view>
#include <vector>

namespace gemith {

/// SplitMix64 step (Steele, Lea, Flood 2014). Used for seed expansion and
/// for mixing integers into derived seeds. Fully specified, so results are
/// identical on every platform.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// One-shot avalanche of a 64-bit value.
constexpr std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t s = x;
  return splitmix64(s);
}

/// Fold extra words into a base seed. Order-sensitive, so
/// derive_seed(s, a, b) != derive_seed(s, b, a) in general. The base is
/// avalanched before the xor: small (base, word) grids would otherwise
/// collide whenever base ^ base' equals the low-bit drift of word + C.
template <class... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t first, Rest... rest) {
  std::uint64_t d = mix64(mix64(base) ^ (first + 0x9E3779B97F4A7C15ULL));
  if constexpr (sizeof...(rest) == 0) {
    return d;
  } else {
    return derive_seed(d, static_cast<std::uint64_t>(rest)...);
  }
}

/// FNV-1a over bytes; used for canonical-serialization hashes.
std::uint64_t fnv1a(std::string_view bytes);

/// xoshiro256** 1.0 (Blackman, Vigna 2018), seeded through SplitMix64.
/// All distributions below are implemented on top of next() with fixed
/// arithmetic, never through std:: distributions, so a (seed, call
/// sequence) pair replays bit-identically everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform in [0, 1): top 53 bits scaled by 2^-53.
  double uniform01();

  /// Uniform real in [lo, hi).
  double uniform(double lo, double hi);

  /// Log-uniform on [lo, hi), lo > 0.
  double log_uniform(double lo, double hi);

  /// Uniform integer in [0, bound), bound >= 1. Debiased (Lemire).
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller. Consumes two draws, keeps no state.
  double normal();

  /// Normal with mean/sd.
  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// In-place Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace gemith
