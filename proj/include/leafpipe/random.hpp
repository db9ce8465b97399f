#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace leafpipe {

/// SplitMix64 finalizer: z += 0x9e3779b97f4a7c15; then two xor-shift-multiply
/// rounds (30/0xbf58476d1ce4e5b9, 27/0x94d049bb133111eb) and a final >>31 xor.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a root seed and a path of keys,
/// e.g. derive_seed(seed, {row, fold}). Folding is order-sensitive.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Deterministic generator: std::mt19937_64 (fully specified by the standard)
/// with portable conversions. Uniform doubles use the top 53 bits; bounded
/// integers use the 128-bit multiply-shift reduction.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n). n must be > 0.
  std::size_t index(std::size_t n) {
    const unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    return static_cast<std::size_t>(m >> 64);
  }

  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace leafpipe
