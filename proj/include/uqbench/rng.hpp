#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace uqbench {

/// Purpose tags for deriving child seeds from a master seed.  Keeping the
/// tags in one place guarantees that independent draws (coefficients, input
/// designs, noise, training, prediction) never share an RNG stream.
enum class SeedPurpose : std::uint64_t {
  kPreset = 1,
  kGammaDraw = 2,
  kTrainInputs = 3,
  kNoise = 4,
  kMethodTrain = 5,
  kMember = 6,
  kPrediction = 7,
  kShuffle = 8,
  kInit = 9,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Splittable counter scheme: seed = mix(master, purpose, index).  Each
/// (purpose, index) pair yields an independent, individually replayable
/// stream.
inline std::uint64_t mix_seed(std::uint64_t master, SeedPurpose purpose,
                              std::uint64_t index = 0) {
  std::uint64_t z = detail::splitmix64(master ^ 0xA5A5A5A5A5A5A5A5ULL);
  z = detail::splitmix64(z ^ static_cast<std::uint64_t>(purpose));
  z = detail::splitmix64(z ^ index);
  return z;
}

/// Deterministic random stream.  The engine (mt19937_64) and every transform
/// used here are fixed by this file, so a seed pins the full draw sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Marsaglia's polar method (deterministic, cached spare).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double normal(double mean, double std) { return mean + std * normal(); }

  /// Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace uqbench
