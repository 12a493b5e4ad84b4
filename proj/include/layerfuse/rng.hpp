#pragma once

// Seeded random source with platform-independent distributions.
// std::mt19937_64 output is fixed by the standard; the std::*_distribution
// classes are not, so the draws below are written out explicitly.

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace layerfuse {

/// splitmix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix_seed(seed ^ mix_seed(stream + 0x632BE59BD9B4E019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi] (inclusive), rejection sampled.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = hi - lo;
    if (span == ~0ULL) return engine_();
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = ~0ULL - (~0ULL % range);
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return lo + x % range;
  }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
  }

  /// Sum of n Bernoulli(p) draws. n stays small here (edge counts).
  std::uint64_t binomial(std::uint64_t n, double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::uint64_t k = 0;
    for (std::uint64_t i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
    return k;
  }

  /// Multinomial(n, weights / sum(weights)) by sequential binomial conditioning.
  std::vector<std::uint64_t> multinomial(std::uint64_t n, std::span<const double> weights) {
    double mass = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("multinomial: negative weight");
      mass += w;
    }
    if (!(mass > 0.0)) throw std::invalid_argument("multinomial: weights sum to zero");
    std::vector<std::uint64_t> counts(weights.size(), 0);
    std::uint64_t left = n;
    for (std::size_t k = 0; k < weights.size() && left > 0; ++k) {
      if (k + 1 == weights.size() || mass <= weights[k]) {
        counts[k] = left;
        left = 0;
        break;
      }
      counts[k] = binomial(left, weights[k] / mass);
      left -= counts[k];
      mass -= weights[k];
    }
    return counts;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, i - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace layerfuse
