#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "illab/errors.hpp"

namespace illab {

// splitmix64; used to derive independent substreams from (seed, index) pairs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seeded random stream. mt19937_64 is fully specified by the standard and the
// samplers below avoid <random> distributions, whose output is
// implementation-defined; the same (seed, call sequence) yields the same
// numbers on any conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive integer range, rejection sampled to stay unbiased.
  int uniform_int(int lo, int hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return lo + static_cast<int>(x % range);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller, no cached second value so the call sequence stays explicit.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Samples an index from an (assumed normalized) probability vector.
  int categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    // Round-off can leave acc slightly below 1; fall back to the last
    // positive-mass entry.
    for (std::size_t i = probs.size(); i-- > 0;) {
      if (probs[i] > 0.0) return static_cast<int>(i);
    }
    throw PolicyError("categorical sample from an all-zero vector");
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace illab
