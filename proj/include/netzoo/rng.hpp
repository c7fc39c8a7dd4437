#pragma once

#include <cstdint>

namespace netzoo {

// SplitMix64 (Steele et al.). Chosen as the project-wide generator because its
// output sequence is fully specified by the seed and identical on every
// platform, unlike the std <random> distributions.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased uniform integer in [0, bound). bound must be > 0.
  std::uint64_t bounded(std::uint64_t bound) {
    const std::uint64_t limit = ~0ull - ~0ull % bound;
    std::uint64_t r;
    do {
      r = next();
    } while (r >= limit);
    return r % bound;
  }

  std::uint8_t byte() { return static_cast<std::uint8_t>(next() & 0xFF); }

 private:
  std::uint64_t state_;
};

// Stream-split rule: sub-stream `index` of master seed s is seeded with
// mix(s ^ GOLDEN * (index + 1)). Documented so corpora generated from split
// streams are reproducible by any implementation of this rule.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ull * (index + 1));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace netzoo
