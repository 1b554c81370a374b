#pragma once

#include <cstdint>
#include <random>

namespace ssched {

// Seeded generator with raw-output derived draws. std::mt19937_64 output is
// pinned by the standard; the distribution helpers below avoid
// std::uniform_*_distribution, whose results differ between standard library
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0, n). Modulo bias is negligible for n << 2^64.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ssched
