// SPDX-License-Identifier: Apache-2.0
// Seeded random number generator with portable output.
//
// The standard distributions (std::uniform_real_distribution etc.) are
// implementation-defined, so sampling goes through fixed bit-level
// constructions on top of mt19937_64. Given the same seed, every platform
// produces the same stream, which is what makes renders, point clouds and
// experiment CSVs bitwise reproducible.
#pragma once

#include <cstdint>
#include <random>

namespace splatinit {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n); n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return r % n;
  }

  // Standard normal via Box-Muller; caches the second variate.
  double normal();

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace splatinit
