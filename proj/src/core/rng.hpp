// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace fw {

// splitmix64 (Steele, Lea, Flood 2014). Chosen over std::mt19937 because the
// output stream is fixed by the algorithm, not the standard library vendor,
// so seeded datasets and golden files are portable across toolchains.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased-enough bounded draw via 128-bit multiply-shift.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

// Decorrelated per-index stream seed for fan-out over seeds 0..n-1.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return SplitMix64(base + index).next();
}

}  // namespace fw
