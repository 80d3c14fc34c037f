#pragma once

#include <cstdint>
#include <random>

namespace lpsgd {

/// Seeded random source shared by every stochastic component.
///
/// The engine is std::mt19937_64 seeded directly with the 64-bit seed; this
/// family is part of the reproducibility contract and must not change.
/// Normal and uniform variates come from the standard library distributions,
/// so bit-level reproducibility holds per standard-library implementation.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }

  /// Uniform on [lo, hi); returns lo when lo == hi.
  double uniform(double lo, double hi) {
    if (!(hi > lo)) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lpsgd
