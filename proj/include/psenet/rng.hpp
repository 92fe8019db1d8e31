#pragma once

#include <cstdint>
#include <random>

namespace psenet {

// Deterministic RNG with explicit draw formulas so streams are reproducible
// across standard-library implementations (std::uniform_real_distribution is
// not pinned by the standard).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller on the portable uniform stream.
  double normal();

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace psenet
