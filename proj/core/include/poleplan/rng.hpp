#pragma once

#include <cstdint>
#include <random>

namespace poleplan {

// Seeded generator with platform-independent draws. std:: distributions
// are implementation-defined, so golden files built on one toolchain would
// not reproduce on another; every draw here is derived from raw
// mt19937_64 output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return p > 0.0 && uniform() < p; }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Knuth's multiplication method; fine for the small means used here.
  std::uint64_t poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

}  // namespace poleplan
