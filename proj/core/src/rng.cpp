#include "poleplan/rng.hpp"

#include <cmath>

namespace poleplan {

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  const double threshold = std::exp(-mean);
  std::uint64_t k = 0;
  double prod = uniform();
  while (prod > threshold) {
    ++k;
    prod *= uniform();
  }
  return k;
}

}  // namespace poleplan
