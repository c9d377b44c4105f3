#pragma once

// Seeded random source for probe fields and test data. Uniform doubles are
// built from raw mt19937_64 output so streams are identical across standard
// library implementations.

#include <complex>
#include <cstdint>
#include <random>

namespace df {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform in [0,1)
  double uniform() {
    return double(eng_() >> 11) * (1.0 / 9007199254740992.0);
  }
  // uniform in [-1,1)
  double sym() { return 2.0 * uniform() - 1.0; }
  std::complex<double> csym() { return {sym(), sym()}; }
  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace df
