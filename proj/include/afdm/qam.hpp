// qam.hpp - unit-power 16-QAM data generation

#pragma once

#include <random>

#include "afdm/types.hpp"

namespace afdm {

// n uniform 16-QAM symbols, average power 1.
inline CVec random_qam16(int n, std::uint64_t seed) {
  static constexpr double levels[4] = {-3.0, -1.0, 1.0, 3.0};
  const double scale = 1.0 / std::sqrt(10.0);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 3);
  CVec x(n);
  for (int i = 0; i < n; ++i) {
    x[i] = Complex(levels[pick(rng)] * scale, levels[pick(rng)] * scale);
  }
  return x;
}

}  // namespace afdm
