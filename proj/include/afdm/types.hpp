// types.hpp - shared scalar/vector/matrix aliases and small utilities

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace afdm {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using IVec = Eigen::VectorXi;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Propagation speed used for all range/velocity conversions (m/s).
inline constexpr double kSpeedOfLight = 3.0e8;

inline Complex unit_phasor(double turns) {
  // e^{j2*pi*turns}
  return std::polar(1.0, kTwoPi * turns);
}

// splitmix64 step; used to derive independent child seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s ^= a + 0x9e3779b97f4a7c15ULL;
  h ^= splitmix64(s);
  s ^= b + 0xd1b54a32d192ed03ULL;
  h ^= splitmix64(s);
  return h;
}

}  // namespace afdm
