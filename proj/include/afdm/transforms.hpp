// transforms.hpp - DAFT/IDAFT transforms and chirp-periodic prefix handling

#pragma once

#include <stdexcept>
#include <string>

#include "afdm/config.hpp"
#include "afdm/types.hpp"

namespace afdm {

// Symbol vector in the DAF domain, length N.
using DafSymbol = CVec;

// Time-domain frame: N samples, or N + N_cpp when the prefix is attached.
struct TimeFrame {
  CVec samples;
  bool has_cpp = false;

  Eigen::Index size() const { return samples.size(); }
};

// diag(e^{-j2*pi*c*n^2}), n = 0..N-1
inline CVec chirp_phases(int N, double c) {
  CVec lambda(N);
  for (int n = 0; n < N; ++n) {
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    lambda[n] = unit_phasor(-c * n2);
  }
  return lambda;
}

// Normalized N-point DFT matrix, F(m,n) = e^{-j2*pi*m*n/N} / sqrt(N).
inline CMat dft_matrix(int N) {
  CVec roots(N);
  for (int k = 0; k < N; ++k) roots[k] = unit_phasor(-static_cast<double>(k) / N);
  CMat F(N, N);
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  for (int m = 0; m < N; ++m) {
    for (int n = 0; n < N; ++n) {
      F(m, n) = roots[static_cast<int>((static_cast<long>(m) * n) % N)] * scale;
    }
  }
  return F;
}

/**
 * Cached DAFT operator for one configuration.
 *
 * Forward (demodulation):  y = Lambda_c2 * F * Lambda_c1 * r
 * Inverse (modulation):    s = Lambda_c1^H * F^H * Lambda_c2^H * x
 *
 * Both directions are unitary; the matrix is materialized explicitly,
 * which is exact and fast enough for N <= 512.
 */
class DaftTransform {
 public:
  explicit DaftTransform(const AfdmConfig& cfg) : N_(cfg.N), U_(cfg.N, cfg.N) {
    const CVec lam1 = chirp_phases(cfg.N, cfg.c1);
    const CVec lam2 = chirp_phases(cfg.N, cfg.c2);
    U_ = dft_matrix(cfg.N);
    for (int m = 0; m < cfg.N; ++m) {
      for (int n = 0; n < cfg.N; ++n) U_(m, n) *= lam2[m] * lam1[n];
    }
  }

  int size() const { return N_; }

  // DAFT matrix Lambda_c2 * F * Lambda_c1
  const CMat& matrix() const { return U_; }

  TimeFrame modulate(const DafSymbol& x) const {
    if (x.size() != N_) {
      throw std::invalid_argument("modulate: symbol length " + std::to_string(x.size()) +
                                  " does not match N = " + std::to_string(N_));
    }
    return TimeFrame{U_.adjoint() * x, false};
  }

  DafSymbol demodulate(const TimeFrame& r) const {
    if (r.has_cpp) {
      throw std::invalid_argument("demodulate: remove the prefix before demodulating");
    }
    if (r.size() != N_) {
      throw std::invalid_argument("demodulate: frame length " + std::to_string(r.size()) +
                                  " does not match N = " + std::to_string(N_));
    }
    return U_ * r.samples;
  }

 private:
  int N_;
  CMat U_;
};

inline TimeFrame idaft_modulate(const DafSymbol& x, const AfdmConfig& cfg) {
  return DaftTransform(cfg).modulate(x);
}

inline DafSymbol daft_demodulate(const TimeFrame& r, const AfdmConfig& cfg) {
  return DaftTransform(cfg).demodulate(r);
}

// Prepend the chirp-periodic prefix:
// s[n] = s[N+n] * e^{-j2*pi*c1*(N^2 + 2*N*n)} for n = -N_cpp..-1.
inline TimeFrame add_cpp(const TimeFrame& s, const AfdmConfig& cfg) {
  if (s.has_cpp) throw std::invalid_argument("add_cpp: frame already carries a prefix");
  if (s.size() != cfg.N) {
    throw std::invalid_argument("add_cpp: frame length must be N = " + std::to_string(cfg.N));
  }
  if (cfg.n_cpp == 0) return s;

  const int N = cfg.N;
  TimeFrame out{CVec(N + cfg.n_cpp), true};
  out.samples.tail(N) = s.samples;
  for (int p = 0; p < cfg.n_cpp; ++p) {
    const int n = p - cfg.n_cpp;  // negative prefix index
    const double phase_turns = -cfg.c1 * (static_cast<double>(N) * N + 2.0 * N * n);
    out.samples[p] = s.samples[N + n] * unit_phasor(phase_turns);
  }
  return out;
}

inline TimeFrame remove_cpp(const TimeFrame& r, const AfdmConfig& cfg) {
  if (cfg.n_cpp == 0) {
    if (r.size() != cfg.N) {
      throw std::invalid_argument("remove_cpp: frame length must be N when N_cpp = 0");
    }
    return TimeFrame{r.samples, false};
  }
  if (!r.has_cpp) throw std::invalid_argument("remove_cpp: frame carries no prefix");
  if (r.size() != cfg.N + cfg.n_cpp) {
    throw std::invalid_argument("remove_cpp: frame length " + std::to_string(r.size()) +
                                " does not match N + N_cpp = " +
                                std::to_string(cfg.N + cfg.n_cpp));
  }
  return TimeFrame{r.samples.tail(cfg.N), false};
}

}  // namespace afdm
