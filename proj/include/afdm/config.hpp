// config.hpp - AFDM system configuration and validation

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "afdm/types.hpp"

namespace afdm {

/**
 * AFDM system constants.
 *
 * The first chirp rate is tied to the Doppler budget,
 *
 *   c1 = (2*(alpha_max + k_v) + 1) / (2*N),
 *
 * which keeps the per-target responses from landing on top of each other
 * in the transform domain. Full delay-Doppler diversity additionally
 * requires
 *
 *   2*alpha_max + ell_max + 2*alpha_max*ell_max < N.
 *
 * With N even, 2*N*c1 is an odd integer and the chirp-periodic prefix
 * behaves exactly like a plain cyclic prefix.
 */
struct AfdmConfig {
  int N = 128;             // chirp subcarrier count
  double delta_f = 30e3;   // subcarrier spacing (Hz)
  double f_c = 90e9;       // carrier frequency (Hz)
  double c1 = 0.0;         // first chirp rate
  double c2 = 0.0;         // second chirp rate
  int n_cpp = 0;           // chirp-periodic prefix length (samples)
  int alpha_max = 0;       // maximum integer normalized Doppler
  int ell_max = 0;         // maximum normalized delay (samples)
  int k_v = 1;             // Doppler guard integer

  // Sample interval T_s = 1/(N*delta_f), seconds.
  double sample_interval() const { return 1.0 / (static_cast<double>(N) * delta_f); }

  // One-way range covered by one delay bin: c*T_s/2, meters.
  double range_per_delay_bin() const { return kSpeedOfLight * sample_interval() / 2.0; }

  // Velocity covered by one unit of normalized Doppler: c*delta_f/(2*f_c), m/s.
  double velocity_per_unit_doppler() const { return kSpeedOfLight * delta_f / (2.0 * f_c); }

  int frame_length() const { return N + n_cpp; }
};

// Left-hand side of the diversity condition; must stay below N.
inline long diversity_load(int alpha_max, int ell_max) {
  return 2L * alpha_max + ell_max + 2L * alpha_max * ell_max;
}

inline AfdmConfig build_config(int N, double delta_f, double f_c, int alpha_max, int ell_max,
                               int k_v = 1, double c2 = 0.0, int n_cpp = -1) {
  if (N <= 0 || N % 2 != 0) {
    throw std::invalid_argument("build_config: N must be a positive even integer, got " +
                                std::to_string(N));
  }
  if (delta_f <= 0.0 || f_c <= 0.0) {
    throw std::invalid_argument("build_config: delta_f and f_c must be positive");
  }
  if (alpha_max < 0 || ell_max < 0) {
    throw std::invalid_argument("build_config: alpha_max and ell_max must be non-negative");
  }
  if (n_cpp < 0) n_cpp = ell_max;  // shortest admissible prefix
  if (n_cpp < ell_max) {
    throw std::invalid_argument("build_config: prefix too short, N_cpp = " +
                                std::to_string(n_cpp) + " < ell_max = " +
                                std::to_string(ell_max));
  }
  const long load = diversity_load(alpha_max, ell_max);
  if (load >= N) {
    throw std::invalid_argument(
        "build_config: diversity condition violated, 2*alpha_max + ell_max + "
        "2*alpha_max*ell_max = " +
        std::to_string(load) + " >= N = " + std::to_string(N));
  }

  AfdmConfig cfg;
  cfg.N = N;
  cfg.delta_f = delta_f;
  cfg.f_c = f_c;
  cfg.alpha_max = alpha_max;
  cfg.ell_max = ell_max;
  cfg.k_v = k_v;
  cfg.c1 = static_cast<double>(2 * (alpha_max + k_v) + 1) / (2.0 * static_cast<double>(N));
  cfg.c2 = c2;
  cfg.n_cpp = n_cpp;
  return cfg;
}

}  // namespace afdm
