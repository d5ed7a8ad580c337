// channel.hpp - multi-target doubly-dispersive sensing channel and noise injection

#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "afdm/config.hpp"
#include "afdm/transforms.hpp"
#include "afdm/types.hpp"

namespace afdm {

/**
 * One point target.
 *
 * Physical range/velocity map to a normalized delay ell = 2R/(c*T_s)
 * (rounded to an integer sample) and a normalized Doppler
 * nu = 2*V*f_c/(c*delta_f), kept as an exact real.
 *
 * h_tilde is the effective gain seen in the DAF-domain matrix model:
 * the time-domain Doppler phase reference e^{-j2*pi*f*(n-ell)} leaves a
 * residual e^{+j2*pi*nu*ell/N} on the gain after the delay/Doppler
 * factors are pulled out.
 */
struct Target {
  double range_m = 0.0;
  double velocity_mps = 0.0;
  Complex gain{1.0, 0.0};

  int ell = 0;           // normalized delay, integer samples
  double nu = 0.0;       // normalized Doppler
  Complex h_tilde{1.0, 0.0};
  bool range_quantized = false;  // set when rounding moved the delay
};

inline Target target_from_physical(double range_m, double velocity_mps, const AfdmConfig& cfg,
                                   Complex gain = Complex{1.0, 0.0}) {
  Target t;
  t.range_m = range_m;
  t.velocity_mps = velocity_mps;
  t.gain = gain;

  const double tau = 2.0 * range_m / kSpeedOfLight;
  const double ell_real = tau / cfg.sample_interval();
  t.ell = static_cast<int>(std::lround(ell_real));
  t.range_quantized = std::abs(ell_real - t.ell) > 1e-9;

  const double f_d = 2.0 * velocity_mps * cfg.f_c / kSpeedOfLight;
  t.nu = f_d / cfg.delta_f;

  if (t.ell < 0 || t.ell > cfg.ell_max) {
    throw std::invalid_argument("target_from_physical: delay bin " + std::to_string(t.ell) +
                                " outside the unambiguous window [0, " +
                                std::to_string(cfg.ell_max) + "]");
  }
  if (std::abs(t.nu) > cfg.alpha_max + 0.5) {
    throw std::invalid_argument("target_from_physical: normalized Doppler " +
                                std::to_string(t.nu) + " outside the unambiguous window +-" +
                                std::to_string(cfg.alpha_max + 0.5));
  }

  t.h_tilde = gain * unit_phasor(t.nu * t.ell / static_cast<double>(cfg.N));
  return t;
}

// Prefix phase correction, diag entries of Gamma_CPP for delay ell:
// e^{-j2*pi*c1*(N^2 - 2N(ell-n))} for n < ell, 1 otherwise.
inline CVec gamma_cpp(int ell, const AfdmConfig& cfg) {
  CVec g = CVec::Ones(cfg.N);
  const double N = static_cast<double>(cfg.N);
  for (int n = 0; n < ell && n < cfg.N; ++n) {
    g[n] = unit_phasor(-cfg.c1 * (N * N - 2.0 * N * (ell - n)));
  }
  return g;
}

// diag entries of the Doppler matrix, e^{-j2*pi*n*nu/N}.
inline CVec doppler_phases(double nu, int N) {
  CVec d(N);
  for (int n = 0; n < N; ++n) d[n] = unit_phasor(-static_cast<double>(n) * nu / N);
  return d;
}

// Cyclic delay by ell samples: out[n] = v[(n - ell) mod N].
inline CVec cyclic_delay(const CVec& v, int ell) {
  const int N = static_cast<int>(v.size());
  CVec out(N);
  for (int n = 0; n < N; ++n) {
    int k = (n - ell) % N;
    if (k < 0) k += N;
    out[n] = v[k];
  }
  return out;
}

/**
 * Unit-gain DAF-domain channel matrix for one (ell, nu):
 *
 *   M = Lambda_c2 F Lambda_c1 * Gamma_CPP * Delta_{nu/N} * Pi^ell
 *       * Lambda_c1^H F^H Lambda_c2^H.
 *
 * A target contributes h_tilde * M(ell, nu) to the end-to-end model.
 */
inline CMat echo_matrix(int ell, double nu, const AfdmConfig& cfg) {
  if (ell < 0 || ell >= cfg.N) {
    throw std::invalid_argument("echo_matrix: delay must lie in [0, N)");
  }
  const DaftTransform daft(cfg);
  const CMat& U = daft.matrix();
  const CVec diag = gamma_cpp(ell, cfg).cwiseProduct(doppler_phases(nu, cfg.N));

  // Pi^ell * U^H: row n of U^H moved down to row (n + ell) mod N.
  CMat shifted(cfg.N, cfg.N);
  const CMat Uh = U.adjoint();
  for (int n = 0; n < cfg.N; ++n) {
    int src = (n - ell) % cfg.N;
    if (src < 0) src += cfg.N;
    shifted.row(n) = diag[n] * Uh.row(src);
  }
  return U * shifted;
}

/**
 * Time-domain echo of a prefixed frame from a set of point targets
 * (noiseless):
 *
 *   r[n] = sum_i h_i e^{-j2*pi*f_i*(n - ell_i)} s[n - ell_i],
 *
 * with f_i = nu_i/N and n counted from the start of the core frame, so
 * the prefix occupies n = -N_cpp..-1. Delayed indices that fall before
 * the frame are dropped; they land in the prefix region the receiver
 * discards anyway.
 */
inline TimeFrame apply_sensing_channel(const TimeFrame& s_cpp, const std::vector<Target>& targets,
                                       const AfdmConfig& cfg) {
  if (!s_cpp.has_cpp && cfg.n_cpp != 0) {
    throw std::invalid_argument("apply_sensing_channel: frame must carry the prefix");
  }
  const int len = cfg.frame_length();
  if (s_cpp.size() != len) {
    throw std::invalid_argument("apply_sensing_channel: frame length " +
                                std::to_string(s_cpp.size()) + " does not match N + N_cpp = " +
                                std::to_string(len));
  }

  TimeFrame r{CVec::Zero(len), s_cpp.has_cpp};
  for (const Target& t : targets) {
    const double f = t.nu / static_cast<double>(cfg.N);
    for (int m = t.ell; m < len; ++m) {
      const int n = m - cfg.n_cpp;  // core-frame time index
      r.samples[m] += t.gain * unit_phasor(-f * (n - t.ell)) * s_cpp.samples[m - t.ell];
    }
  }
  return r;
}

struct NoiseSpec {
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  double sigma2 = 0.0;  // realized per-sample noise variance
};

/**
 * Add circularly-symmetric complex Gaussian noise at the given SNR.
 *
 * The per-sample noise variance is sigma2 = mean(|v|^2) / 10^(snr/10),
 * referenced to the noiseless input. snr_db = +inf returns the input
 * unchanged. Deterministic for a fixed seed.
 */
inline std::pair<CVec, double> add_noise(const CVec& v, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return {v, 0.0};
  if (!std::isfinite(snr_db)) throw std::invalid_argument("add_noise: snr_db must be finite");
  const double mean_power = v.squaredNorm() / static_cast<double>(v.size());
  const double sigma2 = mean_power / std::pow(10.0, snr_db / 10.0);
  const double comp_std = std::sqrt(sigma2 / 2.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  CVec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    out[i] = v[i] + Complex(comp_std * re, comp_std * im);
  }
  return {std::move(out), sigma2};
}

inline std::pair<TimeFrame, double> add_noise(const TimeFrame& frame, double snr_db,
                                              std::uint64_t seed) {
  auto [samples, sigma2] = add_noise(frame.samples, snr_db, seed);
  return {TimeFrame{std::move(samples), frame.has_cpp}, sigma2};
}

}  // namespace afdm
