// dictionary.hpp - virtual delay/Doppler grids and the linearized measurement model

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "afdm/channel.hpp"
#include "afdm/config.hpp"
#include "afdm/transforms.hpp"
#include "afdm/types.hpp"

namespace afdm {

/**
 * Delay/Doppler sampling lattice.
 *
 * Delay resolution is fixed at one sample, so L_tau = ell_max + 1.
 * The Doppler axis has K_nu = ceil(2*alpha_max/r_k) + 1 points spaced
 * r_k apart starting at -alpha_max; when the division is not exact the
 * last point is clipped to +alpha_max. Flat index j = ell'*K_nu + k'
 * (delay-major).
 */
struct VirtualGrid {
  double r_k = 0.0;
  int L_tau = 0;
  int K_nu = 0;
  RVec ell_bar;  // delay of grid point j
  RVec k_bar;    // Doppler of grid point j

  int size() const { return L_tau * K_nu; }
};

inline VirtualGrid build_grids(int ell_max, int alpha_max, double r_k) {
  if (r_k <= 0.0) {
    throw std::invalid_argument("build_grids: invalid Doppler resolution r_k = " +
                                std::to_string(r_k));
  }
  if (ell_max < 0 || alpha_max < 0) {
    throw std::invalid_argument("build_grids: ell_max and alpha_max must be non-negative");
  }

  VirtualGrid g;
  g.r_k = r_k;
  g.L_tau = ell_max + 1;
  if (alpha_max == 0) {
    g.K_nu = 1;
  } else {
    const double q = 2.0 * alpha_max / r_k;
    const double qr = std::round(q);
    g.K_nu = static_cast<int>(std::abs(q - qr) < 1e-9 ? qr : std::ceil(q)) + 1;
  }

  const int total = g.L_tau * g.K_nu;
  g.ell_bar.resize(total);
  g.k_bar.resize(total);
  for (int lp = 0; lp < g.L_tau; ++lp) {
    for (int kp = 0; kp < g.K_nu; ++kp) {
      const int j = lp * g.K_nu + kp;
      g.ell_bar[j] = lp;
      g.k_bar[j] = std::min(kp * r_k - alpha_max, static_cast<double>(alpha_max));
    }
  }
  return g;
}

namespace detail {

// Shared kernel for atom and its Doppler derivative. Writes
//   a = U * diag(gamma .* doppler) * Pi^ell * s_core
// and, when deriv != nullptr,
//   b = U * diag(-j2*pi*n/N) * diag(gamma .* doppler) * Pi^ell * s_core.
inline void atom_pair(const CMat& U, const CVec& s_core, int ell, double k,
                      const AfdmConfig& cfg, CVec* a, CVec* b) {
  const int N = cfg.N;
  CVec t = cyclic_delay(s_core, ell);
  const CVec g = gamma_cpp(ell, cfg);
  for (int n = 0; n < N; ++n) {
    t[n] *= g[n] * unit_phasor(-static_cast<double>(n) * k / N);
  }
  if (a) *a = U * t;
  if (b) {
    CVec td(N);
    for (int n = 0; n < N; ++n) {
      td[n] = Complex(0.0, -kTwoPi * n / N) * t[n];
    }
    *b = U * td;
  }
}

}  // namespace detail

// Single-target unit-gain response to data x at (ell_bar, k_bar).
inline CVec atom(int ell_bar, double k_bar, const DafSymbol& x, const AfdmConfig& cfg) {
  if (x.size() != cfg.N) throw std::invalid_argument("atom: |x| must equal N");
  const DaftTransform daft(cfg);
  const CVec s_core = daft.matrix().adjoint() * x;
  CVec a;
  detail::atom_pair(daft.matrix(), s_core, ell_bar, k_bar, cfg, &a, nullptr);
  return a;
}

// Partial derivative of the atom with respect to the Doppler coordinate.
inline CVec atom_derivative(int ell_bar, double k_bar, const DafSymbol& x,
                            const AfdmConfig& cfg) {
  if (x.size() != cfg.N) throw std::invalid_argument("atom_derivative: |x| must equal N");
  const DaftTransform daft(cfg);
  const CVec s_core = daft.matrix().adjoint() * x;
  CVec b;
  detail::atom_pair(daft.matrix(), s_core, ell_bar, k_bar, cfg, nullptr, &b);
  return b;
}

/**
 * Dense linearized measurement model for known data x:
 *
 *   Phi(kappa) = A + B * diag(kappa),
 *
 * where column j of A is the atom at grid point j and column j of B its
 * Doppler derivative.
 */
struct Dictionary {
  AfdmConfig cfg;
  VirtualGrid grid;
  DafSymbol x;
  CMat A;
  CMat B;

  int rows() const { return cfg.N; }
  int cols() const { return grid.size(); }
};

inline Dictionary build_dictionary(const VirtualGrid& grid, const DafSymbol& x,
                                   const AfdmConfig& cfg, int max_columns = 1 << 16) {
  if (x.size() != cfg.N) throw std::invalid_argument("build_dictionary: |x| must equal N");
  if (grid.size() <= 0) throw std::invalid_argument("build_dictionary: empty grid");
  if (grid.size() > max_columns) {
    throw std::runtime_error("build_dictionary: grid has " + std::to_string(grid.size()) +
                             " points, above the cap of " + std::to_string(max_columns));
  }

  Dictionary d;
  d.cfg = cfg;
  d.grid = grid;
  d.x = x;
  d.A.resize(cfg.N, grid.size());
  d.B.resize(cfg.N, grid.size());

  const DaftTransform daft(cfg);
  const CVec s_core = daft.matrix().adjoint() * x;
  CVec a, b;
  for (int j = 0; j < grid.size(); ++j) {
    detail::atom_pair(daft.matrix(), s_core, static_cast<int>(grid.ell_bar[j]), grid.k_bar[j],
                      cfg, &a, &b);
    d.A.col(j) = a;
    d.B.col(j) = b;
  }
  return d;
}

// Phi(kappa) = A + B*diag(kappa); kappa entries must stay within half a
// Doppler grid step.
inline CMat measurement_matrix(const Dictionary& dict, const RVec& kappa) {
  if (kappa.size() != dict.cols()) {
    throw std::invalid_argument("measurement_matrix: |kappa| must equal the grid size");
  }
  const double bound = dict.grid.r_k / 2.0 + 1e-12;
  for (Eigen::Index j = 0; j < kappa.size(); ++j) {
    if (std::abs(kappa[j]) > bound) {
      throw std::invalid_argument("measurement_matrix: kappa[" + std::to_string(j) +
                                  "] = " + std::to_string(kappa[j]) +
                                  " outside [-r_k/2, r_k/2]");
    }
  }
  CMat phi = dict.A;
  for (Eigen::Index j = 0; j < kappa.size(); ++j) {
    if (kappa[j] != 0.0) phi.col(j) += kappa[j] * dict.B.col(j);
  }
  return phi;
}

}  // namespace afdm
