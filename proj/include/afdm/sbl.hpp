// sbl.hpp - off-grid sparse Bayesian learning estimator and on-grid baselines

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "afdm/dictionary.hpp"
#include "afdm/types.hpp"

namespace afdm {

// Gamma root parameters of the hierarchical prior.
struct PriorParams {
  double b = 1e-4;  // rate for the coefficient variances delta
  double d = 1.0;   // shape for the noise precision beta
  double e = 1e-4;  // rate for the noise precision beta
};

struct IterationTrace {
  int t = 0;
  double residual = 0.0;     // ||y - Phi(kappa) mu||^2
  double beta = 0.0;
  double delta_change = 0.0; // relative squared change of delta
};

struct SblOptions {
  PriorParams prior;
  double eps = 1e-6;         // convergence tolerance on delta
  int max_iterations = 200;
  double delta_floor = 1e-12;

  // E-step linear algebra route. Direct inverts the grid-sized system of
  // the posterior covariance; Woodbury solves an N-sized system instead
  // and recovers only the needed pieces. Both agree to high precision;
  // Auto picks Woodbury for overcomplete dictionaries.
  enum class SolvePath { Auto, Direct, Woodbury };
  SolvePath path = SolvePath::Auto;

  // Coordinate scheme for the off-grid sweep: Gauss-Seidel uses values
  // already updated within the sweep, Jacobi only the previous ones.
  enum class CoordinateScheme { GaussSeidel, Jacobi };
  CoordinateScheme scheme = CoordinateScheme::GaussSeidel;

  // Degrees of freedom in the noise-precision update numerator.
  // Observations uses the measurement dimension N, which is what the EM
  // lower bound of an N-dimensional Gaussian likelihood yields. GridSize
  // uses the dictionary column count; on overcomplete grids that choice
  // inflates beta until the recursion overfits noise, so it exists only
  // for comparison against the printed update rule.
  enum class NoiseDof { Observations, GridSize };
  NoiseDof noise_dof = NoiseDof::Observations;

  // Keep the full posterior covariance in the state (always true on the
  // Direct path).
  bool materialize_sigma = false;

  // Check estimator invariants every iteration and throw on violation.
  bool validate = false;

  std::function<void(const IterationTrace&)> trace;
};

// Iteration state of the EM recursion.
struct SblState {
  RVec delta;        // per-coefficient prior variances, > 0
  double beta = 0.0; // noise precision, > 0
  RVec kappa;        // off-grid Doppler offsets, |kappa_j| <= r_k/2
  CVec mu;           // posterior mean
  RVec sigma_diag;   // diagonal of the posterior covariance
  CMat Sigma;        // full posterior covariance (may be empty on the lean path)
  CMat sigma_support_cols;   // posterior covariance columns on the support
  std::vector<int> support;  // indexes of the P largest |mu|, descending
  int t = 0;
  int kappa_pivot_skips = 0; // coordinate updates skipped on a zero pivot

  // ||y - Phi(kappa) mu||^2 for the state's current (kappa, mu); NaN when
  // stale. e_step refreshes it.
  double cached_residual = std::numeric_limits<double>::quiet_NaN();
};

struct TargetEstimate {
  double range_m = 0.0;
  double velocity_mps = 0.0;
  Complex gain{0.0, 0.0};
  int ell = 0;
  double nu = 0.0;
  int grid_index = 0;
  double kappa = 0.0;
};

struct EstimateResult {
  std::vector<TargetEstimate> targets;
  int iterations = 0;
  bool converged = false;
  double final_residual = 0.0;    // ||y - Phi mu||^2 at exit
  double final_delta_change = std::numeric_limits<double>::infinity();
  int kappa_pivot_skips = 0;
};

namespace detail {

inline std::vector<int> top_p_indices(const CVec& mu, int P) {
  std::vector<int> idx(mu.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + P, idx.end(), [&mu](int a, int b) {
    const double ma = std::abs(mu[a]);
    const double mb = std::abs(mu[b]);
    if (ma != mb) return ma > mb;
    return a < b;  // deterministic tie-break
  });
  idx.resize(P);
  return idx;
}

}  // namespace detail

inline SblState init_state(const CVec& y, const Dictionary& dict,
                           const SblOptions& opts = {}) {
  if (y.size() != dict.rows()) throw std::invalid_argument("init_state: |y| must equal N");
  const double energy = y.squaredNorm();
  if (energy == 0.0) throw std::invalid_argument("init_state: zero measurement vector");

  SblState s;
  s.beta = 100.0 * static_cast<double>(dict.rows()) / energy;
  s.kappa = RVec::Zero(dict.cols());
  s.delta = (dict.A.adjoint() * y).cwiseAbs().cwiseMax(opts.delta_floor);
  s.t = 0;
  return s;
}

// ||y - Phi(kappa) mu||^2 with the state's current kappa and mu.
inline double fit_residual(const SblState& state, const CVec& y, const Dictionary& dict) {
  if (std::isfinite(state.cached_residual)) return state.cached_residual;
  const CMat phi = measurement_matrix(dict, state.kappa);
  return (y - phi * state.mu).squaredNorm();
}

/**
 * E-step: posterior of the sparse gain vector under the current
 * hyper-parameters,
 *
 *   Sigma = (beta Phi^H Phi + diag(delta)^-1)^-1,
 *   mu    = beta Sigma Phi^H y.
 *
 * Fills mu, the covariance diagonal, the support (P largest |mu|) and
 * the covariance columns on the support. The Direct path materializes
 * the full covariance; the Woodbury path factors the N x N matrix
 * beta^-1 I + Phi diag(delta) Phi^H instead and extracts the same
 * quantities.
 */
inline void e_step(SblState& state, const CVec& y, const Dictionary& dict, int P,
                   const SblOptions& opts = {}) {
  const int N = dict.rows();
  const int M = dict.cols();
  if (P < 1 || P > M) throw std::invalid_argument("e_step: P must lie in [1, grid size]");

  const RVec delta = state.delta.cwiseMax(opts.delta_floor);

  const bool use_direct = opts.path == SblOptions::SolvePath::Direct ||
                          (opts.path == SblOptions::SolvePath::Auto && M <= N);

  if (use_direct) {
    const CMat phi = measurement_matrix(dict, state.kappa);
    CMat H = state.beta * (phi.adjoint() * phi);
    H.diagonal() += delta.cwiseInverse().cast<Complex>();
    H = ((H + H.adjoint()) / 2.0).eval();  // symmetrize before factorizing
    Eigen::LLT<CMat> llt(H);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("e_step: posterior precision matrix is not positive definite");
    }
    state.Sigma = llt.solve(CMat::Identity(M, M));
    state.Sigma = ((state.Sigma + state.Sigma.adjoint()) / 2.0).eval();
    state.mu = state.beta * (state.Sigma * (phi.adjoint() * y));
    state.sigma_diag = state.Sigma.diagonal().real().cwiseMax(0.0);
    state.support = detail::top_p_indices(state.mu, P);
    state.sigma_support_cols.resize(M, P);
    for (int p = 0; p < P; ++p) state.sigma_support_cols.col(p) = state.Sigma.col(state.support[p]);
    state.cached_residual = (y - phi * state.mu).squaredNorm();
    return;
  }

  // Woodbury route through G = beta^-1 I + Phi diag(delta) Phi^H, worked on
  // the scaled columns W = Phi diag(sqrt(delta)):
  //   Sigma_jj   = delta_j (1 - ||L^-1 w_j||^2),
  //   mu         = sqrt(delta) .* (W^H G^-1 y),
  //   Sigma e_j  = delta_j e_j - sqrt(delta_j) * sqrt(delta) .* (W^H G^-1 w_j).
  const double bound = dict.grid.r_k / 2.0 + 1e-12;
  const RVec root = delta.cwiseSqrt();
  CMat W = dict.A * root.asDiagonal();
  for (int j = 0; j < M; ++j) {
    if (state.kappa[j] == 0.0) continue;
    if (std::abs(state.kappa[j]) > bound) {
      throw std::invalid_argument("e_step: kappa outside [-r_k/2, r_k/2]");
    }
    W.col(j) += (state.kappa[j] * root[j]) * dict.B.col(j);
  }

  CMat G = CMat::Identity(N, N) / state.beta;
  G.selfadjointView<Eigen::Lower>().rankUpdate(W, 1.0);
  Eigen::LLT<CMat, Eigen::Lower> llt(G);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("e_step: posterior precision matrix is not positive definite");
  }

  const CMat half = llt.matrixL().solve(W);  // L^-1 W
  state.sigma_diag.resize(M);
  for (int j = 0; j < M; ++j) {
    state.sigma_diag[j] = std::max(delta[j] * (1.0 - half.col(j).squaredNorm()), 0.0);
  }
  const CVec g = llt.solve(y);
  const CVec wh_g = W.adjoint() * g;
  const CVec root_c = root.cast<Complex>();
  state.mu = wh_g.cwiseProduct(root_c);
  state.support = detail::top_p_indices(state.mu, P);

  state.sigma_support_cols.resize(M, P);
  for (int p = 0; p < P; ++p) {
    const int j = state.support[p];
    const CVec ginv_wj = llt.matrixU().solve(half.col(j));  // G^-1 w_j
    CVec col = (-root[j]) * (W.adjoint() * ginv_wj).cwiseProduct(root_c);
    col[j] += delta[j];
    state.sigma_support_cols.col(p) = col;
  }

  // Phi mu = W (W^H g) by the scaling identity, giving the residual for free.
  state.cached_residual = (y - W * wh_g).squaredNorm();

  if (opts.materialize_sigma) {
    state.Sigma = -(root_c.asDiagonal() * (W.adjoint() * llt.solve(W)) * root_c.asDiagonal());
    state.Sigma.diagonal() += delta.cast<Complex>();
    state.Sigma = ((state.Sigma + state.Sigma.adjoint()) / 2.0).eval();
  } else {
    state.Sigma.resize(0, 0);
  }
}

// delta_j = (sqrt(1 + 4b(|mu_j|^2 + Sigma_jj)) - 1) / (2b), evaluated in
// the cancellation-free form 2u / (1 + sqrt(1 + 4bu)).
inline RVec update_delta(const SblState& state, const SblOptions& opts = {}) {
  const double b = opts.prior.b;
  if (b <= 0.0) throw std::invalid_argument("update_delta: prior parameter b must be positive");
  RVec out(state.delta.size());
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    const double u = std::norm(state.mu[j]) + state.sigma_diag[j];
    out[j] = std::max(2.0 * u / (1.0 + std::sqrt(1.0 + 4.0 * b * u)), opts.delta_floor);
  }
  return out;
}

// beta = (d - 1 + dof) / (e + T + (1/beta) sum_j (1 - Sigma_jj/delta_j)),
// with T the current model fit residual. The denominator sum equals
// tr(Phi Sigma Phi^H) scaled by beta, so the bracket is the posterior
// expectation of the squared residual.
inline double update_beta(const SblState& state, const CVec& y, const Dictionary& dict,
                          const SblOptions& opts = {}) {
  const double T = fit_residual(state, y, dict);
  double trace_term = 0.0;
  for (Eigen::Index j = 0; j < state.delta.size(); ++j) {
    trace_term += 1.0 - state.sigma_diag[j] / state.delta[j];
  }
  const double denom = opts.prior.e + T + trace_term / state.beta;
  if (!(denom > 0.0)) {
    throw std::runtime_error("update_beta: non-positive denominator (" + std::to_string(denom) +
                             "), EM diverged");
  }
  const double dof = opts.noise_dof == SblOptions::NoiseDof::Observations
                         ? static_cast<double>(dict.rows())
                         : static_cast<double>(dict.cols());
  return (opts.prior.d - 1.0 + dof) / denom;
}

/**
 * Coordinate update of the off-grid Doppler offsets on the current
 * support:
 *
 *   kappa_j = (eta_j - Xi_j,-j kappa_-j) / Xi_jj, clamped to [-r_k/2, r_k/2],
 *
 * with Xi = Re{B^H B .* (Sigma + mu mu^H)} and
 * eta = Re{diag(mu^H) B^H (y - A mu) - diag(B^H A Sigma)}. Off-support
 * entries stay exactly zero.
 */
inline RVec update_kappa(SblState& state, const CVec& y, const Dictionary& dict, int P,
                         const SblOptions& opts = {}) {
  if (static_cast<int>(state.support.size()) != P) {
    throw std::invalid_argument("update_kappa: support not prepared for P targets");
  }
  const double bound = dict.grid.r_k / 2.0;
  const std::vector<int>& supp = state.support;

  const CVec res = y - dict.A * state.mu;

  // Truncated eta and Xi on the support.
  RVec eta(P);
  Eigen::MatrixXd xi(P, P);
  for (int p = 0; p < P; ++p) {
    const int j = supp[p];
    const CVec a_sigma = dict.A * state.sigma_support_cols.col(p);  // A Sigma e_j
    eta[p] = (std::conj(state.mu[j]) * dict.B.col(j).dot(res)).real() -
             dict.B.col(j).dot(a_sigma).real();
    for (int q = 0; q < P; ++q) {
      const int k = supp[q];
      const Complex bhb = dict.B.col(j).dot(dict.B.col(k));  // (B^H B)_{jk}
      const Complex sig_jk = state.sigma_support_cols(j, q);
      const Complex mumu = state.mu[j] * std::conj(state.mu[k]);
      xi(p, q) = (bhb * (sig_jk + mumu)).real();
    }
  }

  RVec kappa_new = RVec::Zero(state.kappa.size());
  for (int p = 0; p < P; ++p) kappa_new[supp[p]] = state.kappa[supp[p]];
  const RVec& read_from =
      (opts.scheme == SblOptions::CoordinateScheme::Jacobi) ? state.kappa : kappa_new;

  for (int p = 0; p < P; ++p) {
    const int j = supp[p];
    if (!(std::abs(xi(p, p)) > 0.0) || !std::isfinite(xi(p, p))) {
      ++state.kappa_pivot_skips;
      continue;
    }
    double num = eta[p];
    for (int q = 0; q < P; ++q) {
      if (q != p) num -= xi(p, q) * read_from[supp[q]];
    }
    kappa_new[j] = std::clamp(num / xi(p, p), -bound, bound);
  }
  return kappa_new;
}

namespace detail {

inline void validate_state(const SblState& state, const Dictionary& dict, int P) {
  if (!(state.beta > 0.0)) throw std::logic_error("invariant violated: beta <= 0");
  if ((state.delta.array() <= 0.0).any()) {
    throw std::logic_error("invariant violated: delta has a non-positive entry");
  }
  const double bound = dict.grid.r_k / 2.0;
  int nonzero = 0;
  for (Eigen::Index j = 0; j < state.kappa.size(); ++j) {
    if (std::abs(state.kappa[j]) > bound) {
      throw std::logic_error("invariant violated: |kappa| exceeds r_k/2");
    }
    if (state.kappa[j] != 0.0) {
      ++nonzero;
      if (std::find(state.support.begin(), state.support.end(), static_cast<int>(j)) ==
          state.support.end()) {
        throw std::logic_error("invariant violated: kappa nonzero off the support");
      }
    }
  }
  if (nonzero > P) throw std::logic_error("invariant violated: kappa sparsity above P");

  // Full-covariance checks are affordable on small grids only.
  if (state.Sigma.size() > 0 && dict.cols() <= 96) {
    const double scale = state.Sigma.cwiseAbs().maxCoeff();
    if ((state.Sigma - state.Sigma.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * std::max(scale, 1.0)) {
      throw std::logic_error("invariant violated: Sigma not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<CMat> eig(state.Sigma);
    if (eig.eigenvalues().minCoeff() <= 0.0) {
      throw std::logic_error("invariant violated: Sigma not positive definite");
    }
  }
}

inline EstimateResult run_em(const CVec& y, const Dictionary& dict, int P, bool offgrid,
                             SblOptions opts) {
  if (P < 1) throw std::invalid_argument("run: P must be at least 1");
  if (P > dict.cols()) throw std::invalid_argument("run: P exceeds the grid size");
  if (!(opts.eps > 0.0)) throw std::invalid_argument("run: eps must be positive");
  if (opts.max_iterations < 1) throw std::invalid_argument("run: I_max must be at least 1");
  if (opts.validate && dict.cols() <= 96) opts.materialize_sigma = true;

  SblState state = init_state(y, dict, opts);
  EstimateResult result;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    e_step(state, y, dict, P, opts);

    const RVec delta_new = update_delta(state, opts);
    const double beta_new = update_beta(state, y, dict, opts);
    const RVec kappa_new = offgrid ? update_kappa(state, y, dict, P, opts) : state.kappa;

    const double change = (delta_new - state.delta).squaredNorm() / state.delta.squaredNorm();

    state.delta = delta_new;
    state.beta = beta_new;
    if (offgrid) {
      state.kappa = kappa_new;
      state.cached_residual = std::numeric_limits<double>::quiet_NaN();
    }
    state.t = iter + 1;

    if (opts.validate) validate_state(state, dict, P);
    if (opts.trace) {
      opts.trace(IterationTrace{state.t, fit_residual(state, y, dict), state.beta, change});
    }

    result.final_delta_change = change;
    if (change < opts.eps) {
      result.converged = true;
      break;
    }
  }

  result.iterations = state.t;
  result.kappa_pivot_skips = state.kappa_pivot_skips;
  result.final_residual = fit_residual(state, y, dict);

  const std::vector<int> supp = detail::top_p_indices(state.mu, P);
  for (int j : supp) {
    TargetEstimate est;
    est.grid_index = j;
    est.ell = static_cast<int>(dict.grid.ell_bar[j]);
    est.kappa = state.kappa[j];
    est.nu = dict.grid.k_bar[j] + state.kappa[j];
    est.range_m = est.ell * dict.cfg.range_per_delay_bin();
    est.velocity_mps = est.nu * dict.cfg.velocity_per_unit_doppler();
    est.gain = state.mu[j];
    result.targets.push_back(est);
  }
  return result;
}

}  // namespace detail

// Algorithm: EM iteration of (Sigma, mu) with closed-form hyper-parameter
// updates for delta, beta and the off-grid offsets kappa, stopped on the
// relative change of delta.
inline EstimateResult run_offgrid_sbl(const CVec& y, const Dictionary& dict, int P,
                                      const SblOptions& opts = {}) {
  return detail::run_em(y, dict, P, true, opts);
}

// Same recursion with kappa pinned to zero (on-grid radar parameter
// estimation baseline).
inline EstimateResult run_ongrid_baseline(const CVec& y, const Dictionary& dict, int P,
                                          const SblOptions& opts = {}) {
  return detail::run_em(y, dict, P, false, opts);
}

// Greedy orthogonal pursuit on an integer-Doppler dictionary (r_k = 1):
// residual-correlation selection with least-squares gain refits.
inline EstimateResult run_integer_cs_baseline(const CVec& y, const Dictionary& dict, int P) {
  if (std::abs(dict.grid.r_k - 1.0) > 1e-12) {
    throw std::invalid_argument("run_integer_cs_baseline: dictionary must use r_k = 1");
  }
  if (P < 1 || P > dict.cols()) throw std::invalid_argument("run_integer_cs_baseline: bad P");

  const int M = dict.cols();
  CVec residual = y;
  std::vector<int> support;
  std::vector<char> used(M, 0);
  CVec gains;

  for (int p = 0; p < P; ++p) {
    int best = -1;
    double best_score = -1.0;
    for (int j = 0; j < M; ++j) {
      if (used[j]) continue;
      const double norm = dict.A.col(j).norm();
      if (norm == 0.0) continue;
      const double score = std::abs(dict.A.col(j).dot(residual)) / norm;
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best < 0) break;
    used[best] = 1;
    support.push_back(best);

    CMat sel(dict.rows(), static_cast<int>(support.size()));
    for (size_t q = 0; q < support.size(); ++q) sel.col(q) = dict.A.col(support[q]);
    gains = sel.colPivHouseholderQr().solve(y);
    residual = y - sel * gains;
  }

  EstimateResult result;
  result.iterations = static_cast<int>(support.size());
  result.converged = true;
  result.final_residual = residual.squaredNorm();
  for (size_t p = 0; p < support.size(); ++p) {
    const int j = support[p];
    TargetEstimate est;
    est.grid_index = j;
    est.ell = static_cast<int>(dict.grid.ell_bar[j]);
    est.nu = dict.grid.k_bar[j];
    est.kappa = 0.0;
    est.range_m = est.ell * dict.cfg.range_per_delay_bin();
    est.velocity_mps = est.nu * dict.cfg.velocity_per_unit_doppler();
    est.gain = gains[static_cast<Eigen::Index>(p)];
    result.targets.push_back(est);
  }
  return result;
}

}  // namespace afdm
