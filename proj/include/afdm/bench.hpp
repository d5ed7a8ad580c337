// bench.hpp - seeded Monte Carlo experiment driver and RMSE scoring

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "afdm/channel.hpp"
#include "afdm/config.hpp"
#include "afdm/dictionary.hpp"
#include "afdm/qam.hpp"
#include "afdm/sbl.hpp"
#include "afdm/transforms.hpp"
#include "afdm/types.hpp"

namespace afdm::bench {

enum class Method { OffGrid, OnGrid, IntegerCs };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::OffGrid: return "offgrid";
    case Method::OnGrid: return "ongrid";
    case Method::IntegerCs: return "integer_cs";
  }
  return "unknown";
}

inline Method method_from_name(const std::string& name) {
  if (name == "offgrid") return Method::OffGrid;
  if (name == "ongrid") return Method::OnGrid;
  if (name == "integer_cs") return Method::IntegerCs;
  throw std::invalid_argument("unknown method '" + name + "'");
}

struct ConfigParams {
  int N = 128;
  double delta_f = 30e3;
  double f_c = 90e9;
  int alpha_max = 2;
  int ell_max = 10;
  int k_v = 1;
  double c2 = 0.0;
  int n_cpp = 12;

  AfdmConfig build() const { return build_config(N, delta_f, f_c, alpha_max, ell_max, k_v, c2, n_cpp); }
};

struct FixedTarget {
  double range_m = 0.0;
  double velocity_mps = 0.0;
};

// Either an explicit target list (gains still drawn per trial) or a
// random draw of `counts[i]` targets per cell group.
struct TargetSpec {
  bool random = false;
  std::vector<FixedTarget> fixed;
  std::vector<int> counts;

  std::vector<int> target_counts() const {
    if (!random) return {static_cast<int>(fixed.size())};
    return counts;
  }
};

// Per-trial scattering-gain draw. Unit-phase keeps |h| = 1 with a uniform
// phase, so no target can vanish below its peers; the Gaussian model draws
// CN(0,1) gains whose magnitude spread makes weak targets fade and lets a
// strong target's grid leakage outrank them in the sparse support.
enum class GainModel { UnitPhase, Gaussian };

inline std::string gain_model_name(GainModel g) {
  return g == GainModel::UnitPhase ? "unit_phase" : "gaussian";
}

inline GainModel gain_model_from_name(const std::string& name) {
  if (name == "unit_phase") return GainModel::UnitPhase;
  if (name == "gaussian") return GainModel::Gaussian;
  throw std::invalid_argument("unknown gain model '" + name + "'");
}

struct EstimatorParams {
  double b = 1e-4;
  double d = 1.0;
  double e = 1e-4;
  double eps = 1e-6;
  int i_max = 200;

  SblOptions options() const {
    SblOptions o;
    o.prior.b = b;
    o.prior.d = d;
    o.prior.e = e;
    o.eps = eps;
    o.max_iterations = i_max;
    return o;
  }
};

struct Scenario {
  std::string name = "custom";
  ConfigParams config;
  TargetSpec targets;
  std::vector<double> snr_db;
  std::vector<double> r_k;
  std::vector<Method> methods;
  int trials = 200;
  std::uint64_t seed = 1;
  EstimatorParams estimator;
  GainModel gain_model = GainModel::UnitPhase;
  bool conventional_rmse = false;
  bool trace = false;
  int threads = 0;  // 0 = hardware concurrency
};

struct ResultRow {
  std::string method;
  double r_k = 0.0;
  double snr_db = 0.0;
  int P = 0;
  int trials = 0;
  double rmse_velocity_mps = 0.0;
  double rmse_range_m = 0.0;
  double mean_iterations = 0.0;
  double mean_wall_ms = 0.0;
  bool failed = false;
  std::string message;
};

struct ScatterRow {
  int trial = 0;
  int target_index = 0;
  double true_range_m = 0.0;
  double est_range_m = 0.0;
  double true_velocity_mps = 0.0;
  double est_velocity_mps = 0.0;
  std::string method;
  double r_k = 0.0;
  double snr_db = 0.0;
};

struct RunOutput {
  std::vector<ResultRow> rows;
  std::vector<ScatterRow> scatter;
};

// ---------------------------------------------------------------------------
// scoring

// Assignment of estimates to truths minimizing the summed squared error in
// normalized (delay, Doppler) units. Returns match[i] = estimate index
// paired with truth i. Brute force; target counts are single digit.
inline std::vector<int> pair_targets(const std::vector<TargetEstimate>& estimates,
                                     const std::vector<Target>& truths) {
  if (estimates.size() != truths.size()) {
    throw std::invalid_argument("pair_targets: estimate and truth counts differ");
  }
  const int P = static_cast<int>(truths.size());
  std::vector<int> perm(P);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < P; ++i) {
      const TargetEstimate& e = estimates[perm[i]];
      const double de = e.ell - truths[i].ell;
      const double dn = e.nu - truths[i].nu;
      cost += de * de + dn * dn;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// RMSE = (1/P) * sqrt(sum_i err_i^2); the 1/P factor sits outside the
// root. The conventional sqrt(mean) form is available as a switch.
inline double rmse_from_errors(const std::vector<double>& errors, bool conventional = false) {
  if (errors.empty()) throw std::invalid_argument("rmse: no errors given");
  double ss = 0.0;
  for (double e : errors) ss += e * e;
  const double P = static_cast<double>(errors.size());
  return conventional ? std::sqrt(ss / P) : std::sqrt(ss) / P;
}

inline double rmse_velocity(const std::vector<TargetEstimate>& estimates,
                            const std::vector<Target>& truths, bool conventional = false) {
  const std::vector<int> match = pair_targets(estimates, truths);
  std::vector<double> errors(truths.size());
  for (size_t i = 0; i < truths.size(); ++i) {
    errors[i] = estimates[match[i]].velocity_mps - truths[i].velocity_mps;
  }
  return rmse_from_errors(errors, conventional);
}

inline double rmse_range(const std::vector<TargetEstimate>& estimates,
                         const std::vector<Target>& truths, bool conventional = false) {
  const std::vector<int> match = pair_targets(estimates, truths);
  std::vector<double> errors(truths.size());
  for (size_t i = 0; i < truths.size(); ++i) {
    errors[i] = estimates[match[i]].range_m - truths[i].range_m;
  }
  return rmse_from_errors(errors, conventional);
}

// ---------------------------------------------------------------------------
// random scenarios

inline Complex complex_gaussian(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  return Complex(gauss(rng), gauss(rng));
}

inline Complex draw_gain(GainModel model, std::mt19937_64& rng) {
  if (model == GainModel::UnitPhase) {
    std::uniform_real_distribution<double> phase(0.0, 1.0);
    return unit_phasor(phase(rng));
  }
  return complex_gaussian(rng);
}

inline int doppler_grid_count(int alpha_max, double r_k) {
  if (alpha_max == 0) return 1;
  const double q = 2.0 * alpha_max / r_k;
  const double qr = std::round(q);
  return static_cast<int>(std::abs(q - qr) < 1e-9 ? qr : std::ceil(q)) + 1;
}

// Targets on integer delay bins with Doppler uniform over the grid span
// [-alpha_max, alpha_max] (alpha_max encodes the system's maximum speed)
// and unit-variance complex Gaussian gains. No two targets may share a
// (delay, nearest-Doppler-grid-point) cell on any of the given grid
// resolutions.
inline std::vector<Target> draw_random_targets(int P, const AfdmConfig& cfg,
                                               const std::vector<double>& rk_values,
                                               std::mt19937_64& rng,
                                               GainModel gain_model = GainModel::Gaussian) {
  std::uniform_int_distribution<int> ell_pick(0, cfg.ell_max);
  std::uniform_real_distribution<double> nu_pick(-cfg.alpha_max, cfg.alpha_max);

  auto cell_of = [&](int ell, double nu, double rk) {
    const int K = doppler_grid_count(cfg.alpha_max, rk);
    int k = static_cast<int>(std::lround((nu + cfg.alpha_max) / rk));
    k = std::clamp(k, 0, K - 1);
    return std::pair<int, int>(ell, k);
  };

  std::vector<Target> targets;
  int attempts = 0;
  while (static_cast<int>(targets.size()) < P) {
    if (++attempts > 10000) {
      throw std::runtime_error("draw_random_targets: could not place distinct targets");
    }
    const int ell = ell_pick(rng);
    const double nu = nu_pick(rng);
    const Complex gain = draw_gain(gain_model, rng);

    bool clash = false;
    for (const Target& other : targets) {
      for (double rk : rk_values) {
        if (cell_of(ell, nu, rk) == cell_of(other.ell, other.nu, rk)) {
          clash = true;
          break;
        }
      }
      if (clash) break;
    }
    if (clash) continue;

    const double range = ell * cfg.range_per_delay_bin();
    const double velocity = nu * cfg.velocity_per_unit_doppler();
    targets.push_back(target_from_physical(range, velocity, cfg, gain));
  }
  return targets;
}

// ---------------------------------------------------------------------------
// scenario runner

namespace detail {

struct TrialOutcome {
  bool ok = false;
  std::string message;
  double rmse_v = 0.0;
  double rmse_r = 0.0;
  double iterations = 0.0;
  double wall_ms = 0.0;
  std::vector<ScatterRow> scatter;
};

inline constexpr std::uint64_t kDataStream = 0x8f3a1c5d;
inline constexpr std::uint64_t kTargetStream = 0x51e9b7a3;
inline constexpr std::uint64_t kNoiseStream = 0x27c4f08b;

template <typename Fn>
inline void parallel_for_trials(int trials, int threads, Fn&& body) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, trials));
  if (threads == 1) {
    for (int i = 0; i < trials; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < trials; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

inline void validate_scenario(const Scenario& sc) {
  if (sc.trials < 1) throw std::invalid_argument("scenario: trials must be at least 1");
  if (sc.methods.empty()) throw std::invalid_argument("scenario: no methods selected");
  if (sc.snr_db.empty()) throw std::invalid_argument("scenario: no SNR points");
  if (sc.r_k.empty()) throw std::invalid_argument("scenario: no Doppler resolutions");
  const auto counts = sc.targets.target_counts();
  if (counts.empty()) throw std::invalid_argument("scenario: no targets specified");
  for (int c : counts) {
    if (c < 1) throw std::invalid_argument("scenario: target count must be at least 1");
  }
}

/**
 * Run every (P, r_k, snr, method) cell of the scenario.
 *
 * Trial t draws its data, targets and noise from child seeds derived
 * from (master seed, t) only, so cells that differ in SNR, resolution or
 * method see identical realizations; this makes method comparisons
 * paired and the integer-Doppler baseline exactly independent of r_k.
 * Rows appear in declaration order (P, then r_k, then snr, then method).
 */
inline RunOutput run_scenario(const Scenario& sc) {
  validate_scenario(sc);
  const AfdmConfig cfg = sc.config.build();
  const DaftTransform daft(cfg);

  const bool wants_integer = std::find(sc.methods.begin(), sc.methods.end(),
                                       Method::IntegerCs) != sc.methods.end();
  const bool wants_em = std::find_if(sc.methods.begin(), sc.methods.end(), [](Method m) {
                          return m != Method::IntegerCs;
                        }) != sc.methods.end();

  // Cell separation constraint covers every resolution in play.
  std::vector<double> rk_constraints = sc.r_k;
  if (wants_integer) rk_constraints.push_back(1.0);

  SblOptions em_opts = sc.estimator.options();
  std::mutex trace_mutex;
  if (sc.trace) {
    em_opts.trace = [&trace_mutex](const IterationTrace& tr) {
      std::lock_guard<std::mutex> lock(trace_mutex);
      std::fprintf(stderr, "{\"t\":%d,\"residual\":%.9e,\"beta\":%.9e,\"delta_change\":%.9e}\n",
                   tr.t, tr.residual, tr.beta, tr.delta_change);
    };
  }

  RunOutput out;
  const int n_methods = static_cast<int>(sc.methods.size());
  const int n_snr = static_cast<int>(sc.snr_db.size());

  for (int P : sc.targets.target_counts()) {
    for (double rk : sc.r_k) {
      // outcome[(snr_idx * n_methods + m_idx) * trials + trial]
      std::vector<detail::TrialOutcome> outcomes(
          static_cast<size_t>(n_snr) * n_methods * sc.trials);

      auto run_trial = [&](int trial) {
        try {
          const std::uint64_t data_seed = derive_seed(sc.seed, trial, detail::kDataStream);
          const std::uint64_t target_seed = derive_seed(sc.seed, trial, detail::kTargetStream);
          const std::uint64_t noise_seed = derive_seed(sc.seed, trial, detail::kNoiseStream);

          const CVec x = random_qam16(cfg.N, data_seed);

          std::mt19937_64 target_rng(target_seed);
          std::vector<Target> targets;
          if (sc.targets.random) {
            targets = draw_random_targets(P, cfg, rk_constraints, target_rng, sc.gain_model);
          } else {
            for (const FixedTarget& ft : sc.targets.fixed) {
              targets.push_back(target_from_physical(ft.range_m, ft.velocity_mps, cfg,
                                                     draw_gain(sc.gain_model, target_rng)));
            }
          }

          const TimeFrame s_cpp = add_cpp(daft.modulate(x), cfg);
          const TimeFrame echo = apply_sensing_channel(s_cpp, targets, cfg);

          Dictionary dict, dict_int;
          if (wants_em) dict = build_dictionary(build_grids(cfg.ell_max, cfg.alpha_max, rk), x, cfg);
          if (wants_integer) {
            dict_int = build_dictionary(build_grids(cfg.ell_max, cfg.alpha_max, 1.0), x, cfg);
          }

          for (int si = 0; si < n_snr; ++si) {
            const auto [noisy, sigma2] = add_noise(echo, sc.snr_db[si], noise_seed);
            const CVec y = daft.demodulate(remove_cpp(noisy, cfg));

            for (int mi = 0; mi < n_methods; ++mi) {
              detail::TrialOutcome& slot =
                  outcomes[(static_cast<size_t>(si) * n_methods + mi) * sc.trials + trial];
              try {
                const auto start = std::chrono::steady_clock::now();
                EstimateResult est;
                switch (sc.methods[mi]) {
                  case Method::OffGrid: est = run_offgrid_sbl(y, dict, P, em_opts); break;
                  case Method::OnGrid: est = run_ongrid_baseline(y, dict, P, em_opts); break;
                  case Method::IntegerCs: est = run_integer_cs_baseline(y, dict_int, P); break;
                }
                const auto stop = std::chrono::steady_clock::now();

                slot.rmse_v = rmse_velocity(est.targets, targets, sc.conventional_rmse);
                slot.rmse_r = rmse_range(est.targets, targets, sc.conventional_rmse);
                slot.iterations = est.iterations;
                slot.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();

                const std::vector<int> match = pair_targets(est.targets, targets);
                for (size_t ti = 0; ti < targets.size(); ++ti) {
                  ScatterRow srow;
                  srow.trial = trial;
                  srow.target_index = static_cast<int>(ti);
                  srow.true_range_m = targets[ti].range_m;
                  srow.est_range_m = est.targets[match[ti]].range_m;
                  srow.true_velocity_mps = targets[ti].velocity_mps;
                  srow.est_velocity_mps = est.targets[match[ti]].velocity_mps;
                  srow.method = method_name(sc.methods[mi]);
                  srow.r_k = rk;
                  srow.snr_db = sc.snr_db[si];
                  slot.scatter.push_back(std::move(srow));
                }
                slot.ok = true;
              } catch (const std::exception& ex) {
                slot.ok = false;
                slot.message = ex.what();
              }
            }
          }
        } catch (const std::exception& ex) {
          for (int si = 0; si < n_snr; ++si) {
            for (int mi = 0; mi < n_methods; ++mi) {
              detail::TrialOutcome& slot =
                  outcomes[(static_cast<size_t>(si) * n_methods + mi) * sc.trials + trial];
              slot.ok = false;
              slot.message = ex.what();
            }
          }
        }
      };

      detail::parallel_for_trials(sc.trials, sc.threads, run_trial);

      for (int si = 0; si < n_snr; ++si) {
        for (int mi = 0; mi < n_methods; ++mi) {
          ResultRow row;
          row.method = method_name(sc.methods[mi]);
          row.r_k = rk;
          row.snr_db = sc.snr_db[si];
          row.P = P;
          row.trials = sc.trials;

          double sum_v = 0.0, sum_r = 0.0, sum_it = 0.0, sum_ms = 0.0;
          for (int trial = 0; trial < sc.trials; ++trial) {
            const detail::TrialOutcome& slot =
                outcomes[(static_cast<size_t>(si) * n_methods + mi) * sc.trials + trial];
            if (!slot.ok) {
              row.failed = true;
              if (row.message.empty()) row.message = slot.message;
              continue;
            }
            sum_v += slot.rmse_v;
            sum_r += slot.rmse_r;
            sum_it += slot.iterations;
            sum_ms += slot.wall_ms;
          }
          if (row.failed) {
            row.rmse_velocity_mps = std::numeric_limits<double>::quiet_NaN();
            row.rmse_range_m = std::numeric_limits<double>::quiet_NaN();
            row.mean_iterations = std::numeric_limits<double>::quiet_NaN();
            row.mean_wall_ms = std::numeric_limits<double>::quiet_NaN();
          } else {
            row.rmse_velocity_mps = sum_v / sc.trials;
            row.rmse_range_m = sum_r / sc.trials;
            row.mean_iterations = sum_it / sc.trials;
            row.mean_wall_ms = sum_ms / sc.trials;
          }
          out.rows.push_back(std::move(row));

          for (int trial = 0; trial < sc.trials; ++trial) {
            const detail::TrialOutcome& slot =
                outcomes[(static_cast<size_t>(si) * n_methods + mi) * sc.trials + trial];
            out.scatter.insert(out.scatter.end(), slot.scatter.begin(), slot.scatter.end());
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// presets mirroring the stock experiments

inline Scenario preset_fig2() {
  Scenario sc;
  sc.name = "fig2";
  sc.targets.random = false;
  sc.targets.fixed = {{39.0, -13.68}, {78.0, 83.75}, {195.0, 28.36}};
  sc.snr_db = {5.0};
  sc.r_k = {0.5, 0.3, 0.1};
  sc.methods = {Method::OffGrid, Method::OnGrid, Method::IntegerCs};
  sc.trials = 200;
  return sc;
}

inline Scenario preset_fig3() {
  Scenario sc;
  sc.name = "fig3";
  sc.targets.random = true;
  sc.targets.counts = {3};
  sc.snr_db = {0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0};
  sc.r_k = {0.5, 0.1};
  sc.methods = {Method::OffGrid, Method::OnGrid, Method::IntegerCs};
  sc.trials = 200;
  return sc;
}

inline Scenario preset_fig4() {
  Scenario sc;
  sc.name = "fig4";
  sc.targets.random = true;
  sc.targets.counts = {1, 2, 3, 4, 5};
  sc.snr_db = {0.0, 15.0};
  sc.r_k = {0.1};
  sc.methods = {Method::OffGrid};
  sc.trials = 200;
  return sc;
}

inline Scenario preset_by_name(const std::string& name) {
  if (name == "fig2") return preset_fig2();
  if (name == "fig3") return preset_fig3();
  if (name == "fig4") return preset_fig4();
  throw std::invalid_argument("unknown preset '" + name + "' (available: fig2, fig3, fig4)");
}

}  // namespace afdm::bench
