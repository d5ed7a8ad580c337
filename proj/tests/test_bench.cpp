#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "afdm/bench.hpp"
#include "afdm/bench_io.hpp"

using namespace afdm;
using namespace afdm::bench;

namespace {

TargetEstimate make_estimate(double range_m, double velocity_mps, const AfdmConfig& cfg) {
  TargetEstimate e;
  e.range_m = range_m;
  e.velocity_mps = velocity_mps;
  e.ell = static_cast<int>(std::lround(range_m / cfg.range_per_delay_bin()));
  e.nu = velocity_mps / cfg.velocity_per_unit_doppler();
  return e;
}

Scenario tiny_scenario() {
  Scenario sc;
  sc.name = "tiny";
  sc.config.N = 32;
  sc.config.alpha_max = 1;
  sc.config.ell_max = 4;
  sc.config.n_cpp = 6;
  sc.targets.random = false;
  sc.targets.fixed = {{2 * 156.25, 25.0}, {0.0, -50.0}};  // bins 2 and 0
  sc.snr_db = {10.0};
  sc.r_k = {0.5};
  sc.methods = {Method::OffGrid, Method::OnGrid, Method::IntegerCs};
  sc.trials = 3;
  sc.seed = 42;
  return sc;
}

}  // namespace

TEST_CASE("stock error metric", "[bench]") {
  const AfdmConfig cfg = build_config(128, 30e3, 90e9, 2, 10, 1, 0.0, 12);

  SECTION("perfect estimates score zero") {
    std::vector<Target> truths = {target_from_physical(39.0, -13.68, cfg)};
    std::vector<TargetEstimate> est = {make_estimate(39.0625, -13.68, cfg)};
    est[0].range_m = truths[0].range_m;  // align exactly
    CHECK(rmse_velocity(est, truths) == 0.0);
  }

  SECTION("single target reports its own error") {
    std::vector<Target> truths = {target_from_physical(78.125, 0.0, cfg)};
    std::vector<TargetEstimate> est = {make_estimate(78.125, 10.0, cfg)};
    CHECK(rmse_velocity(est, truths) == Catch::Approx(10.0));
  }

  SECTION("the 1/P factor sits outside the root") {
    std::vector<Target> truths = {target_from_physical(0.0, 0.0, cfg),
                                  target_from_physical(78.125, 50.0, cfg)};
    std::vector<TargetEstimate> est = {make_estimate(0.0, 3.0, cfg),
                                       make_estimate(78.125, 54.0, cfg)};
    CHECK(rmse_velocity(est, truths) == Catch::Approx(2.5));  // (1/2)*sqrt(9+16)
    CHECK(rmse_velocity(est, truths, true) == Catch::Approx(std::sqrt(12.5)));
  }

  SECTION("mismatched counts are rejected") {
    std::vector<Target> truths = {target_from_physical(0.0, 0.0, cfg)};
    std::vector<TargetEstimate> est;
    CHECK_THROWS_AS(rmse_velocity(est, truths), std::invalid_argument);
  }
}

TEST_CASE("assignment pairing", "[bench]") {
  const AfdmConfig cfg = build_config(128, 30e3, 90e9, 2, 10, 1, 0.0, 12);
  std::vector<Target> truths = {target_from_physical(39.0625, -50.0, cfg),
                                target_from_physical(195.3125, 50.0, cfg),
                                target_from_physical(312.5, 0.0, cfg)};

  SECTION("equals nearest-neighbour pairing for well-separated targets") {
    // estimates close to the truths, listed in scrambled order
    std::vector<TargetEstimate> est = {make_estimate(312.4, 1.0, cfg),
                                       make_estimate(39.1, -49.0, cfg),
                                       make_estimate(195.0, 51.5, cfg)};
    const std::vector<int> match = pair_targets(est, truths);
    CHECK(match[0] == 1);
    CHECK(match[1] == 2);
    CHECK(match[2] == 0);
  }

  SECTION("scoring is invariant to estimate order") {
    std::vector<TargetEstimate> est = {make_estimate(39.0625, -48.0, cfg),
                                       make_estimate(195.3125, 53.0, cfg),
                                       make_estimate(312.5, -2.0, cfg)};
    const double base = rmse_velocity(est, truths);
    std::swap(est[0], est[2]);
    CHECK(rmse_velocity(est, truths) == Catch::Approx(base));
    std::swap(est[1], est[2]);
    CHECK(rmse_velocity(est, truths) == Catch::Approx(base));
  }
}

TEST_CASE("random target draws respect the cell constraints", "[bench]") {
  const AfdmConfig cfg = build_config(128, 30e3, 90e9, 2, 10, 1, 0.0, 12);
  const std::vector<double> rks = {0.5, 0.1, 1.0};
  std::mt19937_64 rng(7);

  for (int rep = 0; rep < 50; ++rep) {
    const std::vector<Target> ts = draw_random_targets(5, cfg, rks, rng);
    REQUIRE(ts.size() == 5);
    for (const Target& t : ts) {
      CHECK(t.ell >= 0);
      CHECK(t.ell <= cfg.ell_max);
      CHECK(std::abs(t.nu) <= cfg.alpha_max + 0.5);
      CHECK_FALSE(t.range_quantized);
    }
    for (double rk : rks) {
      const int K = doppler_grid_count(cfg.alpha_max, rk);
      for (size_t i = 0; i < ts.size(); ++i) {
        for (size_t j = i + 1; j < ts.size(); ++j) {
          const int ki = std::clamp(
              static_cast<int>(std::lround((ts[i].nu + cfg.alpha_max) / rk)), 0, K - 1);
          const int kj = std::clamp(
              static_cast<int>(std::lround((ts[j].nu + cfg.alpha_max) / rk)), 0, K - 1);
          CHECK((ts[i].ell != ts[j].ell || ki != kj));
        }
      }
    }
  }
}

TEST_CASE("scenario runs are deterministic and order-independent", "[bench]") {
  Scenario sc = tiny_scenario();

  // wall time legitimately varies between runs; every other field is
  // covered by the determinism contract
  auto canonical = [](const RunOutput& out) {
    std::ostringstream os;
    for (const ResultRow& r : out.rows) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%d,%d,%.17g,%.17g,%.17g\n",
                    r.method.c_str(), r.r_k, r.snr_db, r.P, r.trials, r.rmse_velocity_mps,
                    r.rmse_range_m, r.mean_iterations);
      os << buf;
    }
    for (const ScatterRow& r : out.scatter) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%.17g,%s\n", r.trial,
                    r.target_index, r.true_range_m, r.est_range_m, r.true_velocity_mps,
                    r.est_velocity_mps, r.method.c_str());
      os << buf;
    }
    return os.str();
  };

  const RunOutput a = run_scenario(sc);
  const RunOutput b = run_scenario(sc);
  CHECK(canonical(a) == canonical(b));

  SECTION("thread count does not change the numbers") {
    Scenario threaded = sc;
    threaded.threads = 3;
    const RunOutput c = run_scenario(threaded);
    CHECK(canonical(c) == canonical(a));
  }

  SECTION("changing the seed changes the numbers") {
    Scenario reseeded = sc;
    reseeded.seed = 43;
    const RunOutput c = run_scenario(reseeded);
    CHECK(c.rows[0].rmse_velocity_mps != a.rows[0].rmse_velocity_mps);
  }
}

TEST_CASE("scenario cell structure", "[bench]") {
  Scenario sc = tiny_scenario();
  sc.snr_db = {0.0, 10.0};
  const RunOutput out = run_scenario(sc);

  // one row per (P, r_k, snr, method) in declaration order
  REQUIRE(out.rows.size() == 1 * 1 * 2 * 3);
  CHECK(out.rows[0].method == "offgrid");
  CHECK(out.rows[1].method == "ongrid");
  CHECK(out.rows[2].method == "integer_cs");
  CHECK(out.rows[0].snr_db == 0.0);
  CHECK(out.rows[3].snr_db == 10.0);

  for (const ResultRow& row : out.rows) {
    CHECK_FALSE(row.failed);
    CHECK(row.P == 2);
    CHECK(row.trials == 3);
    CHECK(std::isfinite(row.rmse_velocity_mps));
    CHECK(row.rmse_velocity_mps >= 0.0);
    CHECK(row.mean_wall_ms > 0.0);
  }

  // scatter: one row per (cell, trial, target)
  CHECK(out.scatter.size() == out.rows.size() * 3 * 2);
}

TEST_CASE("failing cells produce error rows, not aborts", "[bench]") {
  Scenario sc = tiny_scenario();
  sc.targets.fixed = {{2 * 156.25, 25.0}, {5000.0, 0.0}};  // second target out of window
  const RunOutput out = run_scenario(sc);
  REQUIRE(out.rows.size() == 3);
  for (const ResultRow& row : out.rows) {
    CHECK(row.failed);
    CHECK(std::isnan(row.rmse_velocity_mps));
    CHECK_FALSE(row.message.empty());
  }
}

TEST_CASE("scenario validation", "[bench]") {
  Scenario sc = tiny_scenario();
  sc.trials = 0;
  CHECK_THROWS_AS(run_scenario(sc), std::invalid_argument);

  sc = tiny_scenario();
  sc.methods.clear();
  CHECK_THROWS_AS(run_scenario(sc), std::invalid_argument);

  sc = tiny_scenario();
  sc.snr_db.clear();
  CHECK_THROWS_AS(run_scenario(sc), std::invalid_argument);

  sc = tiny_scenario();
  sc.targets.fixed.clear();
  CHECK_THROWS_AS(run_scenario(sc), std::invalid_argument);
}

TEST_CASE("scenario JSON round trip", "[bench]") {
  Scenario sc = preset_fig3();
  sc.seed = 99;
  sc.trials = 17;
  sc.estimator.eps = 1e-7;

  const Scenario back = scenario_from_json(to_json(sc));
  CHECK(to_json(back) == to_json(sc));
  CHECK(back.targets.random);
  CHECK(back.targets.counts == std::vector<int>{3});
  CHECK(back.snr_db.size() == 7);
  CHECK(back.methods.size() == 3);
  CHECK(back.seed == 99);
  CHECK(back.estimator.eps == 1e-7);
}

TEST_CASE("presets encode the stock experiments", "[bench]") {
  const Scenario f2 = preset_fig2();
  REQUIRE(f2.targets.fixed.size() == 3);
  CHECK(f2.targets.fixed[0].range_m == 39.0);
  CHECK(f2.targets.fixed[0].velocity_mps == -13.68);
  CHECK(f2.snr_db == std::vector<double>{5.0});
  CHECK(f2.r_k == (std::vector<double>{0.5, 0.3, 0.1}));

  const Scenario f3 = preset_fig3();
  CHECK(f3.snr_db.front() == 0.0);
  CHECK(f3.snr_db.back() == 15.0);
  CHECK(f3.r_k == (std::vector<double>{0.5, 0.1}));

  const Scenario f4 = preset_fig4();
  CHECK(f4.targets.counts == (std::vector<int>{1, 2, 3, 4, 5}));
  CHECK(f4.snr_db == (std::vector<double>{0.0, 15.0}));

  CHECK_THROWS_AS(preset_by_name("fig9"), std::invalid_argument);
}

TEST_CASE("result emission formats", "[bench]") {
  std::vector<ResultRow> rows(1);
  rows[0].method = "offgrid";
  rows[0].r_k = 0.5;
  rows[0].snr_db = 5.0;
  rows[0].P = 3;
  rows[0].trials = 200;
  rows[0].rmse_velocity_mps = 1.25;
  rows[0].rmse_range_m = 0.5;
  rows[0].mean_iterations = 42.5;
  rows[0].mean_wall_ms = 3.75;

  SECTION("csv column order is fixed") {
    std::ostringstream out;
    write_results(rows, OutputFormat::Csv, out);
    const std::string text = out.str();
    CHECK(text.rfind("method,r_k,snr_db,P,trials,rmse_velocity_mps,rmse_range_m,"
                     "mean_iterations,mean_wall_ms\n", 0) == 0);
    CHECK(text.find("offgrid,0.5,5,3,200,1.25,0.5,42.5,3.75") != std::string::npos);
  }

  SECTION("jsonl carries the same fields") {
    std::ostringstream out;
    write_results(rows, OutputFormat::Jsonl, out);
    const auto j = nlohmann::json::parse(out.str());
    CHECK(j["method"] == "offgrid");
    CHECK(j["rmse_velocity_mps"] == 1.25);
  }

  SECTION("empty row sets are a usage error and create no file") {
    const std::string path = "/tmp/afdm_bench_should_not_exist.csv";
    std::filesystem::remove(path);
    CHECK_THROWS_AS(emit_results({}, OutputFormat::Csv, path), std::invalid_argument);
    CHECK_FALSE(std::filesystem::exists(path));
  }

  SECTION("scatter schema") {
    ScatterRow s;
    s.trial = 4;
    s.target_index = 1;
    s.true_range_m = 39.0;
    s.est_range_m = 39.0625;
    s.true_velocity_mps = -13.5;
    s.est_velocity_mps = -13.25;
    s.method = "offgrid";
    s.r_k = 0.125;
    s.snr_db = 5.0;
    std::ostringstream out;
    write_scatter({s}, OutputFormat::Csv, out);
    CHECK(out.str().rfind("trial,target_index,true_range_m,est_range_m,true_velocity_mps,"
                          "est_velocity_mps,method,r_k,snr_db\n", 0) == 0);
    CHECK(out.str().find("4,1,39,39.0625,-13.5,-13.25,offgrid,0.125,5") != std::string::npos);
  }
}

TEST_CASE("format names", "[bench]") {
  CHECK(format_from_name("csv") == OutputFormat::Csv);
  CHECK(format_from_name("jsonl") == OutputFormat::Jsonl);
  CHECK_THROWS_AS(format_from_name("xml"), std::invalid_argument);
  CHECK(method_from_name("offgrid") == Method::OffGrid);
  CHECK_THROWS_AS(method_from_name("bogus"), std::invalid_argument);
}
