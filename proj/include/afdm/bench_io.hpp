// bench_io.hpp - scenario files and result/scatter emission

#pragma once

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "afdm/bench.hpp"

namespace afdm::bench {

using nlohmann::json;

inline json to_json(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  j["config"] = {{"N", sc.config.N},         {"delta_f_hz", sc.config.delta_f},
                 {"f_c_hz", sc.config.f_c},  {"alpha_max", sc.config.alpha_max},
                 {"ell_max", sc.config.ell_max}, {"k_v", sc.config.k_v},
                 {"c2", sc.config.c2},       {"n_cpp", sc.config.n_cpp}};
  if (sc.targets.random) {
    j["targets"] = {{"mode", "random"}, {"counts", sc.targets.counts}};
  } else {
    json list = json::array();
    for (const FixedTarget& t : sc.targets.fixed) {
      list.push_back({{"range_m", t.range_m}, {"velocity_mps", t.velocity_mps}});
    }
    j["targets"] = {{"mode", "fixed"}, {"list", list}};
  }
  j["snr_db"] = sc.snr_db;
  j["r_k"] = sc.r_k;
  json methods = json::array();
  for (Method m : sc.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  j["trials"] = sc.trials;
  j["seed"] = sc.seed;
  j["estimator"] = {{"b", sc.estimator.b},   {"d", sc.estimator.d}, {"e", sc.estimator.e},
                    {"eps", sc.estimator.eps}, {"i_max", sc.estimator.i_max}};
  j["gain_model"] = gain_model_name(sc.gain_model);
  j["conventional_rmse"] = sc.conventional_rmse;
  return j;
}

inline Scenario scenario_from_json(const json& j) {
  Scenario sc;
  sc.name = j.value("name", std::string("custom"));
  if (j.contains("config")) {
    const json& c = j.at("config");
    sc.config.N = c.value("N", sc.config.N);
    sc.config.delta_f = c.value("delta_f_hz", sc.config.delta_f);
    sc.config.f_c = c.value("f_c_hz", sc.config.f_c);
    sc.config.alpha_max = c.value("alpha_max", sc.config.alpha_max);
    sc.config.ell_max = c.value("ell_max", sc.config.ell_max);
    sc.config.k_v = c.value("k_v", sc.config.k_v);
    sc.config.c2 = c.value("c2", sc.config.c2);
    sc.config.n_cpp = c.value("n_cpp", sc.config.n_cpp);
  }
  if (!j.contains("targets")) throw std::invalid_argument("scenario: missing 'targets'");
  const json& t = j.at("targets");
  const std::string mode = t.value("mode", std::string("fixed"));
  if (mode == "random") {
    sc.targets.random = true;
    sc.targets.counts = t.at("counts").get<std::vector<int>>();
  } else if (mode == "fixed") {
    sc.targets.random = false;
    for (const json& item : t.at("list")) {
      sc.targets.fixed.push_back(
          FixedTarget{item.at("range_m").get<double>(), item.at("velocity_mps").get<double>()});
    }
  } else {
    throw std::invalid_argument("scenario: target mode must be 'fixed' or 'random'");
  }
  sc.snr_db = j.at("snr_db").get<std::vector<double>>();
  sc.r_k = j.at("r_k").get<std::vector<double>>();
  for (const json& m : j.at("methods")) sc.methods.push_back(method_from_name(m.get<std::string>()));
  sc.trials = j.value("trials", sc.trials);
  sc.seed = j.value("seed", sc.seed);
  if (j.contains("estimator")) {
    const json& e = j.at("estimator");
    sc.estimator.b = e.value("b", sc.estimator.b);
    sc.estimator.d = e.value("d", sc.estimator.d);
    sc.estimator.e = e.value("e", sc.estimator.e);
    sc.estimator.eps = e.value("eps", sc.estimator.eps);
    sc.estimator.i_max = e.value("i_max", sc.estimator.i_max);
  }
  sc.gain_model = gain_model_from_name(j.value("gain_model", gain_model_name(sc.gain_model)));
  sc.conventional_rmse = j.value("conventional_rmse", sc.conventional_rmse);
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("could not open scenario file '" + path + "'");
  json j;
  in >> j;
  return scenario_from_json(j);
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream outf(path);
  if (!outf) throw std::runtime_error("could not write scenario file '" + path + "'");
  outf << to_json(sc).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// result emission

enum class OutputFormat { Csv, Jsonl };

inline OutputFormat format_from_name(const std::string& name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "jsonl") return OutputFormat::Jsonl;
  throw std::invalid_argument("unknown output format '" + name + "' (csv | jsonl)");
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_results(const std::vector<ResultRow>& rows, OutputFormat format,
                          std::ostream& out) {
  if (rows.empty()) throw std::invalid_argument("write_results: no rows to emit");
  if (format == OutputFormat::Csv) {
    out << "method,r_k,snr_db,P,trials,rmse_velocity_mps,rmse_range_m,mean_iterations,"
           "mean_wall_ms\n";
    for (const ResultRow& r : rows) {
      out << r.method << ',' << detail::fmt_double(r.r_k) << ',' << detail::fmt_double(r.snr_db)
          << ',' << r.P << ',' << r.trials << ',' << detail::fmt_double(r.rmse_velocity_mps)
          << ',' << detail::fmt_double(r.rmse_range_m) << ','
          << detail::fmt_double(r.mean_iterations) << ',' << detail::fmt_double(r.mean_wall_ms)
          << '\n';
    }
    return;
  }
  for (const ResultRow& r : rows) {
    json j = {{"method", r.method},
              {"r_k", r.r_k},
              {"snr_db", r.snr_db},
              {"P", r.P},
              {"trials", r.trials},
              {"rmse_velocity_mps", r.rmse_velocity_mps},
              {"rmse_range_m", r.rmse_range_m},
              {"mean_iterations", r.mean_iterations},
              {"mean_wall_ms", r.mean_wall_ms}};
    if (r.failed) j["error"] = r.message;
    out << j.dump() << '\n';
  }
}

inline void emit_results(const std::vector<ResultRow>& rows, OutputFormat format,
                         const std::string& path) {
  if (rows.empty()) throw std::invalid_argument("emit_results: no rows to emit");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("could not open output file '" + path + "'");
  write_results(rows, format, out);
  if (!out) throw std::runtime_error("write failed for output file '" + path + "'");
}

inline void write_scatter(const std::vector<ScatterRow>& rows, OutputFormat format,
                          std::ostream& out) {
  if (rows.empty()) throw std::invalid_argument("write_scatter: no rows to emit");
  if (format == OutputFormat::Csv) {
    out << "trial,target_index,true_range_m,est_range_m,true_velocity_mps,est_velocity_mps,"
           "method,r_k,snr_db\n";
    for (const ScatterRow& r : rows) {
      out << r.trial << ',' << r.target_index << ',' << detail::fmt_double(r.true_range_m) << ','
          << detail::fmt_double(r.est_range_m) << ',' << detail::fmt_double(r.true_velocity_mps)
          << ',' << detail::fmt_double(r.est_velocity_mps) << ',' << r.method << ','
          << detail::fmt_double(r.r_k) << ',' << detail::fmt_double(r.snr_db) << '\n';
    }
    return;
  }
  for (const ScatterRow& r : rows) {
    json j = {{"trial", r.trial},
              {"target_index", r.target_index},
              {"true_range_m", r.true_range_m},
              {"est_range_m", r.est_range_m},
              {"true_velocity_mps", r.true_velocity_mps},
              {"est_velocity_mps", r.est_velocity_mps},
              {"method", r.method},
              {"r_k", r.r_k},
              {"snr_db", r.snr_db}};
    out << j.dump() << '\n';
  }
}

inline void emit_scatter(const std::vector<ScatterRow>& rows, OutputFormat format,
                         const std::string& path) {
  if (rows.empty()) throw std::invalid_argument("emit_scatter: no rows to emit");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("could not open scatter file '" + path + "'");
  write_scatter(rows, format, out);
  if (!out) throw std::runtime_error("write failed for scatter file '" + path + "'");
}

// Console table with display rounding; machine outputs keep full precision.
inline void print_summary(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << std::left << std::setw(12) << "method" << std::right << std::setw(6) << "r_k"
      << std::setw(8) << "snr_db" << std::setw(4) << "P" << std::setw(8) << "trials"
      << std::setw(14) << "rmse_v[m/s]" << std::setw(12) << "rmse_r[m]" << std::setw(10)
      << "iters" << std::setw(12) << "wall[ms]" << '\n';
  for (const ResultRow& r : rows) {
    out << std::left << std::setw(12) << r.method << std::right << std::fixed
        << std::setprecision(2) << std::setw(6) << r.r_k << std::setw(8) << r.snr_db
        << std::setw(4) << r.P << std::setw(8) << r.trials << std::setprecision(4)
        << std::setw(14) << r.rmse_velocity_mps << std::setw(12) << r.rmse_range_m
        << std::setprecision(1) << std::setw(10) << r.mean_iterations << std::setprecision(3)
        << std::setw(12) << r.mean_wall_ms;
    if (r.failed) out << "  ERROR: " << r.message;
    out << '\n';
    out.unsetf(std::ios::fixed);
  }
}

}  // namespace afdm::bench
