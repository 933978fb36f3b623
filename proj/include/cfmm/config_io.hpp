// SPDX-License-Identifier: Apache-2.0
//
// Configuration files (JSON) and result exports (CSV + JSON summary).
// Unknown keys are rejected so typos fail loudly instead of silently running
// defaults. Exports are deterministic: fixed column orders, fixed float
// formatting; the only non-reproducible field is the summary timestamp.

#pragma once

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfmm/apg.hpp"
#include "cfmm/bench.hpp"
#include "cfmm/netgen.hpp"

namespace cfmm {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline void check_keys(const ordered_json& j, const char* section,
                       std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument(std::string("unknown key \"") + it.key() +
                                  "\" in section \"" + section + "\"");
  }
}

template <class T>
void maybe(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline NetworkConfig network_from_json(const ordered_json& j) {
  detail::check_keys(
      j, "network",
      {"aps", "antennas_per_ap", "unicast_users", "multicast_groups",
       "users_per_group", "area_m", "coherence_symbols", "pilot_symbols",
       "dl_power_mw", "ul_power_mw", "noise_dbm", "shadow_sigma_db",
       "shadow_decorr_m", "pl_const_db", "pl_slope_db", "seed"});
  NetworkConfig c;
  detail::maybe(j, "aps", c.num_aps);
  detail::maybe(j, "antennas_per_ap", c.antennas_per_ap);
  detail::maybe(j, "unicast_users", c.num_unicast);
  int groups = c.num_groups();
  detail::maybe(j, "multicast_groups", groups);
  if (j.contains("users_per_group")) {
    const auto& upg = j.at("users_per_group");
    if (upg.is_array()) {
      c.group_sizes = upg.get<std::vector<int>>();
      if (j.contains("multicast_groups") &&
          groups != static_cast<int>(c.group_sizes.size()))
        throw std::invalid_argument(
            "multicast_groups disagrees with users_per_group list length");
    } else {
      c.group_sizes.assign(static_cast<std::size_t>(groups), upg.get<int>());
    }
  } else if (j.contains("multicast_groups")) {
    const int per = c.group_sizes.empty() ? 1 : c.group_sizes.front();
    c.group_sizes.assign(static_cast<std::size_t>(groups), per);
  }
  detail::maybe(j, "area_m", c.area_m);
  detail::maybe(j, "coherence_symbols", c.coherence_symbols);
  detail::maybe(j, "pilot_symbols", c.pilot_symbols);
  detail::maybe(j, "dl_power_mw", c.dl_power_mw);
  detail::maybe(j, "ul_power_mw", c.ul_power_mw);
  detail::maybe(j, "noise_dbm", c.noise_dbm);
  detail::maybe(j, "shadow_sigma_db", c.shadow_sigma_db);
  detail::maybe(j, "shadow_decorr_m", c.shadow_decorr_m);
  detail::maybe(j, "pl_const_db", c.pl_const_db);
  detail::maybe(j, "pl_slope_db", c.pl_slope_db);
  detail::maybe(j, "seed", c.seed);
  return c;
}

inline ordered_json to_json(const NetworkConfig& c) {
  ordered_json j;
  j["aps"] = c.num_aps;
  j["antennas_per_ap"] = c.antennas_per_ap;
  j["unicast_users"] = c.num_unicast;
  j["multicast_groups"] = c.num_groups();
  j["users_per_group"] = c.group_sizes;
  j["area_m"] = c.area_m;
  j["coherence_symbols"] = c.coherence_symbols;
  j["pilot_symbols"] = c.pilot_symbols;
  j["dl_power_mw"] = c.dl_power_mw;
  j["ul_power_mw"] = c.ul_power_mw;
  j["noise_dbm"] = c.noise_dbm;
  j["shadow_sigma_db"] = c.shadow_sigma_db;
  j["shadow_decorr_m"] = c.shadow_decorr_m;
  j["pl_const_db"] = c.pl_const_db;
  j["pl_slope_db"] = c.pl_slope_db;
  j["seed"] = c.seed;
  return j;
}

inline SolverConfig solver_from_json(const ordered_json& j) {
  detail::check_keys(
      j, "solver",
      {"w_uni", "w_multi", "mu_qos", "mu_binary", "mu_select", "x0", "growth",
       "qos_uni", "qos_multi", "max_aps_per_entity", "step_extrapolated",
       "step_corrected", "nonmonotone", "tol", "max_inner", "max_outer",
       "penalty_tol", "round_threshold", "lipschitz_samples", "seed",
       "record_trace"});
  SolverConfig c;
  detail::maybe(j, "w_uni", c.penalty.w_uni);
  detail::maybe(j, "w_multi", c.penalty.w_multi);
  detail::maybe(j, "mu_qos", c.penalty.mu_qos);
  detail::maybe(j, "mu_binary", c.penalty.mu_binary);
  detail::maybe(j, "mu_select", c.penalty.mu_select);
  detail::maybe(j, "x0", c.penalty.x0);
  detail::maybe(j, "growth", c.penalty.growth);
  detail::maybe(j, "qos_uni", c.penalty.qos_uni);
  detail::maybe(j, "qos_multi", c.penalty.qos_multi);
  detail::maybe(j, "max_aps_per_entity", c.penalty.max_aps_per_entity);
  detail::maybe(j, "step_extrapolated", c.step_extrapolated);
  detail::maybe(j, "step_corrected", c.step_corrected);
  detail::maybe(j, "nonmonotone", c.nonmonotone);
  detail::maybe(j, "tol", c.tol);
  detail::maybe(j, "max_inner", c.max_inner);
  detail::maybe(j, "max_outer", c.max_outer);
  detail::maybe(j, "penalty_tol", c.penalty_tol);
  detail::maybe(j, "round_threshold", c.round_threshold);
  detail::maybe(j, "lipschitz_samples", c.lipschitz_samples);
  detail::maybe(j, "seed", c.seed);
  detail::maybe(j, "record_trace", c.record_trace);
  return c;
}

inline ordered_json to_json(const SolverConfig& c) {
  ordered_json j;
  j["w_uni"] = c.penalty.w_uni;
  j["w_multi"] = c.penalty.w_multi;
  j["mu_qos"] = c.penalty.mu_qos;
  j["mu_binary"] = c.penalty.mu_binary;
  j["mu_select"] = c.penalty.mu_select;
  j["x0"] = c.penalty.x0;
  j["growth"] = c.penalty.growth;
  j["qos_uni"] = c.penalty.qos_uni;
  j["qos_multi"] = c.penalty.qos_multi;
  j["max_aps_per_entity"] = c.penalty.max_aps_per_entity;
  j["step_extrapolated"] = c.step_extrapolated;
  j["step_corrected"] = c.step_corrected;
  j["nonmonotone"] = c.nonmonotone;
  j["tol"] = c.tol;
  j["max_inner"] = c.max_inner;
  j["max_outer"] = c.max_outer;
  j["penalty_tol"] = c.penalty_tol;
  j["round_threshold"] = c.round_threshold;
  j["lipschitz_samples"] = c.lipschitz_samples;
  j["seed"] = c.seed;
  j["record_trace"] = c.record_trace;
  return j;
}

inline ExperimentConfig experiment_from_json(const ordered_json& j) {
  detail::check_keys(j, "root", {"network", "solver", "experiment"});
  ExperimentConfig c;
  if (j.contains("network")) c.network = network_from_json(j.at("network"));
  if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    detail::check_keys(e, "experiment",
                       {"realizations", "schemes", "ras_prob", "master_seed",
                        "workers", "emit_throughput", "bandwidth_hz",
                        "output_dir"});
    detail::maybe(e, "realizations", c.realizations);
    if (e.contains("schemes")) {
      c.schemes.clear();
      for (const auto& s : e.at("schemes"))
        c.schemes.push_back(parse_scheme(s.get<std::string>()));
    }
    detail::maybe(e, "ras_prob", c.ras_prob);
    detail::maybe(e, "master_seed", c.master_seed);
    detail::maybe(e, "workers", c.workers);
    detail::maybe(e, "emit_throughput", c.emit_throughput);
    detail::maybe(e, "bandwidth_hz", c.bandwidth_hz);
    detail::maybe(e, "output_dir", c.output_dir);
  }
  return c;
}

inline ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["network"] = to_json(c.network);
  j["solver"] = to_json(c.solver);
  ordered_json e;
  e["realizations"] = c.realizations;
  std::vector<std::string> names;
  for (Scheme s : c.schemes) names.emplace_back(to_string(s));
  e["schemes"] = names;
  e["ras_prob"] = c.ras_prob;
  e["master_seed"] = c.master_seed;
  e["workers"] = c.workers;
  e["emit_throughput"] = c.emit_throughput;
  e["bandwidth_hz"] = c.bandwidth_hz;
  e["output_dir"] = c.output_dir;
  j["experiment"] = e;
  return j;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ordered_json j;
  in >> j;
  return experiment_from_json(j);
}

inline void save_experiment_config(const ExperimentConfig& c,
                                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << to_json(c).dump(2) << "\n";
}

// ---- result exports ----

inline void write_records_csv(const ExperimentResult& r,
                              const ExperimentConfig& cfg,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "realization,scheme,failed,weighted_sse,sum_se_unicast,"
         "sum_se_multicast,qos_violations,converged,iters,outer_rounds,"
         "wall_s";
  if (cfg.emit_throughput) out << ",weighted_throughput_mbps";
  out << "\n";
  for (const auto& rec : r.records) {
    out << rec.realization << ',' << to_string(rec.scheme) << ','
        << (rec.failed ? 1 : 0) << ',' << detail::fmt(rec.weighted_sse) << ','
        << detail::fmt(rec.sum_uni) << ',' << detail::fmt(rec.sum_multi) << ','
        << rec.qos_violations << ',' << (rec.converged ? 1 : 0) << ','
        << rec.iters << ',' << rec.outer_rounds << ','
        << detail::fmt(rec.wall_s);
    if (cfg.emit_throughput)
      out << ','
          << detail::fmt(rec.weighted_sse * cfg.bandwidth_hz / 1e6);
    out << "\n";
  }
}

inline void write_per_user_csv(const ExperimentResult& r,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "realization,scheme,kind,index,se\n";
  for (const auto& rec : r.records) {
    if (rec.failed) continue;
    for (std::size_t u = 0; u < rec.se_uni.size(); ++u)
      out << rec.realization << ',' << to_string(rec.scheme) << ",unicast,"
          << u << ',' << detail::fmt(rec.se_uni[u]) << "\n";
    for (std::size_t k = 0; k < rec.se_multi.size(); ++k)
      out << rec.realization << ',' << to_string(rec.scheme) << ",multicast,"
          << k << ',' << detail::fmt(rec.se_multi[k]) << "\n";
  }
}

inline void write_trace_csv(const std::vector<TraceEntry>& trace,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "outer,iter,g,weighted_sse,penalty_bracket,accelerated,accept_lhs,"
         "accept_rhs\n";
  for (const auto& t : trace)
    out << t.outer << ',' << t.iter << ',' << detail::fmt(t.g) << ','
        << detail::fmt(t.weighted_sse) << ',' << detail::fmt(t.bracket) << ','
        << (t.accelerated ? 1 : 0) << ',' << detail::fmt(t.accept_lhs) << ','
        << detail::fmt(t.accept_rhs) << "\n";
}

inline ordered_json summary_json(const ExperimentResult& r,
                                 const ExperimentConfig& cfg) {
  ordered_json j;
  j["config"] = to_json(cfg);
  ordered_json per;
  for (const auto& s : r.stats) {
    ordered_json e;
    e["ok"] = s.ok;
    e["failed"] = s.failed;
    e["mean_weighted_sse"] = s.mean_sse;
    e["median_weighted_sse"] = s.median_sse;
    e["sse_sorted"] = s.sse_sorted;
    per[to_string(s.scheme)] = e;
  }
  j["schemes"] = per;
  const double vs_epa =
      median_improvement(r, Scheme::ApgJoint, Scheme::EpaRas);
  const double vs_opa =
      median_improvement(r, Scheme::ApgJoint, Scheme::OpaRas);
  ordered_json imp;
  if (!std::isnan(vs_epa)) imp["apg_joint_vs_epa_ras"] = vs_epa;
  if (!std::isnan(vs_opa)) imp["apg_joint_vs_opa_ras"] = vs_opa;
  j["median_improvement"] = imp;
  j["excessive_failures"] = r.excessive_failures;
  ordered_json meta;
  {
    char buf[64];
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    meta["timestamp"] = buf;
  }
  j["metadata"] = meta;
  return j;
}

inline void write_outputs(const ExperimentResult& r,
                          const ExperimentConfig& cfg,
                          const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_records_csv(r, cfg, dir + "/records.csv");
  write_per_user_csv(r, dir + "/per_user_se.csv");
  std::ofstream out(dir + "/summary.json");
  if (!out) throw std::runtime_error("cannot open summary.json");
  out << summary_json(r, cfg).dump(2) << "\n";
}

// ---- parameter sweeps ----

// Applies a swept parameter value to the network config. Accepted names:
// aps, antennas_per_ap, unicast_users, multicast_groups (keeps the per-group
// size pattern of the first group).
inline void apply_sweep_param(NetworkConfig& c, const std::string& param,
                              int value) {
  if (param == "aps" || param == "N") {
    c.num_aps = value;
  } else if (param == "antennas_per_ap" || param == "L") {
    c.antennas_per_ap = value;
  } else if (param == "unicast_users" || param == "U") {
    c.num_unicast = value;
  } else if (param == "multicast_groups" || param == "M") {
    const int per = c.group_sizes.empty() ? 1 : c.group_sizes.front();
    c.group_sizes.assign(static_cast<std::size_t>(value), per);
  } else {
    throw std::invalid_argument("unknown sweep parameter: " + param);
  }
}

struct SweepPoint {
  int value = 0;
  ExperimentResult result;
};

inline std::vector<SweepPoint> run_sweep(const ExperimentConfig& base,
                                         const std::string& param,
                                         const std::vector<int>& values) {
  std::vector<SweepPoint> out;
  for (int v : values) {
    ExperimentConfig cfg = base;
    apply_sweep_param(cfg.network, param, v);
    SweepPoint pt;
    pt.value = v;
    pt.result = run_experiment(cfg);
    out.push_back(std::move(pt));
  }
  return out;
}

inline void write_sweep_csv(const std::vector<SweepPoint>& sweep,
                            const std::string& param,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "param,value,scheme,ok,failed,mean_weighted_sse,"
         "median_weighted_sse\n";
  for (const auto& pt : sweep)
    for (const auto& s : pt.result.stats)
      out << param << ',' << pt.value << ',' << to_string(s.scheme) << ','
          << s.ok << ',' << s.failed << ',' << detail::fmt(s.mean_sse) << ','
          << detail::fmt(s.median_sse) << "\n";
}

}  // namespace cfmm
