// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cfmm/config_io.hpp"

using namespace cfmm;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long count_lines(const std::string& text) {
  long n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig cfg;
  cfg.network.num_aps = 4;
  cfg.network.antennas_per_ap = 2;
  cfg.network.num_unicast = 2;
  cfg.network.group_sizes = {2};
  cfg.solver.max_inner = 300;
  cfg.solver.max_outer = 3;
  cfg.realizations = 2;
  cfg.workers = 1;
  cfg.master_seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("a full configuration file loads field by field") {
  const fs::path dir = fresh_dir("cfmm_io_load");
  const fs::path file = dir / "cfg.json";
  {
    std::ofstream out(file);
    out << R"({
      "network": {
        "aps": 25, "antennas_per_ap": 4, "unicast_users": 5,
        "multicast_groups": 2, "users_per_group": [3, 4],
        "area_m": 500.0, "coherence_symbols": 200, "pilot_symbols": 12,
        "dl_power_mw": 800.0, "ul_power_mw": 50.0, "noise_dbm": -90.0,
        "shadow_sigma_db": 3.0, "shadow_decorr_m": 12.0,
        "pl_const_db": -31.0, "pl_slope_db": 35.0, "seed": 42
      },
      "solver": {
        "w_uni": 0.8, "w_multi": 0.2, "mu_qos": 2.0, "qos_uni": 0.5,
        "qos_multi": 0.25, "max_inner": 1234, "nonmonotone": 0.25,
        "record_trace": true
      },
      "experiment": {
        "realizations": 7, "schemes": ["apg_joint", "epa_ras"],
        "ras_prob": 0.4, "master_seed": 99, "workers": 2,
        "emit_throughput": true, "bandwidth_hz": 10e6, "output_dir": "res"
      }
    })";
  }
  const ExperimentConfig c = load_experiment_config(file.string());
  CHECK(c.network.num_aps == 25);
  CHECK(c.network.antennas_per_ap == 4);
  CHECK(c.network.num_unicast == 5);
  CHECK(c.network.group_sizes == std::vector<int>{3, 4});
  CHECK(c.network.area_m == 500.0);
  CHECK(c.network.pilot_symbols == 12);
  CHECK(c.network.dl_power_mw == 800.0);
  CHECK(c.network.ul_power_mw == 50.0);
  CHECK(c.network.noise_dbm == -90.0);
  CHECK(c.network.shadow_sigma_db == 3.0);
  CHECK(c.network.shadow_decorr_m == 12.0);
  CHECK(c.network.pl_const_db == -31.0);
  CHECK(c.network.pl_slope_db == 35.0);
  CHECK(c.network.seed == 42);
  CHECK(c.solver.penalty.w_uni == 0.8);
  CHECK(c.solver.penalty.w_multi == 0.2);
  CHECK(c.solver.penalty.mu_qos == 2.0);
  CHECK(c.solver.penalty.qos_uni == 0.5);
  CHECK(c.solver.penalty.qos_multi == 0.25);
  CHECK(c.solver.max_inner == 1234);
  CHECK(c.solver.nonmonotone == 0.25);
  CHECK(c.solver.record_trace);
  CHECK(c.realizations == 7);
  REQUIRE(c.schemes.size() == 2);
  CHECK(c.schemes[0] == Scheme::ApgJoint);
  CHECK(c.schemes[1] == Scheme::EpaRas);
  CHECK(c.ras_prob == 0.4);
  CHECK(c.master_seed == 99);
  CHECK(c.workers == 2);
  CHECK(c.emit_throughput);
  CHECK(c.bandwidth_hz == 10e6);
  CHECK(c.output_dir == "res");
}

TEST_CASE("absent sections fall back to defaults") {
  const ExperimentConfig c = experiment_from_json(ordered_json::parse("{}"));
  const ExperimentConfig d;
  CHECK(c.network.num_aps == d.network.num_aps);
  CHECK(c.solver.tol == d.solver.tol);
  CHECK(c.realizations == d.realizations);
  CHECK(c.schemes.size() == 3);
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_AS(
      experiment_from_json(ordered_json::parse(R"({"network":{"apz":3}})")),
      std::invalid_argument);
  CHECK_THROWS_AS(
      experiment_from_json(ordered_json::parse(R"({"solvr":{}})")),
      std::invalid_argument);
  CHECK_THROWS_AS(experiment_from_json(ordered_json::parse(
                      R"({"experiment":{"scheems":[]}})")),
                  std::invalid_argument);
}

TEST_CASE("configurations survive a save/load round trip") {
  ExperimentConfig c = tiny_experiment();
  c.solver.penalty.qos_uni = 0.4;
  c.schemes = {Scheme::OpaRas, Scheme::EpaRas};
  c.emit_throughput = true;
  const fs::path dir = fresh_dir("cfmm_io_roundtrip");
  const fs::path file = dir / "cfg.json";
  save_experiment_config(c, file.string());
  const ExperimentConfig back = load_experiment_config(file.string());
  CHECK(to_json(back).dump() == to_json(c).dump());
}

TEST_CASE("group sizes accept a scalar or a list") {
  const ExperimentConfig a = experiment_from_json(ordered_json::parse(
      R"({"network":{"multicast_groups":3,"users_per_group":4}})"));
  CHECK(a.network.group_sizes == std::vector<int>{4, 4, 4});
  const ExperimentConfig b = experiment_from_json(ordered_json::parse(
      R"({"network":{"users_per_group":[2,5]}})"));
  CHECK(b.network.group_sizes == std::vector<int>{2, 5});
  CHECK_THROWS_AS(
      experiment_from_json(ordered_json::parse(
          R"({"network":{"multicast_groups":3,"users_per_group":[2,5]}})")),
      std::invalid_argument);
}

TEST_CASE("a missing config file is reported") {
  CHECK_THROWS_AS(load_experiment_config("/nonexistent/cfg.json"),
                  std::runtime_error);
}

TEST_CASE("experiment outputs are complete and reproducible") {
  const ExperimentConfig cfg = tiny_experiment();
  const ExperimentResult res = run_experiment(cfg);
  const fs::path dir = fresh_dir("cfmm_io_outputs");
  write_outputs(res, cfg, dir.string());

  const std::string records = slurp(dir / "records.csv");
  CHECK(count_lines(records) == 1 + 6);  // header + 2 realizations x 3 schemes
  CHECK(records.rfind("realization,scheme,failed,weighted_sse", 0) == 0);

  const std::string per_user = slurp(dir / "per_user_se.csv");
  CHECK(count_lines(per_user) == 1 + 6 * 4);  // 2 unicast + 2 members each

  const ordered_json summary =
      ordered_json::parse(slurp(dir / "summary.json"));
  CHECK(summary.contains("config"));
  CHECK(summary["schemes"].contains("apg_joint"));
  CHECK(summary["schemes"]["apg_joint"]["ok"] == 2);
  CHECK(summary["excessive_failures"] == false);
  CHECK(summary["median_improvement"].contains("apg_joint_vs_epa_ras"));

  // Same result, same bytes: only the summary timestamp may differ.
  const fs::path dir2 = fresh_dir("cfmm_io_outputs2");
  write_outputs(res, cfg, dir2.string());
  CHECK(slurp(dir2 / "records.csv") == records);
  CHECK(slurp(dir2 / "per_user_se.csv") == per_user);
  ordered_json s2 = ordered_json::parse(slurp(dir2 / "summary.json"));
  s2["metadata"].erase("timestamp");
  ordered_json s1 = summary;
  s1["metadata"].erase("timestamp");
  CHECK(s1.dump() == s2.dump());
}

TEST_CASE("throughput column appears only when requested") {
  ExperimentConfig cfg = tiny_experiment();
  cfg.schemes = {Scheme::EpaRas};
  cfg.realizations = 1;
  const ExperimentResult res = run_experiment(cfg);
  const fs::path dir = fresh_dir("cfmm_io_tput");
  write_records_csv(res, cfg, (dir / "plain.csv").string());
  CHECK(slurp(dir / "plain.csv").find("weighted_throughput_mbps") ==
        std::string::npos);
  cfg.emit_throughput = true;
  cfg.bandwidth_hz = 20e6;
  write_records_csv(res, cfg, (dir / "tput.csv").string());
  const std::string text = slurp(dir / "tput.csv");
  REQUIRE(text.find("weighted_throughput_mbps") != std::string::npos);
  // The throughput value is SSE * bandwidth, reported in Mbit/s.
  const double sse = res.records[0].weighted_sse;
  char expect[64];
  std::snprintf(expect, sizeof expect, "%.17g", sse * 20.0);
  CHECK(text.find(expect) != std::string::npos);
}

TEST_CASE("trace export matches the recorded entries") {
  std::vector<TraceEntry> trace(2);
  trace[0].outer = 1;
  trace[0].iter = 1;
  trace[0].g = -1.5;
  trace[0].accelerated = true;
  trace[1].outer = 1;
  trace[1].iter = 2;
  trace[1].g = -2.0;
  const fs::path dir = fresh_dir("cfmm_io_trace");
  write_trace_csv(trace, (dir / "trace.csv").string());
  const std::string text = slurp(dir / "trace.csv");
  CHECK(count_lines(text) == 3);
  CHECK(text.find("1,1,-1.5,") != std::string::npos);
  CHECK(text.find("1,2,-2,") != std::string::npos);
}

TEST_CASE("sweep parameters update the network shape") {
  NetworkConfig c;
  c.group_sizes = {3, 3};
  apply_sweep_param(c, "aps", 50);
  CHECK(c.num_aps == 50);
  apply_sweep_param(c, "L", 8);
  CHECK(c.antennas_per_ap == 8);
  apply_sweep_param(c, "unicast_users", 9);
  CHECK(c.num_unicast == 9);
  apply_sweep_param(c, "M", 4);
  CHECK(c.group_sizes == std::vector<int>{3, 3, 3, 3});
  CHECK_THROWS_AS(apply_sweep_param(c, "frequency", 1),
                  std::invalid_argument);
}

TEST_CASE("a sweep runs each value through the full experiment") {
  ExperimentConfig cfg = tiny_experiment();
  cfg.schemes = {Scheme::EpaRas};
  cfg.realizations = 1;
  const std::vector<SweepPoint> sweep = run_sweep(cfg, "aps", {4, 6});
  REQUIRE(sweep.size() == 2);
  CHECK(sweep[0].value == 4);
  CHECK(sweep[1].value == 6);
  for (const auto& pt : sweep) {
    REQUIRE(pt.result.stats.size() == 1);
    CHECK(pt.result.stats[0].ok == 1);
  }
  const fs::path dir = fresh_dir("cfmm_io_sweep");
  write_sweep_csv(sweep, "aps", (dir / "sweep.csv").string());
  const std::string text = slurp(dir / "sweep.csv");
  CHECK(count_lines(text) == 1 + 2);
  CHECK(text.find("aps,4,epa_ras,1,0,") != std::string::npos);
}
