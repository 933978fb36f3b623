// SPDX-License-Identifier: Apache-2.0
//
// Command-line simulator. Subcommands:
//   simulate         run an experiment from a config file, write CSV + JSON
//   validate-oracle  Monte-Carlo check of the closed-form SINR expressions
//   sweep            repeat an experiment across a network parameter
//
// Exit code is nonzero on errors and on failed oracle gates.

#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfmm/bench.hpp"
#include "cfmm/config_io.hpp"
#include "cfmm/oracle.hpp"

namespace {

void print_scheme_table(const cfmm::ExperimentResult& res) {
  std::printf("%-10s %6s %6s %14s %14s\n", "scheme", "ok", "fail", "mean_sse",
              "median_sse");
  for (const auto& s : res.stats)
    std::printf("%-10s %6d %6d %14.6f %14.6f\n", cfmm::to_string(s.scheme),
                s.ok, s.failed, s.mean_sse, s.median_sse);
  const double vs_epa = cfmm::median_improvement(res, cfmm::Scheme::ApgJoint,
                                                 cfmm::Scheme::EpaRas);
  const double vs_opa = cfmm::median_improvement(res, cfmm::Scheme::ApgJoint,
                                                 cfmm::Scheme::OpaRas);
  if (!std::isnan(vs_epa))
    std::printf("apg_joint vs epa_ras: %+.1f%% median weighted SSE\n",
                100.0 * vs_epa);
  if (!std::isnan(vs_opa))
    std::printf("apg_joint vs opa_ras: %+.1f%% median weighted SSE\n",
                100.0 * vs_opa);
  if (res.excessive_failures)
    std::printf("WARNING: more than 10%% of runs failed\n");
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 int workers, long long seed,
                 const std::vector<std::string>& schemes) {
  cfmm::ExperimentConfig cfg = cfmm::load_experiment_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (workers > 0) cfg.workers = workers;
  if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
  if (!schemes.empty()) {
    cfg.schemes.clear();
    for (const auto& s : schemes) cfg.schemes.push_back(cfmm::parse_scheme(s));
  }
  cfmm::ExperimentResult res = cfmm::run_experiment(cfg);
  cfmm::write_outputs(res, cfg, cfg.output_dir);

  // Iteration traces are only collected when the config asks for them; dump
  // the first realization's solver runs for inspection.
  if (cfg.solver.record_trace) {
    cfmm::NetworkConfig ncfg = cfg.network;
    ncfg.seed = cfmm::derive_seed(cfg.master_seed, 0);
    const cfmm::NetworkRealization real = cfmm::generate_network(ncfg);
    const cfmm::EstimationStats stats = cfmm::compute_stats(real);
    for (cfmm::Scheme s : cfg.schemes) {
      if (s == cfmm::Scheme::EpaRas) continue;
      cfmm::SolverConfig scfg = cfg.solver;
      scfg.record_trace = true;
      scfg.seed = cfmm::derive_seed(cfg.master_seed,
                                    2 + (s == cfmm::Scheme::OpaRas ? 1 : 0));
      cfmm::SolveResult sr;
      if (s == cfmm::Scheme::ApgJoint) {
        sr = cfmm::solve_joint(stats, real, scfg);
      } else {
        cfmm::Rng rng(cfmm::derive_seed(cfg.master_seed, 1));
        cfmm::Association ras = cfmm::ras_association(
            real, cfg.ras_prob, scfg.penalty.max_aps_per_entity, rng);
        sr = cfmm::solve_power_only(stats, real, scfg, ras);
      }
      cfmm::write_trace_csv(sr.trace, cfg.output_dir + "/trace_" +
                                          cfmm::to_string(s) + "_r0.csv");
    }
  }

  print_scheme_table(res);
  std::printf("outputs written to %s\n", cfg.output_dir.c_str());
  return 0;
}

int cmd_validate_oracle(const std::string& config_path, long draws,
                        long long seed) {
  cfmm::ExperimentConfig cfg = cfmm::load_experiment_config(config_path);
  if (seed >= 0) cfg.network.seed = static_cast<std::uint64_t>(seed);
  const cfmm::NetworkRealization real = cfmm::generate_network(cfg.network);
  const cfmm::EstimationStats stats = cfmm::compute_stats(real);

  const cfmm::McTrainingStats ts =
      cfmm::estimate_training_stats(real, stats, draws, cfg.network.seed + 1);
  double worst_stat = 0.0;
  for (std::size_t i = 0; i < stats.gamma.storage().size(); ++i) {
    const double c = stats.gamma.storage()[i];
    if (c > 0.0)
      worst_stat = std::max(
          worst_stat, std::abs(ts.gamma_emp.storage()[i] - c) / c);
  }
  for (std::size_t i = 0; i < stats.xi.storage().size(); ++i) {
    const double c = stats.xi.storage()[i];
    if (c > 0.0)
      worst_stat =
          std::max(worst_stat, std::abs(ts.xi_emp.storage()[i] - c) / c);
  }
  for (std::size_t i = 0; i < stats.zeta.storage().size(); ++i) {
    const double c = stats.zeta.storage()[i];
    if (c > 0.0)
      worst_stat =
          std::max(worst_stat, std::abs(ts.zeta_emp.storage()[i] - c) / c);
  }
  std::printf("estimation stats: worst relative error %.4f%% over %ld draws\n",
              100.0 * worst_stat, draws);
  std::printf("cross-pilot correlation: max %.2f standard errors\n",
              ts.max_cross_corr_z);

  cfmm::Rng rng(cfmm::derive_seed(cfg.master_seed, 1));
  const cfmm::Association ras = cfmm::ras_association(
      real, cfg.ras_prob, cfg.solver.penalty.max_aps_per_entity, rng);
  const cfmm::Allocation al = cfmm::epa_allocation(ras, stats, real);
  const cfmm::McCertification cert =
      cfmm::certify_uatf(al, stats, real, draws, cfg.network.seed + 2);
  std::printf("closed-form SINR vs Monte-Carlo: max relative error %.4f%%\n",
              100.0 * cert.max_rel_err);
  double worst_power = 0.0;
  for (std::size_t ap = 0; ap < cert.power_emp.size(); ++ap) {
    const double slack = cert.power_emp[ap] - 1.0;
    const double z = cert.power_stderr[ap] > 0.0
                         ? slack / cert.power_stderr[ap]
                         : (slack > 0.0 ? 1e9 : 0.0);
    worst_power = std::max(worst_power, z);
  }
  std::printf("per-AP power: worst budget excess %.2f standard errors\n",
              worst_power);

  // Gates are calibrated at 100000 draws; the achievable accuracy of a
  // smaller run is limited by sampling noise, which shrinks as 1/sqrt(draws).
  const double widen = std::sqrt(std::max(1.0, 100000.0 / draws));
  const bool ok = worst_stat <= 0.01 * widen &&
                  cert.max_rel_err <= 0.03 * widen && worst_power <= 3.0;
  std::printf("%s\n", ok ? "oracle gates PASSED" : "oracle gates FAILED");
  return ok ? 0 : 1;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::vector<int>& values, const std::string& out_dir,
              int workers) {
  cfmm::ExperimentConfig cfg = cfmm::load_experiment_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (workers > 0) cfg.workers = workers;
  const std::vector<cfmm::SweepPoint> sweep =
      cfmm::run_sweep(cfg, param, values);
  std::filesystem::create_directories(cfg.output_dir);
  for (const auto& pt : sweep) {
    cfmm::ExperimentConfig sub = cfg;
    cfmm::apply_sweep_param(sub.network, param, pt.value);
    cfmm::write_outputs(pt.result, sub,
                        cfg.output_dir + "/" + param + "_" +
                            std::to_string(pt.value));
  }
  cfmm::write_sweep_csv(sweep, param, cfg.output_dir + "/sweep_summary.csv");
  for (const auto& pt : sweep) {
    std::printf("--- %s = %d ---\n", param.c_str(), pt.value);
    print_scheme_table(pt.result);
  }
  std::printf("outputs written to %s\n", cfg.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Joint unicast/multicast cell-free massive MIMO simulator: network "
      "generation, closed-form spectral efficiency, AP selection and power "
      "control"};
  app.require_subcommand(1);

  std::string config_path, out_dir, param;
  int workers = 0;
  long long seed = -1;
  long draws = 100000;
  std::vector<std::string> schemes;
  std::vector<int> values;

  auto* sim = app.add_subcommand("simulate", "run an experiment");
  sim->add_option("--config", config_path, "JSON config file")->required();
  sim->add_option("--out", out_dir, "output directory");
  sim->add_option("--workers", workers, "worker threads (0 = hardware)");
  sim->add_option("--seed", seed, "override master seed");
  sim->add_option("--schemes", schemes,
                  "subset of: apg_joint opa_ras epa_ras")
      ->delimiter(',');

  auto* val = app.add_subcommand("validate-oracle",
                                 "Monte-Carlo check of the closed forms");
  val->add_option("--config", config_path, "JSON config file")->required();
  val->add_option("--draws", draws, "Monte-Carlo draws (>= 1000)");
  val->add_option("--seed", seed, "override network seed");

  auto* sw = app.add_subcommand("sweep", "repeat across a network parameter");
  sw->add_option("--config", config_path, "JSON config file")->required();
  sw->add_option("--param", param,
                 "aps | antennas_per_ap | unicast_users | multicast_groups")
      ->required();
  sw->add_option("--values", values, "comma-separated values")
      ->required()
      ->delimiter(',');
  sw->add_option("--out", out_dir, "output directory");
  sw->add_option("--workers", workers, "worker threads (0 = hardware)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(config_path, out_dir, workers, seed, schemes);
    if (val->parsed()) return cmd_validate_oracle(config_path, draws, seed);
    if (sw->parsed())
      return cmd_sweep(config_path, param, values, out_dir, workers);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
