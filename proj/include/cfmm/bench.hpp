// SPDX-License-Identifier: Apache-2.0
//
// Experiment harness: runs network realizations through one or more
// allocation schemes and aggregates weighted sum-SE statistics. Schemes:
//
//   apg_joint  full solver, joint selection and power control
//   opa_ras    random AP selection, solver-optimized powers
//   epa_ras    random AP selection, equal power split per AP
//
// All schemes inside one realization share the network and the random
// selection draw, so comparisons are paired. Every realization derives its
// own RNG streams from (master_seed, index): results do not depend on the
// worker count or completion order.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cfmm/apg.hpp"
#include "cfmm/chanstats.hpp"
#include "cfmm/netgen.hpp"
#include "cfmm/oracle.hpp"
#include "cfmm/sinr.hpp"

namespace cfmm {

enum class Scheme { ApgJoint, OpaRas, EpaRas };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::ApgJoint: return "apg_joint";
    case Scheme::OpaRas: return "opa_ras";
    case Scheme::EpaRas: return "epa_ras";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "apg_joint") return Scheme::ApgJoint;
  if (s == "opa_ras") return Scheme::OpaRas;
  if (s == "epa_ras") return Scheme::EpaRas;
  throw std::invalid_argument("unknown scheme: " + s);
}

struct ExperimentConfig {
  NetworkConfig network;
  SolverConfig solver;
  int realizations = 1;
  std::vector<Scheme> schemes = {Scheme::ApgJoint, Scheme::OpaRas,
                                 Scheme::EpaRas};
  double ras_prob = 0.5;  // per-link Bernoulli selection probability
  std::uint64_t master_seed = 1;
  int workers = 0;  // 0 = hardware concurrency
  bool emit_throughput = false;
  double bandwidth_hz = 20e6;
  std::string output_dir = "out";
};

inline void validate(const ExperimentConfig& c) {
  validate(c.network);
  if (c.realizations < 1)
    throw std::invalid_argument("realizations must be >= 1");
  if (c.schemes.empty()) throw std::invalid_argument("no schemes selected");
  if (c.ras_prob < 0.0 || c.ras_prob > 1.0)
    throw std::invalid_argument("ras_prob must lie in [0, 1]");
  if (c.emit_throughput && !(c.bandwidth_hz > 0.0))
    throw std::invalid_argument("bandwidth_hz must be positive");
}

// Random AP selection: independent Bernoulli(prob) per link, then two
// repairs. Coverage: an entity with no AP gets its largest-gain AP. Cap: an
// AP serving more than max_entities drops its smallest-gain droppable
// entities (ones still served elsewhere).
inline Association ras_association(const NetworkRealization& r, double prob,
                                   int max_entities, Rng& rng) {
  const VarDims d = dims_of(r);
  Association a;
  a.uni = Mat<std::uint8_t>(static_cast<std::size_t>(d.num_aps),
                            static_cast<std::size_t>(d.num_unicast), 0);
  a.multi = Mat<std::uint8_t>(static_cast<std::size_t>(d.num_aps),
                              static_cast<std::size_t>(d.num_groups), 0);
  // Gain of a link: unicast beta, group composite member sum.
  auto gain = [&](std::size_t ap, int c) {
    if (c < d.num_unicast) return r.beta(ap, static_cast<std::size_t>(c));
    const int m = c - d.num_unicast;
    double s = 0.0;
    for (int k = 0; k < r.groups.size(m); ++k)
      s += r.lambda(ap, static_cast<std::size_t>(r.groups.flat(m, k)));
    return s;
  };
  auto set = [&](std::size_t ap, int c, std::uint8_t v) {
    if (c < d.num_unicast)
      a.uni(ap, static_cast<std::size_t>(c)) = v;
    else
      a.multi(ap, static_cast<std::size_t>(c - d.num_unicast)) = v;
  };
  auto get = [&](std::size_t ap, int c) -> bool {
    return c < d.num_unicast
               ? a.uni(ap, static_cast<std::size_t>(c)) != 0
               : a.multi(ap, static_cast<std::size_t>(c - d.num_unicast)) != 0;
  };

  for (int ap = 0; ap < d.num_aps; ++ap)
    for (int c = 0; c < d.per_ap(); ++c)
      set(static_cast<std::size_t>(ap), c, rng.uniform() < prob ? 1 : 0);

  std::vector<int> served(static_cast<std::size_t>(d.per_ap()), 0);
  for (int c = 0; c < d.per_ap(); ++c) {
    int count = 0;
    for (int ap = 0; ap < d.num_aps; ++ap)
      if (get(static_cast<std::size_t>(ap), c)) ++count;
    served[static_cast<std::size_t>(c)] = count;
    if (count == 0) {
      int best = 0;
      double best_gain = -1.0;
      for (int ap = 0; ap < d.num_aps; ++ap) {
        const double g = gain(static_cast<std::size_t>(ap), c);
        if (g > best_gain) {
          best_gain = g;
          best = ap;
        }
      }
      set(static_cast<std::size_t>(best), c, 1);
      served[static_cast<std::size_t>(c)] = 1;
    }
  }

  const int cap = max_entities > 0 ? max_entities : d.per_ap();
  for (int ap = 0; ap < d.num_aps; ++ap) {
    const std::size_t aap = static_cast<std::size_t>(ap);
    int load = 0;
    for (int c = 0; c < d.per_ap(); ++c)
      if (get(aap, c)) ++load;
    while (load > cap) {
      int drop = -1;
      double drop_gain = 0.0;
      for (int c = 0; c < d.per_ap(); ++c) {
        if (!get(aap, c) || served[static_cast<std::size_t>(c)] < 2) continue;
        const double g = gain(aap, c);
        if (drop < 0 || g < drop_gain) {
          drop = c;
          drop_gain = g;
        }
      }
      if (drop < 0) break;  // everyone here is this AP's sole server
      set(aap, drop, 0);
      served[static_cast<std::size_t>(drop)] -= 1;
      --load;
    }
  }
  return a;
}

// Equal power split: each AP divides its budget evenly over the entities it
// serves, which meets the per-AP power constraint with equality.
inline Allocation epa_allocation(const Association& a,
                                 const EstimationStats& st,
                                 const NetworkRealization& r) {
  const VarDims d = dims_of(r);
  const double l = static_cast<double>(r.cfg.antennas_per_ap);
  Allocation al;
  al.assoc_uni = a.uni;
  al.assoc_multi = a.multi;
  al.eta_uni = Mat<double>(a.uni.rows(), a.uni.cols(), 0.0);
  al.eta_multi = Mat<double>(a.multi.rows(), a.multi.cols(), 0.0);
  for (int ap = 0; ap < d.num_aps; ++ap) {
    const std::size_t aap = static_cast<std::size_t>(ap);
    int count = 0;
    for (std::size_t u = 0; u < a.uni.cols(); ++u)
      if (a.uni(aap, u)) ++count;
    for (std::size_t m = 0; m < a.multi.cols(); ++m)
      if (a.multi(aap, m)) ++count;
    if (count == 0) continue;
    const double share = 1.0 / (l * static_cast<double>(count));
    for (std::size_t u = 0; u < a.uni.cols(); ++u)
      if (a.uni(aap, u) && st.gamma(aap, u) > 0.0)
        al.eta_uni(aap, u) = share / st.gamma(aap, u);
    for (std::size_t m = 0; m < a.multi.cols(); ++m)
      if (a.multi(aap, m) && st.zeta(aap, m) > 0.0)
        al.eta_multi(aap, m) = share / st.zeta(aap, m);
  }
  return al;
}

struct ExperimentRecord {
  int realization = 0;
  Scheme scheme = Scheme::EpaRas;
  bool failed = false;
  std::string error;
  double weighted_sse = 0.0;
  double sum_uni = 0.0, sum_multi = 0.0;
  std::vector<double> se_uni, se_multi;
  int qos_violations = 0;
  bool converged = true;
  long iters = 0;
  int outer_rounds = 0;
  double wall_s = 0.0;
};

struct SchemeStats {
  Scheme scheme = Scheme::EpaRas;
  int ok = 0;
  int failed = 0;
  double mean_sse = 0.0;
  double median_sse = 0.0;
  std::vector<double> sse_sorted;
};

struct ExperimentResult {
  std::vector<ExperimentRecord> records;  // realization-major, scheme order
  std::vector<SchemeStats> stats;
  bool excessive_failures = false;  // more than 10% of runs failed
};

inline double median_of_sorted(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::vector<SchemeStats> summarize(
    const std::vector<ExperimentRecord>& records,
    const std::vector<Scheme>& schemes) {
  std::vector<SchemeStats> out;
  for (Scheme s : schemes) {
    SchemeStats st;
    st.scheme = s;
    for (const auto& rec : records) {
      if (rec.scheme != s) continue;
      if (rec.failed) {
        ++st.failed;
        continue;
      }
      ++st.ok;
      st.sse_sorted.push_back(rec.weighted_sse);
    }
    std::sort(st.sse_sorted.begin(), st.sse_sorted.end());
    if (st.ok > 0) {
      double sum = 0.0;
      for (double v : st.sse_sorted) sum += v;
      st.mean_sse = sum / static_cast<double>(st.ok);
      st.median_sse = median_of_sorted(st.sse_sorted);
    }
    out.push_back(std::move(st));
  }
  return out;
}

// Runs every requested scheme on realization `index`. Streams: the network
// seed, the selection draw, and each scheme's solver seed are all derived
// from (master_seed, index), so schemes see identical networks and paired
// selection draws.
inline std::vector<ExperimentRecord> run_realization(
    const ExperimentConfig& cfg, int index) {
  NetworkConfig ncfg = cfg.network;
  ncfg.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(index) * 4);
  const NetworkRealization real = generate_network(ncfg);
  const EstimationStats stats = compute_stats(real);

  const bool needs_ras =
      std::find(cfg.schemes.begin(), cfg.schemes.end(), Scheme::OpaRas) !=
          cfg.schemes.end() ||
      std::find(cfg.schemes.begin(), cfg.schemes.end(), Scheme::EpaRas) !=
          cfg.schemes.end();
  Association ras;
  if (needs_ras) {
    Rng rng(derive_seed(cfg.master_seed,
                        static_cast<std::uint64_t>(index) * 4 + 1));
    ras = ras_association(real, cfg.ras_prob,
                          cfg.solver.penalty.max_aps_per_entity, rng);
  }

  std::vector<ExperimentRecord> out;
  for (std::size_t si = 0; si < cfg.schemes.size(); ++si) {
    const Scheme scheme = cfg.schemes[si];
    ExperimentRecord rec;
    rec.realization = index;
    rec.scheme = scheme;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      SolverConfig scfg = cfg.solver;
      scfg.seed = derive_seed(cfg.master_seed,
                              static_cast<std::uint64_t>(index) * 4 + 2 +
                                  (scheme == Scheme::OpaRas ? 1 : 0));
      SeReport rep;
      if (scheme == Scheme::EpaRas) {
        const Allocation al = epa_allocation(ras, stats, real);
        rep = se_report(al, stats, real, scfg.penalty.w_uni,
                        scfg.penalty.w_multi);
      } else {
        SolveResult res = scheme == Scheme::ApgJoint
                              ? solve_joint(stats, real, scfg)
                              : solve_power_only(stats, real, scfg, ras);
        rep = std::move(res.report);
        rec.converged = res.converged;
        rec.iters = res.total_iters;
        rec.outer_rounds = res.outer_rounds;
      }
      rec.weighted_sse = rep.weighted_sse;
      rec.sum_uni = rep.sum_uni;
      rec.sum_multi = rep.sum_multi;
      rec.qos_violations = count_qos_violations(rep, cfg.solver.penalty.qos_uni,
                                                cfg.solver.penalty.qos_multi);
      rec.se_uni = std::move(rep.se_uni);
      rec.se_multi = std::move(rep.se_multi);
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                               t0)
                     .count();
    out.push_back(std::move(rec));
  }
  return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentResult res;
  std::vector<std::vector<ExperimentRecord>> slots(
      static_cast<std::size_t>(cfg.realizations));
  int workers = cfg.workers > 0
                    ? cfg.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min(workers, cfg.realizations);

  if (workers == 1) {
    for (int i = 0; i < cfg.realizations; ++i)
      slots[static_cast<std::size_t>(i)] = run_realization(cfg, i);
  } else {
    std::atomic<int> next{0};
    auto body = [&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= cfg.realizations) return;
        slots[static_cast<std::size_t>(i)] = run_realization(cfg, i);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }

  for (auto& v : slots)
    for (auto& rec : v) res.records.push_back(std::move(rec));
  res.stats = summarize(res.records, cfg.schemes);
  long failed = 0;
  for (const auto& rec : res.records)
    if (rec.failed) ++failed;
  res.excessive_failures =
      failed * 10 > static_cast<long>(res.records.size());
  return res;
}

// Improvement of scheme `a` over scheme `b` in median weighted SSE, as a
// ratio minus one; NaN when either median is unavailable.
inline double median_improvement(const ExperimentResult& r, Scheme a,
                                 Scheme b) {
  const SchemeStats* pa = nullptr;
  const SchemeStats* pb = nullptr;
  for (const auto& s : r.stats) {
    if (s.scheme == a) pa = &s;
    if (s.scheme == b) pb = &s;
  }
  if (!pa || !pb || pa->ok == 0 || pb->ok == 0 || pb->median_sse == 0.0)
    return std::nan("");
  return pa->median_sse / pb->median_sse - 1.0;
}

}  // namespace cfmm
