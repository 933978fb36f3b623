// SPDX-License-Identifier: Apache-2.0
//
// Accelerated projected gradient solver with a nonmonotone acceptance rule
// for the penalized joint selection / power-control objective, plus the
// post-solve rounding and power recovery that turn the continuous solution
// into a binary association with feasible power coefficients.
//
// One inner iteration: extrapolate from the momentum pair, take a projected
// gradient step from the extrapolated point, and accept it if its objective
// beats a running weighted average of past values minus a proximity margin;
// otherwise fall back to a projected step from the current iterate and keep
// the better of the two candidates. The penalty multiplier grows on an outer
// schedule until the constraint penalties vanish.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cfmm/chanstats.hpp"
#include "cfmm/netgen.hpp"
#include "cfmm/penalty.hpp"
#include "cfmm/project.hpp"
#include "cfmm/rng.hpp"
#include "cfmm/sinr.hpp"

namespace cfmm {

struct SolverConfig {
  PenaltyConfig penalty;
  double step_extrapolated = 0.0;  // 0 = set from the sampled curvature bound
  double step_corrected = 0.0;
  double nonmonotone = 0.5;        // 0 = strictly monotone acceptance
  double tol = 1e-5;               // relative stop tolerance
  int max_inner = 5000;
  int max_outer = 10;
  double penalty_tol = 1e-6;       // target for the mu-weighted penalty sum
  double round_threshold = 0.5;    // association keeps links with z^2 >= this
  int lipschitz_samples = 100;
  std::uint64_t seed = 1;
  bool record_trace = false;
};

struct TraceEntry {
  int outer = 0;
  int iter = 0;           // within the outer round
  double g = 0.0;         // accepted objective value
  double weighted_sse = 0.0;
  double bracket = 0.0;   // mu-weighted penalty sum at the accepted point
  bool accelerated = false;
  double accept_lhs = 0.0;  // g at the extrapolated-step candidate
  double accept_rhs = 0.0;  // running average minus proximity margin
};

class solver_error : public std::runtime_error {
 public:
  explicit solver_error(const std::string& msg, std::vector<TraceEntry> tr = {})
      : std::runtime_error(msg), trace(std::move(tr)) {}
  std::vector<TraceEntry> trace;
};

struct ApgState {
  SolverVars cur, prev, tilde;
  double q_prev = 0.0, q = 1.0;
  double avg_g = 0.0;   // nonmonotone reference value
  double avg_wt = 1.0;  // its accumulated weight
  int iter = 0;
  std::vector<double> g_history;  // accepted objective values, oldest first
  Breakdown last;                 // breakdown at cur
  double g_rel = 1.0, f_rel = 1.0;
};

// Binary AP-to-entity association, columns as in SolverVars rows.
struct Association {
  Mat<std::uint8_t> uni;    // num_aps x num_unicast
  Mat<std::uint8_t> multi;  // num_aps x num_groups
};

inline double update_q(double q) {
  return 0.5 * (1.0 + std::sqrt(4.0 * q * q + 1.0));
}

// Weighted running average of accepted objective values; weight 0 reduces to
// "latest value", weight near 1 to a long memory.
inline std::pair<double, double> update_cb(double avg, double wt, double g_new,
                                           double nonmonotone) {
  const double wt_new = nonmonotone * wt + 1.0;
  const double avg_new = (nonmonotone * wt * avg + g_new) / wt_new;
  return {avg_new, wt_new};
}

inline SolverVars extrapolate(const ApgState& st) {
  SolverVars bar = st.cur;
  const double a = st.q_prev / st.q;
  const double b = (st.q_prev - 1.0) / st.q;
  for (std::size_t i = 0; i < bar.v.size(); ++i)
    bar.v[i] += a * (st.tilde.v[i] - st.cur.v[i]) +
                b * (st.cur.v[i] - st.prev.v[i]);
  return bar;
}

// Association from thresholded selection indicators, with coverage repair:
// an entity left with no AP gets its largest-indicator AP (lowest index on
// ties).
inline Association round_association(const SolverVars& s, double threshold) {
  const VarDims& d = s.dims;
  Association a;
  a.uni = Mat<std::uint8_t>(static_cast<std::size_t>(d.num_aps),
                            static_cast<std::size_t>(d.num_unicast), 0);
  a.multi = Mat<std::uint8_t>(static_cast<std::size_t>(d.num_aps),
                              static_cast<std::size_t>(d.num_groups), 0);
  for (int c = 0; c < d.per_ap(); ++c) {
    bool covered = false;
    int best_ap = 0;
    double best_z = -1.0;
    for (int ap = 0; ap < d.num_aps; ++ap) {
      const double zv = s.z(ap, c);
      const bool on = zv * zv >= threshold;
      if (on) covered = true;
      if (zv > best_z) {
        best_z = zv;
        best_ap = ap;
      }
      const std::size_t aap = static_cast<std::size_t>(ap);
      if (c < d.num_unicast)
        a.uni(aap, static_cast<std::size_t>(c)) = on ? 1 : 0;
      else
        a.multi(aap, static_cast<std::size_t>(c - d.num_unicast)) = on ? 1 : 0;
    }
    if (!covered) {
      const std::size_t aap = static_cast<std::size_t>(best_ap);
      if (c < d.num_unicast)
        a.uni(aap, static_cast<std::size_t>(c)) = 1;
      else
        a.multi(aap, static_cast<std::size_t>(c - d.num_unicast)) = 1;
    }
  }
  return a;
}

struct PowerRecovery {
  Allocation alloc;
  // (ap, column) pairs associated to a zero-variance estimate; they carry no
  // power and are reported rather than silently kept.
  std::vector<std::pair<int, int>> degenerate;
};

// Power coefficients from the continuous solution: eta = theta^2 / estimate
// variance on kept links, zero elsewhere. If rounding pushed an AP past its
// budget, that AP's coefficients are scaled down uniformly to equality.
inline PowerRecovery recover_power(const SolverVars& s, const Association& a,
                                   const EstimationStats& st,
                                   const NetworkRealization& r) {
  const VarDims& d = s.dims;
  const double l = static_cast<double>(r.cfg.antennas_per_ap);
  PowerRecovery out;
  out.alloc.assoc_uni = a.uni;
  out.alloc.assoc_multi = a.multi;
  out.alloc.eta_uni = Mat<double>(a.uni.rows(), a.uni.cols(), 0.0);
  out.alloc.eta_multi = Mat<double>(a.multi.rows(), a.multi.cols(), 0.0);
  for (int ap = 0; ap < d.num_aps; ++ap) {
    const std::size_t aap = static_cast<std::size_t>(ap);
    double used = 0.0;  // antennas * sum of kept theta^2
    for (int c = 0; c < d.per_ap(); ++c) {
      const double th = s.theta(ap, c);
      if (c < d.num_unicast) {
        const std::size_t u = static_cast<std::size_t>(c);
        if (!a.uni(aap, u)) continue;
        const double g = st.gamma(aap, u);
        if (g == 0.0) {
          out.degenerate.emplace_back(ap, c);
          continue;
        }
        out.alloc.eta_uni(aap, u) = th * th / g;
        used += l * th * th;
      } else {
        const std::size_t m = static_cast<std::size_t>(c - d.num_unicast);
        if (!a.multi(aap, m)) continue;
        const double z = st.zeta(aap, m);
        if (z == 0.0) {
          out.degenerate.emplace_back(ap, c);
          continue;
        }
        out.alloc.eta_multi(aap, m) = th * th / z;
        used += l * th * th;
      }
    }
    if (used > 1.0) {
      const double fix = 1.0 / used;
      for (std::size_t u = 0; u < out.alloc.eta_uni.cols(); ++u)
        out.alloc.eta_uni(aap, u) *= fix;
      for (std::size_t m = 0; m < out.alloc.eta_multi.cols(); ++m)
        out.alloc.eta_multi(aap, m) *= fix;
    }
  }
  return out;
}

struct SolveResult {
  Allocation alloc;
  SeReport report;
  SolverVars vars;  // final continuous point
  bool converged = false;      // penalties vanished and the inner loop settled
  bool qos_met = true;
  int outer_rounds = 0;
  long total_iters = 0;
  double final_bracket = 0.0;
  double final_multiplier = 0.0;
  std::vector<std::pair<int, int>> degenerate;
  std::vector<TraceEntry> trace;
};

// Solver engine bound to one realization. `frozen`, when given, fixes the
// association: z stays at the given 0/1 pattern and theta is confined to its
// support, leaving a pure power-control problem.
class ApgSolver {
 public:
  ApgSolver(const EstimationStats& st, const NetworkRealization& r,
            const SolverConfig& cfg, const Association* frozen = nullptr)
      : st_(st), r_(r), cfg_(cfg), obj_(st, r, cfg.penalty), frozen_(frozen) {
    dims_ = dims_of(r);
    if (frozen_) {
      const std::size_t n = static_cast<std::size_t>(dims_.num_aps);
      if (frozen_->uni.rows() != n || frozen_->multi.rows() != n ||
          frozen_->uni.cols() != static_cast<std::size_t>(dims_.num_unicast) ||
          frozen_->multi.cols() != static_cast<std::size_t>(dims_.num_groups))
        throw std::invalid_argument(
            "frozen association shape does not match the realization");
    }
    k_max_ = cfg.penalty.max_aps_per_entity > 0
                 ? static_cast<double>(cfg.penalty.max_aps_per_entity)
                 : static_cast<double>(dims_.per_ap());
    x_mult_ = cfg.penalty.x0;
    alpha_bar_ = cfg.step_extrapolated;
    alpha_ = cfg.step_corrected;
  }

  const VarDims& dims() const { return dims_; }
  double penalty_multiplier() const { return x_mult_; }
  void set_penalty_multiplier(double x) { x_mult_ = x; }
  void set_steps(double extrapolated, double corrected) {
    alpha_bar_ = extrapolated;
    alpha_ = corrected;
  }
  double step_extrapolated() const { return alpha_bar_; }
  PenalizedObjective& objective() { return obj_; }
  Breakdown eval(const SolverVars& s) { return obj_.eval(s, x_mult_); }

  // Clamp variables to the feasible set (and onto the frozen association).
  void make_feasible(SolverVars& s) {
    project_vars(s, r_.cfg.antennas_per_ap, k_max_);
    if (frozen_) apply_mask(s);
  }

  SolverVars draw_feasible(Rng& rng) {
    SolverVars s = SolverVars::zeros(dims_);
    const int b = dims_.block();
    for (int i = 0; i < b; ++i) s.v[static_cast<std::size_t>(i)] = rng.uniform();
    for (int i = 0; i < b; ++i)
      s.v[static_cast<std::size_t>(b + i)] = rng.uniform();
    make_feasible(s);
    return s;
  }

  // Largest sampled gradient-difference ratio over random feasible pairs;
  // used as a curvature bound to size the steps.
  double estimate_curvature(std::uint64_t seed, int samples) {
    Rng rng(seed);
    double best = 0.0;
    std::vector<double> ga, gb;
    for (int i = 0; i < samples; ++i) {
      SolverVars a = draw_feasible(rng);
      SolverVars b = draw_feasible(rng);
      obj_.gradient(a, x_mult_, ga);
      obj_.gradient(b, x_mult_, gb);
      if (frozen_) {
        mask_gradient(ga);
        mask_gradient(gb);
      }
      double dg = 0.0, dx = 0.0;
      for (std::size_t j = 0; j < ga.size(); ++j) {
        const double e = ga[j] - gb[j];
        dg += e * e;
        const double f = a.v[j] - b.v[j];
        dx += f * f;
      }
      if (dx > 0.0) best = std::max(best, std::sqrt(dg / dx));
    }
    return best;
  }

  void size_steps_from_curvature(std::uint64_t seed) {
    const double j = estimate_curvature(seed, cfg_.lipschitz_samples);
    const double a = j > 1e-12 ? 1.0 / (2.0 * j) : 1.0;
    alpha_bar_ = cfg_.step_extrapolated > 0.0 ? cfg_.step_extrapolated : a;
    alpha_ = cfg_.step_corrected > 0.0 ? cfg_.step_corrected : a;
  }

  // Initial point: uniform random square-root powers, full selection (or the
  // frozen pattern), projected feasible.
  ApgState init_state(std::uint64_t seed) {
    SolverVars s = SolverVars::zeros(dims_);
    Rng rng(seed);
    const int b = dims_.block();
    for (int i = 0; i < b; ++i) s.v[static_cast<std::size_t>(i)] = rng.uniform();
    for (int i = 0; i < b; ++i) s.v[static_cast<std::size_t>(b + i)] = 1.0;
    make_feasible(s);
    return init_state_at(std::move(s));
  }

  ApgState init_state_at(SolverVars s) {
    ApgState st;
    st.cur = std::move(s);
    st.prev = st.cur;
    st.tilde = st.cur;
    st.last = obj_.eval(st.cur, x_mult_);
    if (!std::isfinite(st.last.g))
      throw solver_error("objective is not finite at the initial point");
    st.avg_g = st.last.g;
    st.avg_wt = 1.0;
    st.g_history = {st.last.g};
    return st;
  }

  // One accelerated projected-gradient iteration with nonmonotone acceptance.
  TraceEntry iterate(ApgState& st) {
    const double zeta = cfg_.nonmonotone;
    SolverVars bar = extrapolate(st);
    obj_.gradient(bar, x_mult_, grad_);
    if (frozen_) mask_gradient(grad_);
    SolverVars cand = bar;
    for (std::size_t i = 0; i < cand.v.size(); ++i)
      cand.v[i] -= alpha_bar_ * grad_[i];
    make_feasible(cand);
    Breakdown cand_bd = obj_.eval(cand, x_mult_);

    double dist2 = 0.0;
    for (std::size_t i = 0; i < cand.v.size(); ++i) {
      const double e = cand.v[i] - bar.v[i];
      dist2 += e * e;
    }
    const double rhs = st.avg_g - zeta * dist2;

    TraceEntry te;
    te.iter = st.iter + 1;
    te.accept_lhs = cand_bd.g;
    te.accept_rhs = rhs;

    SolverVars* next = &cand;
    Breakdown* next_bd = &cand_bd;
    SolverVars corr;
    Breakdown corr_bd;
    if (cand_bd.g <= rhs) {
      te.accelerated = true;
    } else {
      te.accelerated = false;
      obj_.gradient(st.cur, x_mult_, grad_);
      if (frozen_) mask_gradient(grad_);
      // The sampled curvature bound can undershoot; halve the fallback step
      // until it does not climb above the acceptance reference.
      double a = alpha_;
      for (int tries = 0;; ++tries) {
        corr = st.cur;
        for (std::size_t i = 0; i < corr.v.size(); ++i)
          corr.v[i] -= a * grad_[i];
        make_feasible(corr);
        corr_bd = obj_.eval(corr, x_mult_);
        if (corr_bd.g <= st.avg_g || tries >= 40) break;
        a *= 0.5;
      }
      if (corr_bd.g <= cand_bd.g) {
        next = &corr;
        next_bd = &corr_bd;
      }
    }

    if (!std::isfinite(next_bd->g))
      throw solver_error("objective became non-finite during iteration");

    const double q_next = update_q(st.q);
    st.q_prev = st.q;
    st.q = q_next;
    const auto cb = update_cb(st.avg_g, st.avg_wt, next_bd->g, zeta);
    st.avg_g = cb.first;
    st.avg_wt = cb.second;

    const double f_prev = st.last.weighted_sse;
    st.prev = std::move(st.cur);
    if (next == &cand) {
      st.cur = std::move(cand);
      st.tilde = st.cur;
      st.last = std::move(cand_bd);
    } else {
      st.cur = std::move(corr);
      st.tilde = std::move(cand);
      st.last = std::move(corr_bd);
    }
    st.iter += 1;
    st.g_history.push_back(st.last.g);

    const std::size_t h = st.g_history.size();
    st.g_rel = 1.0;
    if (h >= 11) {
      const double now = st.g_history[h - 1];
      const double then = st.g_history[h - 11];
      st.g_rel = std::abs(now - then) / std::max(std::abs(now), 1e-30);
    }
    const double f_now = st.last.weighted_sse;
    st.f_rel = std::abs(f_now - f_prev) / std::max(std::abs(f_now), 1e-30);

    te.g = st.last.g;
    te.weighted_sse = st.last.weighted_sse;
    te.bracket = st.last.bracket;
    return te;
  }

  bool stop_ready(const ApgState& st) const {
    if (st.g_history.size() >= 11 && st.g_rel <= cfg_.tol) return true;
    if (st.iter >= 1 && st.f_rel <= cfg_.tol) return true;
    return false;
  }

  SolveResult solve() {
    SolveResult res;
    x_mult_ = cfg_.penalty.x0;
    ApgState st = init_state(derive_seed(cfg_.seed, 0));
    bool settled = false;
    int outer = 0;
    try {
      for (outer = 1; outer <= cfg_.max_outer; ++outer) {
        size_steps_from_curvature(
            derive_seed(cfg_.seed, 1000 + static_cast<std::uint64_t>(outer)));
        st = init_state_at(std::move(st.cur));
        settled = false;
        for (int it = 0; it < cfg_.max_inner; ++it) {
          TraceEntry te = iterate(st);
          te.outer = outer;
          res.total_iters += 1;
          if (cfg_.record_trace) res.trace.push_back(te);
          if (stop_ready(st)) {
            settled = true;
            break;
          }
        }
        if (st.last.bracket < cfg_.penalty_tol) break;
        x_mult_ *= cfg_.penalty.growth;
      }
    } catch (solver_error& e) {
      e.trace = std::move(res.trace);
      throw;
    }
    res.outer_rounds = std::min(outer, cfg_.max_outer);
    res.final_bracket = st.last.bracket;
    res.final_multiplier = x_mult_;
    res.converged = settled && st.last.bracket < cfg_.penalty_tol;

    Association assoc = frozen_
                            ? *frozen_
                            : round_association(st.cur, cfg_.round_threshold);
    PowerRecovery rec = recover_power(st.cur, assoc, st_, r_);
    res.alloc = std::move(rec.alloc);
    res.degenerate = std::move(rec.degenerate);
    res.report =
        se_report(res.alloc, st_, r_, cfg_.penalty.w_uni, cfg_.penalty.w_multi);
    res.qos_met = count_qos_violations(res.report, cfg_.penalty.qos_uni,
                                       cfg_.penalty.qos_multi) == 0;
    res.vars = std::move(st.cur);
    return res;
  }

 private:
  void apply_mask(SolverVars& s) {
    const int nu = dims_.num_unicast;
    for (int ap = 0; ap < dims_.num_aps; ++ap) {
      const std::size_t aap = static_cast<std::size_t>(ap);
      for (int c = 0; c < dims_.per_ap(); ++c) {
        const bool on = c < nu
                            ? frozen_->uni(aap, static_cast<std::size_t>(c)) != 0
                            : frozen_->multi(aap, static_cast<std::size_t>(
                                                      c - nu)) != 0;
        if (!on) s.theta(ap, c) = 0.0;
        s.z(ap, c) = on ? 1.0 : 0.0;
      }
    }
  }

  void mask_gradient(std::vector<double>& g) const {
    const int b = dims_.block();
    const int nu = dims_.num_unicast;
    for (int ap = 0; ap < dims_.num_aps; ++ap)
      for (int c = 0; c < dims_.per_ap(); ++c) {
        const std::size_t aap = static_cast<std::size_t>(ap);
        const bool on = c < nu
                            ? frozen_->uni(aap, static_cast<std::size_t>(c)) != 0
                            : frozen_->multi(aap, static_cast<std::size_t>(
                                                      c - nu)) != 0;
        if (!on) g[static_cast<std::size_t>(dims_.theta_at(ap, c))] = 0.0;
        g[static_cast<std::size_t>(b + dims_.theta_at(ap, c))] = 0.0;
      }
  }

  const EstimationStats& st_;
  const NetworkRealization& r_;
  SolverConfig cfg_;
  PenalizedObjective obj_;
  const Association* frozen_;
  VarDims dims_;
  double k_max_ = 0.0;
  double x_mult_ = 1.0;
  double alpha_bar_ = 0.0, alpha_ = 0.0;
  std::vector<double> grad_;
};

inline SolveResult solve_joint(const EstimationStats& st,
                               const NetworkRealization& r,
                               const SolverConfig& cfg) {
  ApgSolver s(st, r, cfg);
  return s.solve();
}

inline SolveResult solve_power_only(const EstimationStats& st,
                                    const NetworkRealization& r,
                                    const SolverConfig& cfg,
                                    const Association& assoc) {
  ApgSolver s(st, r, cfg, &assoc);
  return s.solve();
}

}  // namespace cfmm
