// SPDX-License-Identifier: Apache-2.0
//
// Penalized objective for the joint AP-selection / power-control problem.
// Variables are stacked as v = [theta block | z block]; each block has one
// row per AP and one column per served entity (unicast users first, then
// groups). theta carries square-root power, z is a relaxed selection
// indicator. The minimized objective is
//
//   g(v) = -weighted sum SE
//          + X * ( mu_qos    * sum hinge(QoS floor - SE)^2
//                + mu_binary * sum (z^2 - z^4)
//                + mu_select * [ coverage hinges + (theta^2 - z^2) hinges ] )
//
// The gradient is exact: each user's SE depends on every AP's total power
// mass through its interference term, so cross-entity and cross-class terms
// are included, not just the per-own-entity parts.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "cfmm/chanstats.hpp"
#include "cfmm/netgen.hpp"
#include "cfmm/sinr.hpp"

namespace cfmm {

struct VarDims {
  int num_aps = 0;
  int num_unicast = 0;
  int num_groups = 0;

  int per_ap() const { return num_unicast + num_groups; }
  int block() const { return num_aps * per_ap(); }
  int total() const { return 2 * block(); }
  // Column layout within an AP row: [unicast 0..U-1 | group 0..M-1].
  int theta_at(int ap, int col) const { return ap * per_ap() + col; }
  int z_at(int ap, int col) const { return block() + ap * per_ap() + col; }
};

// Flat solver variable vector with named views.
struct SolverVars {
  VarDims dims;
  std::vector<double> v;

  static SolverVars zeros(const VarDims& d) {
    SolverVars s;
    s.dims = d;
    s.v.assign(static_cast<std::size_t>(d.total()), 0.0);
    return s;
  }

  double& theta(int ap, int col) {
    return v[static_cast<std::size_t>(dims.theta_at(ap, col))];
  }
  double theta(int ap, int col) const {
    return v[static_cast<std::size_t>(dims.theta_at(ap, col))];
  }
  double& z(int ap, int col) {
    return v[static_cast<std::size_t>(dims.z_at(ap, col))];
  }
  double z(int ap, int col) const {
    return v[static_cast<std::size_t>(dims.z_at(ap, col))];
  }
};

inline VarDims dims_of(const NetworkRealization& r) {
  return {r.cfg.num_aps, r.cfg.num_unicast, r.cfg.num_groups()};
}

// Copies the theta block into the two-matrix form used by the SE formulas.
inline ThetaVars theta_view(const SolverVars& s) {
  const VarDims& d = s.dims;
  ThetaVars tv;
  tv.theta = Mat<double>(static_cast<std::size_t>(d.num_aps),
                         static_cast<std::size_t>(d.num_unicast));
  tv.theta_bar = Mat<double>(static_cast<std::size_t>(d.num_aps),
                             static_cast<std::size_t>(d.num_groups));
  for (int ap = 0; ap < d.num_aps; ++ap) {
    for (int u = 0; u < d.num_unicast; ++u)
      tv.theta(static_cast<std::size_t>(ap), static_cast<std::size_t>(u)) =
          s.theta(ap, u);
    for (int m = 0; m < d.num_groups; ++m)
      tv.theta_bar(static_cast<std::size_t>(ap), static_cast<std::size_t>(m)) =
          s.theta(ap, d.num_unicast + m);
  }
  return tv;
}

struct PenaltyConfig {
  double w_uni = 0.5;       // weight of the unicast SE sum
  double w_multi = 0.5;     // weight of the multicast SE sum
  double mu_qos = 1.0;
  double mu_binary = 1.0;
  double mu_select = 1.0;
  double x0 = 1.0;          // initial penalty multiplier
  double growth = 3.0;      // multiplier growth per outer round
  double qos_uni = 0.0;     // per-user SE floor, bit/s/Hz
  double qos_multi = 0.0;
  int max_aps_per_entity = 0;  // 0 = unicast users + groups
};

struct Breakdown {
  double g = 0.0;
  double weighted_sse = 0.0;
  double qos_pen = 0.0;     // sum of squared QoS shortfalls
  double binary_pen = 0.0;  // sum z^2 - z^4
  double select_pen = 0.0;  // coverage + power/selection coupling hinges
  double bracket = 0.0;     // mu-weighted penalty sum, without X
  std::vector<double> se_uni;
  std::vector<double> se_multi;
};

// Objective/gradient engine bound to one realization. Reused across
// iterations so per-call work is one pass over the gain matrices.
class PenalizedObjective {
 public:
  PenalizedObjective(const EstimationStats& st, const NetworkRealization& r,
                     const PenaltyConfig& pc)
      : st_(st), r_(r), pc_(pc), dims_(dims_of(r)) {
    p_ = r.cfg.dl_power_mw;
    l_ = static_cast<double>(r.cfg.antennas_per_ap);
    const double t = static_cast<double>(r.cfg.coherence_symbols);
    prelog_ = (t - static_cast<double>(r.cfg.resolved_pilots())) / t;
    prelog_ln2_ = prelog_ / std::numbers::ln2;
    const std::size_t nu = static_cast<std::size_t>(dims_.num_unicast);
    const std::size_t nk = static_cast<std::size_t>(st.groups.total);
    mass_.resize(static_cast<std::size_t>(dims_.num_aps));
    coh_u_.resize(nu);
    intf_u_.resize(nu);
    weight_u_.resize(nu);
    sig_u_.resize(nu);
    coh_k_.resize(nk);
    intf_k_.resize(nk);
    weight_k_.resize(nk);
    sig_k_.resize(nk);
    w_ap_.resize(static_cast<std::size_t>(dims_.num_aps));
  }

  const VarDims& dims() const { return dims_; }
  const PenaltyConfig& config() const { return pc_; }

  Breakdown eval(const SolverVars& s, double x_mult) {
    forward(s);
    Breakdown b;
    b.se_uni.resize(coh_u_.size());
    b.se_multi.resize(coh_k_.size());
    for (std::size_t u = 0; u < coh_u_.size(); ++u) {
      const double num = p_ * l_ * l_ * coh_u_[u] * coh_u_[u];
      const double den = p_ * l_ * intf_u_[u] + 1.0;
      b.se_uni[u] = prelog_ * std::log2(1.0 + num / den);
      b.weighted_sse += pc_.w_uni * b.se_uni[u];
      const double gap = std::max(0.0, pc_.qos_uni - b.se_uni[u]);
      b.qos_pen += gap * gap;
    }
    for (std::size_t k = 0; k < coh_k_.size(); ++k) {
      const double num = p_ * l_ * l_ * coh_k_[k] * coh_k_[k];
      const double den = p_ * l_ * intf_k_[k] + 1.0;
      b.se_multi[k] = prelog_ * std::log2(1.0 + num / den);
      b.weighted_sse += pc_.w_multi * b.se_multi[k];
      const double gap = std::max(0.0, pc_.qos_multi - b.se_multi[k]);
      b.qos_pen += gap * gap;
    }
    const int cols = dims_.per_ap();
    for (int c = 0; c < cols; ++c) {
      double covered = 0.0;
      for (int ap = 0; ap < dims_.num_aps; ++ap) {
        const double zv = s.z(ap, c);
        const double z2 = zv * zv;
        b.binary_pen += z2 - z2 * z2;
        const double th = s.theta(ap, c);
        const double over = std::max(0.0, th * th - z2);
        b.select_pen += over * over;
        covered += z2;
      }
      const double gap = std::max(0.0, 1.0 - covered);
      b.select_pen += gap * gap;
    }
    b.bracket = pc_.mu_qos * b.qos_pen + pc_.mu_binary * b.binary_pen +
                pc_.mu_select * b.select_pen;
    b.g = -b.weighted_sse + x_mult * b.bracket;
    return b;
  }

  void gradient(const SolverVars& s, double x_mult, std::vector<double>& out) {
    forward(s);
    out.assign(static_cast<std::size_t>(dims_.total()), 0.0);

    // Per-user chain factors. For user j with coherent sum S, signal
    // power num = p L^2 S^2 and interference-plus-noise den:
    //   d(-objective)/dSE = -(w + 2 X mu_qos * shortfall) = -c_j
    //   dSE/dS = prelog' * 2 p L^2 S / (num + den)
    //   dSE/d(mass_n) = -prelog' * num / (num + den) / den * p L * gain_j(n)
    for (std::size_t u = 0; u < coh_u_.size(); ++u) {
      const double num = p_ * l_ * l_ * coh_u_[u] * coh_u_[u];
      const double den = p_ * l_ * intf_u_[u] + 1.0;
      const double se = prelog_ * std::log2(1.0 + num / den);
      const double c = pc_.w_uni +
                       2.0 * x_mult * pc_.mu_qos *
                           std::max(0.0, pc_.qos_uni - se);
      const double common = c * prelog_ln2_ / (num + den);
      sig_u_[u] = common * 2.0 * p_ * l_ * l_ * coh_u_[u];
      weight_u_[u] = common * num / den * p_ * l_;
    }
    for (std::size_t k = 0; k < coh_k_.size(); ++k) {
      const double num = p_ * l_ * l_ * coh_k_[k] * coh_k_[k];
      const double den = p_ * l_ * intf_k_[k] + 1.0;
      const double se = prelog_ * std::log2(1.0 + num / den);
      const double c = pc_.w_multi +
                       2.0 * x_mult * pc_.mu_qos *
                           std::max(0.0, pc_.qos_multi - se);
      const double common = c * prelog_ln2_ / (num + den);
      sig_k_[k] = common * 2.0 * p_ * l_ * l_ * coh_k_[k];
      weight_k_[k] = common * num / den * p_ * l_;
    }

    // Interference pressure on each AP's power mass.
    for (int ap = 0; ap < dims_.num_aps; ++ap) {
      const std::size_t a = static_cast<std::size_t>(ap);
      double w = 0.0;
      for (std::size_t u = 0; u < weight_u_.size(); ++u)
        w += weight_u_[u] * r_.beta(a, u);
      for (std::size_t k = 0; k < weight_k_.size(); ++k)
        w += weight_k_[k] * r_.lambda(a, k);
      w_ap_[a] = w;
    }

    const int nu = dims_.num_unicast;
    for (int ap = 0; ap < dims_.num_aps; ++ap) {
      const std::size_t a = static_cast<std::size_t>(ap);
      for (int c = 0; c < dims_.per_ap(); ++c) {
        const double th = s.theta(ap, c);
        const double zv = s.z(ap, c);
        const double over = std::max(0.0, th * th - zv * zv);
        double dth = 2.0 * th * w_ap_[a] +
                     4.0 * x_mult * pc_.mu_select * over * th;
        if (c < nu) {
          dth -= sig_u_[static_cast<std::size_t>(c)] *
                 st_.sqrt_gamma(a, static_cast<std::size_t>(c));
        } else {
          const int m = c - nu;
          double sig = 0.0;
          for (int k = 0; k < st_.groups.size(m); ++k) {
            const std::size_t f = static_cast<std::size_t>(st_.groups.flat(m, k));
            sig += sig_k_[f] * st_.sqrt_xi(a, f);
          }
          dth -= sig;
        }
        out[static_cast<std::size_t>(dims_.theta_at(ap, c))] = dth;
      }
    }

    // z-block terms need per-column coverage sums.
    for (int c = 0; c < dims_.per_ap(); ++c) {
      double covered = 0.0;
      for (int ap = 0; ap < dims_.num_aps; ++ap)
        covered += s.z(ap, c) * s.z(ap, c);
      const double cov_gap = std::max(0.0, 1.0 - covered);
      for (int ap = 0; ap < dims_.num_aps; ++ap) {
        const double zv = s.z(ap, c);
        const double th = s.theta(ap, c);
        const double over = std::max(0.0, th * th - zv * zv);
        out[static_cast<std::size_t>(dims_.z_at(ap, c))] =
            x_mult * (pc_.mu_binary * (2.0 * zv - 4.0 * zv * zv * zv) -
                      4.0 * pc_.mu_select * zv * (over + cov_gap));
      }
    }
  }

 private:
  // Coherent sums, per-AP power mass, and interference sums for the current
  // variable vector.
  void forward(const SolverVars& s) {
    const int nu = dims_.num_unicast;
    for (int ap = 0; ap < dims_.num_aps; ++ap) {
      double mass = 0.0;
      for (int c = 0; c < dims_.per_ap(); ++c) {
        const double th = s.theta(ap, c);
        mass += th * th;
      }
      mass_[static_cast<std::size_t>(ap)] = mass;
    }
    std::fill(coh_u_.begin(), coh_u_.end(), 0.0);
    std::fill(intf_u_.begin(), intf_u_.end(), 0.0);
    std::fill(coh_k_.begin(), coh_k_.end(), 0.0);
    std::fill(intf_k_.begin(), intf_k_.end(), 0.0);
    for (int ap = 0; ap < dims_.num_aps; ++ap) {
      const std::size_t a = static_cast<std::size_t>(ap);
      const double mass = mass_[a];
      for (std::size_t u = 0; u < coh_u_.size(); ++u) {
        coh_u_[u] += s.theta(ap, static_cast<int>(u)) * st_.sqrt_gamma(a, u);
        intf_u_[u] += r_.beta(a, u) * mass;
      }
      for (int m = 0; m < dims_.num_groups; ++m) {
        const double tb = s.theta(ap, nu + m);
        for (int k = 0; k < st_.groups.size(m); ++k) {
          const std::size_t f = static_cast<std::size_t>(st_.groups.flat(m, k));
          coh_k_[f] += tb * st_.sqrt_xi(a, f);
          intf_k_[f] += r_.lambda(a, f) * mass;
        }
      }
    }
  }

  const EstimationStats& st_;
  const NetworkRealization& r_;
  PenaltyConfig pc_;
  VarDims dims_;
  double p_ = 0.0, l_ = 0.0, prelog_ = 0.0, prelog_ln2_ = 0.0;
  std::vector<double> mass_, coh_u_, intf_u_, weight_u_, sig_u_;
  std::vector<double> coh_k_, intf_k_, weight_k_, sig_k_;
  std::vector<double> w_ap_;
};

// Convenience single-shot wrappers over PenalizedObjective.
inline double qos_penalty(const SolverVars& s, const EstimationStats& st,
                          const NetworkRealization& r,
                          const PenaltyConfig& pc) {
  PenalizedObjective obj(st, r, pc);
  return obj.eval(s, pc.x0).qos_pen;
}

inline double binary_penalty(const SolverVars& s) {
  double acc = 0.0;
  const int b = s.dims.block();
  for (int i = 0; i < b; ++i) {
    const double zv = s.v[static_cast<std::size_t>(b + i)];
    const double z2 = zv * zv;
    acc += z2 - z2 * z2;
  }
  return acc;
}

inline double coupling_penalty(const SolverVars& s) {
  double acc = 0.0;
  const VarDims& d = s.dims;
  for (int c = 0; c < d.per_ap(); ++c) {
    double covered = 0.0;
    for (int ap = 0; ap < d.num_aps; ++ap) {
      const double th = s.theta(ap, c);
      const double zv = s.z(ap, c);
      const double over = std::max(0.0, th * th - zv * zv);
      acc += over * over;
      covered += zv * zv;
    }
    const double gap = std::max(0.0, 1.0 - covered);
    acc += gap * gap;
  }
  return acc;
}

inline double objective_g(const SolverVars& s, const EstimationStats& st,
                          const NetworkRealization& r, const PenaltyConfig& pc,
                          double x_mult) {
  PenalizedObjective obj(st, r, pc);
  return obj.eval(s, x_mult).g;
}

inline std::vector<double> grad_g(const SolverVars& s,
                                  const EstimationStats& st,
                                  const NetworkRealization& r,
                                  const PenaltyConfig& pc, double x_mult) {
  PenalizedObjective obj(st, r, pc);
  std::vector<double> out;
  obj.gradient(s, x_mult, out);
  return out;
}

}  // namespace cfmm
