// SPDX-License-Identifier: Apache-2.0
//
// Channel-estimation quality statistics. Each AP estimates unicast channels
// from orthogonal pilots and each multicast group's composite channel from a
// pilot shared by the whole group. The per-antenna estimate variances below
// are everything the spectral-efficiency formulas need:
//
//   gamma_{n,u}   unicast estimate variance
//   xi_{n,m,k}    per-member share of the group estimate variance
//   zeta_{n,m}    group composite estimate variance, zeta = sum_k xi * S/lam
//
// All gains are noise-normalized, so the pilot SNR enters as tau * p_ul * gain.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "cfmm/matrix.hpp"
#include "cfmm/netgen.hpp"

namespace cfmm {

// Variance of the MMSE estimate of a unit-pilot unicast channel with
// large-scale gain beta, observed over tau_pul = tau * p_ul pilot energy.
inline double gamma_stat(double tau_pul, double beta) {
  if (beta < 0.0 || tau_pul < 0.0)
    throw std::invalid_argument("gamma_stat needs nonnegative arguments");
  if (beta == 0.0) return 0.0;
  return tau_pul * beta * beta / (tau_pul * beta + 1.0);
}

// Per-member estimate variance for member k of a group whose members share
// one pilot; lams holds the group's large-scale gains at this AP.
inline double xi_stat(double tau_pul, std::span<const double> lams, int k) {
  double sum = 0.0;
  for (double l : lams) {
    if (l < 0.0) throw std::invalid_argument("xi_stat needs nonnegative gains");
    sum += l;
  }
  const double lk = lams[static_cast<std::size_t>(k)];
  if (lk == 0.0) return 0.0;
  return tau_pul * lk * lk / (tau_pul * sum + 1.0);
}

// Variance of the estimated group composite channel at this AP.
inline double zeta_stat(double tau_pul, std::span<const double> lams) {
  double sum = 0.0;
  for (double l : lams) {
    if (l < 0.0) throw std::invalid_argument("zeta_stat needs nonnegative gains");
    sum += l;
  }
  if (sum == 0.0) return 0.0;
  return tau_pul * sum * sum / (tau_pul * sum + 1.0);
}

// Estimation statistics for a whole realization, plus cached square roots
// used in the theta-parameterized formulas and the solver gradient.
struct EstimationStats {
  double tau_pul = 0.0;       // pilot length * uplink power
  Mat<double> gamma;          // num_aps x num_unicast
  Mat<double> xi;             // num_aps x total group members
  Mat<double> zeta;           // num_aps x num_groups
  Mat<double> sqrt_gamma;
  Mat<double> sqrt_xi;
  Mat<double> sqrt_zeta;
  GroupIndex groups;
};

inline EstimationStats compute_stats(const NetworkRealization& r) {
  const NetworkConfig& cfg = r.cfg;
  const std::size_t n = static_cast<std::size_t>(cfg.num_aps);
  const std::size_t u = static_cast<std::size_t>(cfg.num_unicast);
  const std::size_t m = static_cast<std::size_t>(cfg.num_groups());
  EstimationStats s;
  s.tau_pul = static_cast<double>(cfg.resolved_pilots()) * cfg.ul_power_mw;
  s.groups = r.groups;
  s.gamma = Mat<double>(n, u);
  s.sqrt_gamma = Mat<double>(n, u);
  s.xi = Mat<double>(n, static_cast<std::size_t>(r.groups.total));
  s.sqrt_xi = Mat<double>(n, static_cast<std::size_t>(r.groups.total));
  s.zeta = Mat<double>(n, m);
  s.sqrt_zeta = Mat<double>(n, m);
  for (std::size_t ap = 0; ap < n; ++ap) {
    for (std::size_t j = 0; j < u; ++j) {
      const double g = gamma_stat(s.tau_pul, r.beta(ap, j));
      s.gamma(ap, j) = g;
      s.sqrt_gamma(ap, j) = std::sqrt(g);
    }
    for (std::size_t g = 0; g < m; ++g) {
      const int off = r.groups.offsets[g];
      const int sz = r.groups.sizes[g];
      std::span<const double> lams(&r.lambda(ap, static_cast<std::size_t>(off)),
                                   static_cast<std::size_t>(sz));
      for (int k = 0; k < sz; ++k) {
        const double x = xi_stat(s.tau_pul, lams, k);
        const std::size_t f = static_cast<std::size_t>(off + k);
        s.xi(ap, f) = x;
        s.sqrt_xi(ap, f) = std::sqrt(x);
      }
      const double z = zeta_stat(s.tau_pul, lams);
      s.zeta(ap, g) = z;
      s.sqrt_zeta(ap, g) = std::sqrt(z);
    }
  }
  return s;
}

}  // namespace cfmm
