// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for tests: synthetic realizations with hand-set gains and
// random feasible allocations.

#pragma once

#include <vector>

#include "cfmm/chanstats.hpp"
#include "cfmm/netgen.hpp"
#include "cfmm/rng.hpp"
#include "cfmm/sinr.hpp"

namespace testutil {

// Realization with given dimensions and uniform-random gains in
// [lo, hi); positions are left empty (the formulas only read gains).
inline cfmm::NetworkRealization synthetic(int aps, int antennas, int unicast,
                                          std::vector<int> groups,
                                          cfmm::Rng& rng, double lo = 0.05,
                                          double hi = 2.0) {
  cfmm::NetworkRealization r;
  r.cfg.num_aps = aps;
  r.cfg.antennas_per_ap = antennas;
  r.cfg.num_unicast = unicast;
  r.cfg.group_sizes = groups;
  r.cfg.pilot_symbols = 0;
  r.cfg.ul_power_mw = 1.0;
  r.cfg.dl_power_mw = 10.0;
  r.groups = cfmm::GroupIndex::from_sizes(groups);
  r.beta = cfmm::Mat<double>(static_cast<std::size_t>(aps),
                             static_cast<std::size_t>(unicast));
  r.lambda = cfmm::Mat<double>(static_cast<std::size_t>(aps),
                               static_cast<std::size_t>(r.groups.total));
  for (double& v : r.beta.storage()) v = lo + rng.uniform() * (hi - lo);
  for (double& v : r.lambda.storage()) v = lo + rng.uniform() * (hi - lo);
  return r;
}

// Random association (every entity covered) with random feasible powers
// filling roughly `load` of each serving AP's budget.
inline cfmm::Allocation random_allocation(const cfmm::EstimationStats& st,
                                          const cfmm::NetworkRealization& r,
                                          cfmm::Rng& rng, double load = 0.8,
                                          double assoc_prob = 0.6) {
  const std::size_t n = st.gamma.rows();
  const std::size_t u = st.gamma.cols();
  const std::size_t m = st.zeta.cols();
  cfmm::Allocation al;
  al.assoc_uni = cfmm::Mat<std::uint8_t>(n, u, 0);
  al.assoc_multi = cfmm::Mat<std::uint8_t>(n, m, 0);
  al.eta_uni = cfmm::Mat<double>(n, u, 0.0);
  al.eta_multi = cfmm::Mat<double>(n, m, 0.0);
  for (std::size_t ap = 0; ap < n; ++ap) {
    for (std::size_t j = 0; j < u; ++j)
      al.assoc_uni(ap, j) = rng.uniform() < assoc_prob ? 1 : 0;
    for (std::size_t g = 0; g < m; ++g)
      al.assoc_multi(ap, g) = rng.uniform() < assoc_prob ? 1 : 0;
  }
  // Coverage: give an unserved entity its best-gain AP.
  for (std::size_t j = 0; j < u; ++j) {
    bool any = false;
    std::size_t best = 0;
    for (std::size_t ap = 0; ap < n; ++ap) {
      if (al.assoc_uni(ap, j)) any = true;
      if (r.beta(ap, j) > r.beta(best, j)) best = ap;
    }
    if (!any) al.assoc_uni(best, j) = 1;
  }
  for (std::size_t g = 0; g < m; ++g) {
    bool any = false;
    std::size_t best = 0;
    for (std::size_t ap = 0; ap < n; ++ap) {
      if (al.assoc_multi(ap, g)) any = true;
      if (st.zeta(ap, g) > st.zeta(best, g)) best = ap;
    }
    if (!any) al.assoc_multi(best, g) = 1;
  }
  // Raw powers, then a per-AP scale to a random fill level.
  const double l = static_cast<double>(r.cfg.antennas_per_ap);
  for (std::size_t ap = 0; ap < n; ++ap) {
    double frac = 0.0;
    for (std::size_t j = 0; j < u; ++j)
      if (al.assoc_uni(ap, j)) {
        al.eta_uni(ap, j) = 0.05 + rng.uniform();
        frac += l * al.eta_uni(ap, j) * st.gamma(ap, j);
      }
    for (std::size_t g = 0; g < m; ++g)
      if (al.assoc_multi(ap, g)) {
        al.eta_multi(ap, g) = 0.05 + rng.uniform();
        frac += l * al.eta_multi(ap, g) * st.zeta(ap, g);
      }
    if (frac <= 0.0) continue;
    const double target = load * (0.5 + 0.5 * rng.uniform());
    const double s = target / frac;
    for (std::size_t j = 0; j < u; ++j) al.eta_uni(ap, j) *= s;
    for (std::size_t g = 0; g < m; ++g) al.eta_multi(ap, g) *= s;
  }
  return al;
}

}  // namespace testutil
