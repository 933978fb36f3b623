// SPDX-License-Identifier: Apache-2.0
//
// Closed-form effective SINR and spectral efficiency under maximum-ratio
// precoding with imperfect channel estimates, using the
// use-and-then-forget bound: only the average effective channel carries
// signal, everything else (beamforming gain uncertainty, interference,
// noise) is additive distortion. Two equivalent parameterizations are
// provided: explicit association + power coefficients (a, eta), and the
// solver's square-root power variables theta = sqrt(eta * gamma),
// theta_bar = sqrt(eta_bar * zeta).

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cfmm/chanstats.hpp"
#include "cfmm/matrix.hpp"
#include "cfmm/netgen.hpp"

namespace cfmm {

// AP-to-user association (binary) and downlink power coefficients.
// Invariants: eta >= 0, eta == 0 wherever a == 0, and per AP
// antennas * (sum_u a*eta*gamma + sum_m a*eta_bar*zeta) <= 1.
struct Allocation {
  Mat<std::uint8_t> assoc_uni;   // num_aps x num_unicast
  Mat<std::uint8_t> assoc_multi; // num_aps x num_groups
  Mat<double> eta_uni;
  Mat<double> eta_multi;
};

// Square-root power variables; feasible when each AP row satisfies
// sum_u theta^2 + sum_m theta_bar^2 <= 1/antennas.
struct ThetaVars {
  Mat<double> theta;      // num_aps x num_unicast
  Mat<double> theta_bar;  // num_aps x num_groups
};

// Fraction of AP `ap`'s power budget an allocation uses (1 = full budget).
inline double ap_power_fraction(const Allocation& al, const EstimationStats& st,
                                const NetworkRealization& r, std::size_t ap) {
  const double l = static_cast<double>(r.cfg.antennas_per_ap);
  double s = 0.0;
  for (std::size_t u = 0; u < st.gamma.cols(); ++u)
    if (al.assoc_uni(ap, u)) s += al.eta_uni(ap, u) * st.gamma(ap, u);
  for (std::size_t m = 0; m < st.zeta.cols(); ++m)
    if (al.assoc_multi(ap, m)) s += al.eta_multi(ap, m) * st.zeta(ap, m);
  return l * s;
}

inline void validate_allocation(const Allocation& al, const EstimationStats& st,
                                const NetworkRealization& r,
                                double tol = 1e-9) {
  for (std::size_t ap = 0; ap < st.gamma.rows(); ++ap) {
    for (std::size_t u = 0; u < st.gamma.cols(); ++u) {
      if (al.eta_uni(ap, u) < 0.0)
        throw std::invalid_argument("negative unicast power coefficient");
      if (!al.assoc_uni(ap, u) && al.eta_uni(ap, u) != 0.0)
        throw std::invalid_argument("power on unassociated unicast link");
    }
    for (std::size_t m = 0; m < st.zeta.cols(); ++m) {
      if (al.eta_multi(ap, m) < 0.0)
        throw std::invalid_argument("negative multicast power coefficient");
      if (!al.assoc_multi(ap, m) && al.eta_multi(ap, m) != 0.0)
        throw std::invalid_argument("power on unassociated multicast link");
    }
    if (ap_power_fraction(al, st, r, ap) > 1.0 + tol)
      throw std::invalid_argument("per-AP power budget exceeded");
  }
}

inline ThetaVars theta_from_allocation(const Allocation& al,
                                       const EstimationStats& st) {
  const std::size_t n = st.gamma.rows();
  ThetaVars tv;
  tv.theta = Mat<double>(n, st.gamma.cols());
  tv.theta_bar = Mat<double>(n, st.zeta.cols());
  for (std::size_t ap = 0; ap < n; ++ap) {
    for (std::size_t u = 0; u < st.gamma.cols(); ++u)
      tv.theta(ap, u) = al.assoc_uni(ap, u)
                            ? std::sqrt(al.eta_uni(ap, u) * st.gamma(ap, u))
                            : 0.0;
    for (std::size_t m = 0; m < st.zeta.cols(); ++m)
      tv.theta_bar(ap, m) =
          al.assoc_multi(ap, m)
              ? std::sqrt(al.eta_multi(ap, m) * st.zeta(ap, m))
              : 0.0;
  }
  return tv;
}

// Per-AP transmitted power fraction in theta variables.
inline double ap_power_fraction(const ThetaVars& tv,
                                const NetworkRealization& r, std::size_t ap) {
  double s = 0.0;
  for (std::size_t u = 0; u < tv.theta.cols(); ++u)
    s += tv.theta(ap, u) * tv.theta(ap, u);
  for (std::size_t m = 0; m < tv.theta_bar.cols(); ++m)
    s += tv.theta_bar(ap, m) * tv.theta_bar(ap, m);
  return static_cast<double>(r.cfg.antennas_per_ap) * s;
}

// Total per-AP square-root-power mass sum theta^2 + sum theta_bar^2, the
// quantity every interference term sees.
inline double theta_mass(const ThetaVars& tv, std::size_t ap) {
  double s = 0.0;
  for (std::size_t u = 0; u < tv.theta.cols(); ++u)
    s += tv.theta(ap, u) * tv.theta(ap, u);
  for (std::size_t m = 0; m < tv.theta_bar.cols(); ++m)
    s += tv.theta_bar(ap, m) * tv.theta_bar(ap, m);
  return s;
}

inline double sinr_unicast_theta(const ThetaVars& tv, const EstimationStats& st,
                                 const NetworkRealization& r, int u) {
  const std::size_t n = st.gamma.rows();
  const double p = r.cfg.dl_power_mw;
  const double l = static_cast<double>(r.cfg.antennas_per_ap);
  const std::size_t uu = static_cast<std::size_t>(u);
  double coh = 0.0, intf = 0.0;
  for (std::size_t ap = 0; ap < n; ++ap) {
    coh += tv.theta(ap, uu) * st.sqrt_gamma(ap, uu);
    intf += r.beta(ap, uu) * theta_mass(tv, ap);
  }
  const double num = p * l * l * coh * coh;
  const double den = p * l * intf + 1.0;
  return num / den;
}

inline double sinr_multicast_theta(const ThetaVars& tv,
                                   const EstimationStats& st,
                                   const NetworkRealization& r, int m, int k) {
  const std::size_t n = st.zeta.rows();
  const double p = r.cfg.dl_power_mw;
  const double l = static_cast<double>(r.cfg.antennas_per_ap);
  const std::size_t mm = static_cast<std::size_t>(m);
  const std::size_t f = static_cast<std::size_t>(st.groups.flat(m, k));
  double coh = 0.0, intf = 0.0;
  for (std::size_t ap = 0; ap < n; ++ap) {
    coh += tv.theta_bar(ap, mm) * st.sqrt_xi(ap, f);
    intf += r.lambda(ap, f) * theta_mass(tv, ap);
  }
  const double num = p * l * l * coh * coh;
  const double den = p * l * intf + 1.0;
  return num / den;
}

inline double sinr_unicast(const Allocation& al, const EstimationStats& st,
                           const NetworkRealization& r, int u) {
  return sinr_unicast_theta(theta_from_allocation(al, st), st, r, u);
}

inline double sinr_multicast(const Allocation& al, const EstimationStats& st,
                             const NetworkRealization& r, int m, int k) {
  return sinr_multicast_theta(theta_from_allocation(al, st), st, r, m, k);
}

// Spectral efficiency in bit/s/Hz: the pilot overhead prelog times
// log2(1 + sinr).
inline double se_from_sinr(double sinr, int coherence_symbols,
                           int pilot_symbols) {
  if (sinr < 0.0) throw std::invalid_argument("sinr must be >= 0");
  if (pilot_symbols < 1 || pilot_symbols >= coherence_symbols)
    throw std::invalid_argument("need 1 <= pilots < coherence interval");
  const double prelog =
      static_cast<double>(coherence_symbols - pilot_symbols) /
      static_cast<double>(coherence_symbols);
  return prelog * std::log2(1.0 + sinr);
}

// Spectral efficiencies of every served user plus the weighted sum-SE
// objective value.
struct SeReport {
  std::vector<double> se_uni;    // per unicast user
  std::vector<double> se_multi;  // per group member, flattened
  double sum_uni = 0.0;
  double sum_multi = 0.0;
  double weighted_sse = 0.0;
  double prelog = 0.0;
};

inline SeReport se_report_theta(const ThetaVars& tv, const EstimationStats& st,
                                const NetworkRealization& r, double w_uni,
                                double w_multi) {
  SeReport rep;
  const int t = r.cfg.coherence_symbols;
  const int tau = r.cfg.resolved_pilots();
  rep.prelog = static_cast<double>(t - tau) / static_cast<double>(t);
  rep.se_uni.resize(st.gamma.cols());
  rep.se_multi.resize(static_cast<std::size_t>(st.groups.total));
  for (std::size_t u = 0; u < st.gamma.cols(); ++u) {
    rep.se_uni[u] =
        se_from_sinr(sinr_unicast_theta(tv, st, r, static_cast<int>(u)), t, tau);
    rep.sum_uni += rep.se_uni[u];
  }
  for (int m = 0; m < st.groups.count(); ++m)
    for (int k = 0; k < st.groups.size(m); ++k) {
      const double se =
          se_from_sinr(sinr_multicast_theta(tv, st, r, m, k), t, tau);
      rep.se_multi[static_cast<std::size_t>(st.groups.flat(m, k))] = se;
      rep.sum_multi += se;
    }
  rep.weighted_sse = w_uni * rep.sum_uni + w_multi * rep.sum_multi;
  return rep;
}

inline SeReport se_report(const Allocation& al, const EstimationStats& st,
                          const NetworkRealization& r, double w_uni,
                          double w_multi) {
  return se_report_theta(theta_from_allocation(al, st), st, r, w_uni, w_multi);
}

// Users whose spectral efficiency misses the floor by more than tol.
inline int count_qos_violations(const SeReport& rep, double floor_uni,
                                double floor_multi, double tol = 1e-9) {
  int bad = 0;
  for (double se : rep.se_uni)
    if (se < floor_uni - tol) ++bad;
  for (double se : rep.se_multi)
    if (se < floor_multi - tol) ++bad;
  return bad;
}

}  // namespace cfmm
