// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo oracle: simulates small-scale fading, pilot-based channel
// estimation, and maximum-ratio downlink transmission symbol-expectation by
// symbol-expectation, then rebuilds each user's effective SINR from sample
// moments. It shares no formulas with the closed-form path beyond the MMSE
// estimator coefficients, so agreement certifies the closed forms.
//
// Pilots are orthonormal: one dedicated pilot per unicast user, one shared
// pilot per multicast group. Projecting the received pilot block onto a
// pilot column leaves sqrt(tau * p_ul) times the (summed) channel plus unit
// white noise, which is what draw_channels stores directly.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cfmm/chanstats.hpp"
#include "cfmm/netgen.hpp"
#include "cfmm/rng.hpp"
#include "cfmm/sinr.hpp"

namespace cfmm {

// One draw of small-scale channels and projected pilot noise, all CN(0,1)
// per antenna. Layout: [ap][entity][antenna].
struct ChannelDraw {
  std::vector<std::complex<double>> h_uni;   // num_aps * num_unicast * L
  std::vector<std::complex<double>> h_mem;   // num_aps * total members * L
  std::vector<std::complex<double>> noise;   // num_aps * (U + M) * L
};

// Per-draw channel estimates, same layout.
struct TrainingEstimates {
  std::vector<std::complex<double>> chat;      // unicast estimates
  std::vector<std::complex<double>> that_mem;  // per-member estimates
  std::vector<std::complex<double>> that_grp;  // group composite estimates
};

// Fixed draw order (AP-major, then unicast / members / pilot noise, then
// antennas) keeps results reproducible for a given seed.
inline void draw_channels(const NetworkRealization& r, Rng& rng,
                          ChannelDraw& d) {
  const std::size_t n = static_cast<std::size_t>(r.cfg.num_aps);
  const std::size_t u = static_cast<std::size_t>(r.cfg.num_unicast);
  const std::size_t km = static_cast<std::size_t>(r.groups.total);
  const std::size_t e = u + static_cast<std::size_t>(r.cfg.num_groups());
  const std::size_t l = static_cast<std::size_t>(r.cfg.antennas_per_ap);
  d.h_uni.resize(n * u * l);
  d.h_mem.resize(n * km * l);
  d.noise.resize(n * e * l);
  for (std::size_t ap = 0; ap < n; ++ap) {
    for (std::size_t j = 0; j < u * l; ++j) d.h_uni[ap * u * l + j] = rng.cnormal();
    for (std::size_t j = 0; j < km * l; ++j)
      d.h_mem[ap * km * l + j] = rng.cnormal();
    for (std::size_t j = 0; j < e * l; ++j) d.noise[ap * e * l + j] = rng.cnormal();
  }
}

// MMSE channel estimation from the projected pilot observations.
inline void simulate_training(const ChannelDraw& d, const NetworkRealization& r,
                              const EstimationStats& st, TrainingEstimates& est) {
  const std::size_t n = static_cast<std::size_t>(r.cfg.num_aps);
  const std::size_t u = static_cast<std::size_t>(r.cfg.num_unicast);
  const std::size_t m = static_cast<std::size_t>(r.cfg.num_groups());
  const std::size_t km = static_cast<std::size_t>(r.groups.total);
  const std::size_t l = static_cast<std::size_t>(r.cfg.antennas_per_ap);
  const double tp = st.tau_pul;
  const double sq_tp = std::sqrt(tp);
  est.chat.resize(n * u * l);
  est.that_mem.resize(n * km * l);
  est.that_grp.resize(n * m * l);
  for (std::size_t ap = 0; ap < n; ++ap) {
    for (std::size_t j = 0; j < u; ++j) {
      const double beta = r.beta(ap, j);
      const double coef = sq_tp * beta / (tp * beta + 1.0);
      const double sb = std::sqrt(beta);
      for (std::size_t a = 0; a < l; ++a) {
        const std::complex<double> y =
            sq_tp * sb * d.h_uni[(ap * u + j) * l + a] +
            d.noise[(ap * (u + m) + j) * l + a];
        est.chat[(ap * u + j) * l + a] = coef * y;
      }
    }
    for (std::size_t g = 0; g < m; ++g) {
      const int off = r.groups.offsets[static_cast<int>(g)];
      const int sz = r.groups.sizes[static_cast<int>(g)];
      double lam_sum = 0.0;
      for (int k = 0; k < sz; ++k)
        lam_sum += r.lambda(ap, static_cast<std::size_t>(off + k));
      const double den = tp * lam_sum + 1.0;
      for (std::size_t a = 0; a < l; ++a) {
        // Projected observation on the group pilot: sum of scaled member
        // channels plus unit noise.
        std::complex<double> y = d.noise[(ap * (u + m) + u + g) * l + a];
        for (int k = 0; k < sz; ++k) {
          const std::size_t f = static_cast<std::size_t>(off + k);
          y += sq_tp * std::sqrt(r.lambda(ap, f)) * d.h_mem[(ap * km + f) * l + a];
        }
        std::complex<double> grp = 0.0;
        for (int k = 0; k < sz; ++k) {
          const std::size_t f = static_cast<std::size_t>(off + k);
          const std::complex<double> ek =
              (sq_tp * r.lambda(ap, f) / den) * y;
          est.that_mem[(ap * km + f) * l + a] = ek;
          grp += ek;
        }
        est.that_grp[(ap * m + g) * l + a] = grp;
      }
    }
  }
}

// Empirical first/second moments of the channel estimates, for checking the
// closed-form estimation statistics.
struct McTrainingStats {
  Mat<double> gamma_emp;  // per-antenna variance of unicast estimates
  Mat<double> xi_emp;     // per-member estimate variance
  Mat<double> zeta_emp;   // group composite estimate variance
  double max_cross_corr_z = 0.0;  // |corr| * sqrt(draws) over pilot pairs
  long draws = 0;
};

inline McTrainingStats estimate_training_stats(const NetworkRealization& r,
                                               const EstimationStats& st,
                                               long draws, std::uint64_t seed) {
  if (draws < 1000)
    throw std::invalid_argument("oracle needs at least 1000 draws");
  const std::size_t n = static_cast<std::size_t>(r.cfg.num_aps);
  const std::size_t u = static_cast<std::size_t>(r.cfg.num_unicast);
  const std::size_t m = static_cast<std::size_t>(r.cfg.num_groups());
  const std::size_t km = static_cast<std::size_t>(r.groups.total);
  const std::size_t l = static_cast<std::size_t>(r.cfg.antennas_per_ap);
  McTrainingStats out;
  out.draws = draws;
  out.gamma_emp = Mat<double>(n, u, 0.0);
  out.xi_emp = Mat<double>(n, km, 0.0);
  out.zeta_emp = Mat<double>(n, m, 0.0);

  // Cross-pilot correlation accumulators at antenna 0 of AP 0: entities are
  // unicast users then groups.
  const std::size_t e = u + m;
  std::vector<std::complex<double>> cross(e * e, 0.0);
  std::vector<double> selfpow(e, 0.0);
  std::vector<std::complex<double>> ent(e);

  Rng rng(seed);
  ChannelDraw d;
  TrainingEstimates est;
  for (long it = 0; it < draws; ++it) {
    draw_channels(r, rng, d);
    simulate_training(d, r, st, est);
    for (std::size_t ap = 0; ap < n; ++ap) {
      for (std::size_t j = 0; j < u; ++j)
        for (std::size_t a = 0; a < l; ++a)
          out.gamma_emp(ap, j) += std::norm(est.chat[(ap * u + j) * l + a]);
      for (std::size_t f = 0; f < km; ++f)
        for (std::size_t a = 0; a < l; ++a)
          out.xi_emp(ap, f) += std::norm(est.that_mem[(ap * km + f) * l + a]);
      for (std::size_t g = 0; g < m; ++g)
        for (std::size_t a = 0; a < l; ++a)
          out.zeta_emp(ap, g) += std::norm(est.that_grp[(ap * m + g) * l + a]);
    }
    for (std::size_t j = 0; j < u; ++j) ent[j] = est.chat[j * l];
    for (std::size_t g = 0; g < m; ++g) ent[u + g] = est.that_grp[g * l];
    for (std::size_t i = 0; i < e; ++i) {
      selfpow[i] += std::norm(ent[i]);
      for (std::size_t j = i + 1; j < e; ++j)
        cross[i * e + j] += ent[i] * std::conj(ent[j]);
    }
  }
  const double scale = 1.0 / (static_cast<double>(draws) * static_cast<double>(l));
  for (double& v : out.gamma_emp.storage()) v *= scale;
  for (double& v : out.xi_emp.storage()) v *= scale;
  for (double& v : out.zeta_emp.storage()) v *= scale;
  for (std::size_t i = 0; i < e; ++i)
    for (std::size_t j = i + 1; j < e; ++j) {
      const double denom = std::sqrt(selfpow[i] * selfpow[j]);
      if (denom == 0.0) continue;
      const double corr = std::abs(cross[i * e + j]) / denom;
      out.max_cross_corr_z = std::max(
          out.max_cross_corr_z, corr * std::sqrt(static_cast<double>(draws)));
    }
  return out;
}

// Empirical effective SINR of every user under maximum-ratio transmission
// with the given allocation, via the sample moments of the use-and-then-
// forget decomposition, plus the per-AP average transmit power fraction.
struct McCertification {
  std::vector<double> sinr_closed_uni, sinr_emp_uni;
  std::vector<double> sinr_closed_multi, sinr_emp_multi;
  double max_rel_err = 0.0;
  std::vector<double> power_closed;   // per AP, fraction of budget
  std::vector<double> power_emp;
  std::vector<double> power_stderr;
  long draws = 0;
};

inline McCertification certify_uatf(const Allocation& al,
                                    const EstimationStats& st,
                                    const NetworkRealization& r, long draws,
                                    std::uint64_t seed) {
  if (draws < 1000)
    throw std::invalid_argument("oracle needs at least 1000 draws");
  const std::size_t n = static_cast<std::size_t>(r.cfg.num_aps);
  const std::size_t u = static_cast<std::size_t>(r.cfg.num_unicast);
  const std::size_t m = static_cast<std::size_t>(r.cfg.num_groups());
  const std::size_t km = static_cast<std::size_t>(r.groups.total);
  const std::size_t l = static_cast<std::size_t>(r.cfg.antennas_per_ap);
  const std::size_t streams = u + m;
  const double p = r.cfg.dl_power_mw;

  // Stream weights sqrt(p * eta) masked by association, per AP.
  Mat<double> w(n, streams, 0.0);
  for (std::size_t ap = 0; ap < n; ++ap) {
    for (std::size_t j = 0; j < u; ++j)
      if (al.assoc_uni(ap, j))
        w(ap, j) = std::sqrt(p * al.eta_uni(ap, j));
    for (std::size_t g = 0; g < m; ++g)
      if (al.assoc_multi(ap, g))
        w(ap, u + g) = std::sqrt(p * al.eta_multi(ap, g));
  }

  const std::size_t rx_total = u + km;  // receivers: unicast, then members
  std::vector<std::complex<double>> mean_d(rx_total, 0.0);
  std::vector<double> pow_d(rx_total, 0.0);
  std::vector<double> intf(rx_total, 0.0);
  std::vector<double> pw_sum(n, 0.0), pw_sq(n, 0.0);
  std::vector<std::complex<double>> t(streams);

  Rng rng(seed);
  ChannelDraw d;
  TrainingEstimates est;
  for (long it = 0; it < draws; ++it) {
    draw_channels(r, rng, d);
    simulate_training(d, r, st, est);

    // Per-AP transmit power fraction this draw.
    for (std::size_t ap = 0; ap < n; ++ap) {
      double frac = 0.0;
      for (std::size_t j = 0; j < u; ++j) {
        if (!al.assoc_uni(ap, j)) continue;
        double e2 = 0.0;
        for (std::size_t a = 0; a < l; ++a)
          e2 += std::norm(est.chat[(ap * u + j) * l + a]);
        frac += al.eta_uni(ap, j) * e2;
      }
      for (std::size_t g = 0; g < m; ++g) {
        if (!al.assoc_multi(ap, g)) continue;
        double e2 = 0.0;
        for (std::size_t a = 0; a < l; ++a)
          e2 += std::norm(est.that_grp[(ap * m + g) * l + a]);
        frac += al.eta_multi(ap, g) * e2;
      }
      pw_sum[ap] += frac;
      pw_sq[ap] += frac * frac;
    }

    // Each receiver's coupling to each precoded stream, summed over APs.
    for (std::size_t rx = 0; rx < rx_total; ++rx) {
      for (std::size_t s = 0; s < streams; ++s) t[s] = 0.0;
      for (std::size_t ap = 0; ap < n; ++ap) {
        const std::complex<double>* ch =
            rx < u ? &d.h_uni[(ap * u + rx) * l]
                   : &d.h_mem[(ap * km + (rx - u)) * l];
        const double gain = rx < u ? std::sqrt(r.beta(ap, rx))
                                   : std::sqrt(r.lambda(ap, rx - u));
        for (std::size_t s = 0; s < streams; ++s) {
          const double ws = w(ap, s);
          if (ws == 0.0) continue;
          const std::complex<double>* prec =
              s < u ? &est.chat[(ap * u + s) * l]
                    : &est.that_grp[(ap * m + (s - u)) * l];
          std::complex<double> dot = 0.0;
          for (std::size_t a = 0; a < l; ++a)
            dot += gain * ch[a] * std::conj(prec[a]);
          t[s] += ws * dot;
        }
      }
      std::size_t own;
      if (rx < u) {
        own = rx;
      } else {
        int g = 0;
        const int flat = static_cast<int>(rx - u);
        while (r.groups.offsets[g] + r.groups.sizes[g] <= flat) ++g;
        own = u + static_cast<std::size_t>(g);
      }
      mean_d[rx] += t[own];
      pow_d[rx] += std::norm(t[own]);
      for (std::size_t s = 0; s < streams; ++s)
        if (s != own) intf[rx] += std::norm(t[s]);
    }
  }

  McCertification out;
  out.draws = draws;
  const double inv = 1.0 / static_cast<double>(draws);
  auto emp_sinr = [&](std::size_t rx) {
    const std::complex<double> mu = mean_d[rx] * inv;
    const double var = pow_d[rx] * inv - std::norm(mu);
    return std::norm(mu) / (var + intf[rx] * inv + 1.0);
  };
  out.sinr_emp_uni.resize(u);
  out.sinr_closed_uni.resize(u);
  for (std::size_t j = 0; j < u; ++j) {
    out.sinr_emp_uni[j] = emp_sinr(j);
    out.sinr_closed_uni[j] = sinr_unicast(al, st, r, static_cast<int>(j));
  }
  out.sinr_emp_multi.resize(km);
  out.sinr_closed_multi.resize(km);
  for (int g = 0; g < r.groups.count(); ++g)
    for (int k = 0; k < r.groups.size(g); ++k) {
      const std::size_t f = static_cast<std::size_t>(r.groups.flat(g, k));
      out.sinr_emp_multi[f] = emp_sinr(u + f);
      out.sinr_closed_multi[f] = sinr_multicast(al, st, r, g, k);
    }
  for (std::size_t j = 0; j < u + km; ++j) {
    const double closed =
        j < u ? out.sinr_closed_uni[j] : out.sinr_closed_multi[j - u];
    const double emp = j < u ? out.sinr_emp_uni[j] : out.sinr_emp_multi[j - u];
    const double rel = std::abs(closed - emp) / std::max(closed, 1e-12);
    out.max_rel_err = std::max(out.max_rel_err, rel);
  }
  out.power_closed.resize(n);
  out.power_emp.resize(n);
  out.power_stderr.resize(n);
  for (std::size_t ap = 0; ap < n; ++ap) {
    out.power_closed[ap] = ap_power_fraction(al, st, r, ap);
    const double mean = pw_sum[ap] * inv;
    const double var = std::max(0.0, pw_sq[ap] * inv - mean * mean);
    out.power_emp[ap] = mean;
    out.power_stderr[ap] = std::sqrt(var * inv);
  }
  return out;
}

}  // namespace cfmm
