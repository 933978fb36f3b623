// SPDX-License-Identifier: Apache-2.0
//
// Network realization generation: drops access points, unicast users, and
// multicast group members uniformly on a square area, draws spatially
// correlated log-normal shadowing, and produces noise-normalized large-scale
// gains. Gains feed the channel-estimation statistics and every formula
// downstream; positions are kept for export and debugging.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfmm/matrix.hpp"
#include "cfmm/rng.hpp"

namespace cfmm {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline double dist(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct NetworkConfig {
  int num_aps = 100;            // transmitters, each with antennas_per_ap antennas
  int antennas_per_ap = 4;
  int num_unicast = 16;         // users with individual payloads
  std::vector<int> group_sizes = {4, 4, 4};  // members per multicast group
  double area_m = 1000.0;       // square side length
  int coherence_symbols = 200;  // symbols per coherence interval
  int pilot_symbols = 0;        // 0 = one pilot per unicast user + per group
  double dl_power_mw = 1000.0;
  double ul_power_mw = 100.0;
  double noise_dbm = -92.0;
  double shadow_sigma_db = 4.0;
  double shadow_decorr_m = 9.0;  // distance halving the shadowing correlation
  double pl_const_db = -30.5;
  double pl_slope_db = 36.7;
  std::uint64_t seed = 1;

  int num_groups() const { return static_cast<int>(group_sizes.size()); }
  int total_group_users() const {
    int t = 0;
    for (int k : group_sizes) t += k;
    return t;
  }
  // Entities sharing the pilot budget: unicast users plus one per group.
  int num_entities() const { return num_unicast + num_groups(); }
  int resolved_pilots() const {
    return pilot_symbols > 0 ? pilot_symbols : num_entities();
  }
};

inline void validate(const NetworkConfig& c) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (c.num_aps < 1) fail("num_aps must be >= 1");
  if (c.antennas_per_ap < 1) fail("antennas_per_ap must be >= 1");
  if (c.num_unicast < 0) fail("num_unicast must be >= 0");
  if (c.num_unicast + c.num_groups() < 1) fail("need at least one user or group");
  for (int k : c.group_sizes)
    if (k < 1) fail("every group needs >= 1 member");
  if (!(c.area_m > 0.0)) fail("area_m must be positive");
  if (c.coherence_symbols < 1) fail("coherence_symbols must be >= 1");
  const int tau = c.resolved_pilots();
  if (tau < c.num_entities()) fail("pilot_symbols below unicast users + groups");
  if (tau > c.coherence_symbols) fail("pilot_symbols exceeds coherence_symbols");
  if (!(c.dl_power_mw > 0.0)) fail("dl_power_mw must be positive");
  if (!(c.ul_power_mw > 0.0)) fail("ul_power_mw must be positive");
  if (c.shadow_sigma_db < 0.0) fail("shadow_sigma_db must be >= 0");
  if (!(c.shadow_decorr_m > 0.0)) fail("shadow_decorr_m must be positive");
}

// Geometry plus noise-normalized large-scale gains for one network drop.
// beta is num_aps x num_unicast; lambda is num_aps x total group members,
// members flattened in group order via `groups`.
struct NetworkRealization {
  NetworkConfig cfg;
  std::vector<Vec2> ap_xy;
  std::vector<Vec2> uni_xy;
  std::vector<Vec2> multi_xy;
  GroupIndex groups;
  Mat<double> beta;
  Mat<double> lambda;
};

// Path loss in dB at distance d meters; distances below 1 m saturate at the
// 1 m value. Non-positive distances are rejected.
inline double path_loss_db(const NetworkConfig& c, double d) {
  if (!(d > 0.0)) throw std::domain_error("distance must be positive");
  return c.pl_const_db + c.pl_slope_db * (-std::log10(std::max(d, 1.0)));
}

inline NetworkRealization generate_topology(const NetworkConfig& cfg) {
  validate(cfg);
  NetworkRealization r;
  r.cfg = cfg;
  r.groups = GroupIndex::from_sizes(cfg.group_sizes);
  Rng rng(derive_seed(cfg.seed, 0));
  auto drop = [&](std::vector<Vec2>& out, int n) {
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      const double x = rng.uniform() * cfg.area_m;
      const double y = rng.uniform() * cfg.area_m;
      out.push_back({x, y});
    }
  };
  drop(r.ap_xy, cfg.num_aps);
  drop(r.uni_xy, cfg.num_unicast);
  drop(r.multi_xy, r.groups.total);
  return r;
}

// In-place lower Cholesky; returns false if a pivot is not strictly positive.
inline bool cholesky_lower(Mat<double>& a) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0)) return false;
    const double lj = std::sqrt(d);
    a(j, j) = lj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / lj;
    }
    for (std::size_t k = j + 1; k < n; ++k) a(j, k) = 0.0;
  }
  return true;
}

// Positions of all served entities in gain-column order: unicast users first,
// then group members flattened.
inline std::vector<Vec2> entity_positions(const NetworkRealization& r) {
  std::vector<Vec2> pos = r.uni_xy;
  pos.insert(pos.end(), r.multi_xy.begin(), r.multi_xy.end());
  return pos;
}

// Shadowing field in dB, num_aps x entities. Rows are independent across APs;
// within a row the covariance between entities h, h' is
// sigma^2 * 2^(-dist(h,h')/decorr). Sampled by factoring the entity covariance
// once and applying it to per-AP standard normal vectors.
inline Mat<double> shadow_field(const NetworkRealization& r) {
  const NetworkConfig& cfg = r.cfg;
  const auto pos = entity_positions(r);
  const std::size_t h = pos.size();
  const std::size_t n = static_cast<std::size_t>(cfg.num_aps);
  Mat<double> f(n, h, 0.0);
  if (cfg.shadow_sigma_db == 0.0 || h == 0) return f;

  const double var = cfg.shadow_sigma_db * cfg.shadow_sigma_db;
  Mat<double> cov(h, h);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < h; ++j)
      cov(i, j) = var * std::exp2(-dist(pos[i], pos[j]) / cfg.shadow_decorr_m);

  Mat<double> chol;
  bool ok = false;
  for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
    chol = cov;
    ok = cholesky_lower(chol);
    if (!ok)
      for (std::size_t i = 0; i < h; ++i) cov(i, i) += 1e-9 * var;
  }
  if (!ok) throw std::runtime_error("shadowing covariance is not factorable");

  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<double> g(h);
  for (std::size_t ap = 0; ap < n; ++ap) {
    for (std::size_t i = 0; i < h; ++i) g[i] = rng.normal();
    for (std::size_t i = 0; i < h; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k <= i; ++k) s += chol(i, k) * g[k];
      f(ap, i) = s;
    }
  }
  return f;
}

// Fills beta/lambda from geometry and a shadowing field: linear path gain
// times shadowing, divided by the noise power in mW, so noise terms in all
// SINR expressions are exactly 1.
inline void large_scale(NetworkRealization& r, const Mat<double>& f) {
  const NetworkConfig& cfg = r.cfg;
  const auto pos = entity_positions(r);
  const std::size_t n = static_cast<std::size_t>(cfg.num_aps);
  if (f.rows() != n || f.cols() != pos.size())
    throw std::invalid_argument("shadow field shape mismatch");
  const double noise_mw = std::pow(10.0, cfg.noise_dbm / 10.0);
  const std::size_t u = static_cast<std::size_t>(cfg.num_unicast);
  r.beta = Mat<double>(n, u);
  r.lambda = Mat<double>(n, pos.size() - u);
  for (std::size_t ap = 0; ap < n; ++ap) {
    for (std::size_t h = 0; h < pos.size(); ++h) {
      const double pl = path_loss_db(cfg, dist(r.ap_xy[ap], pos[h]));
      const double gain = std::pow(10.0, (pl + f(ap, h)) / 10.0) / noise_mw;
      if (h < u)
        r.beta(ap, h) = gain;
      else
        r.lambda(ap, h - u) = gain;
    }
  }
}

inline NetworkRealization generate_network(const NetworkConfig& cfg) {
  NetworkRealization r = generate_topology(cfg);
  large_scale(r, shadow_field(r));
  return r;
}

// Long-format CSV: one row per (AP, entity) with positions, distance, and the
// noise-normalized gain in dB.
inline void export_realization_csv(const NetworkRealization& r,
                                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "ap,entity_kind,entity,group,member,ap_x,ap_y,x,y,dist_m,gain_db\n";
  char buf[256];
  const auto pos = entity_positions(r);
  const std::size_t u = static_cast<std::size_t>(r.cfg.num_unicast);
  for (std::size_t ap = 0; ap < r.ap_xy.size(); ++ap) {
    for (std::size_t h = 0; h < pos.size(); ++h) {
      const bool uni = h < u;
      const double gain = uni ? r.beta(ap, h) : r.lambda(ap, h - u);
      int group = -1, member = -1;
      if (!uni) {
        int flat = static_cast<int>(h - u);
        for (int m = 0; m < r.groups.count(); ++m)
          if (flat >= r.groups.offsets[m] &&
              flat < r.groups.offsets[m] + r.groups.sizes[m]) {
            group = m;
            member = flat - r.groups.offsets[m];
            break;
          }
      }
      std::snprintf(buf, sizeof buf,
                    "%zu,%s,%zu,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.10g\n", ap,
                    uni ? "unicast" : "multicast", h, group, member,
                    r.ap_xy[ap].x, r.ap_xy[ap].y, pos[h].x, pos[h].y,
                    dist(r.ap_xy[ap], pos[h]), 10.0 * std::log10(gain));
      out << buf;
    }
  }
}

}  // namespace cfmm
