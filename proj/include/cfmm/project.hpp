// SPDX-License-Identifier: Apache-2.0
//
// Feasible-set projection for the solver variables, applied AP by AP.
// For one AP the theta row must lie in the nonnegative part of the ball of
// radius 1/sqrt(antennas) (the per-AP power budget) and the z row in the
// nonnegative ball of radius sqrt(k_max) intersected with the unit box
// (at most k_max entities selected, each indicator at most 1).
//
// theta: clamp negatives to zero, then shrink onto the ball; this is the
// exact Euclidean projection onto orthant-intersect-ball. z: clamp, shrink,
// then cap entries at 1. Shrinking repeats until the recomputed norm passes
// the test so a projected vector re-projects to itself bit for bit.

#pragma once

#include <cmath>
#include <cstddef>

#include "cfmm/penalty.hpp"

namespace cfmm {

namespace detail {

inline void clamp_shrink(double* r, std::size_t len, double radius) {
  for (std::size_t i = 0; i < len; ++i)
    if (r[i] < 0.0) r[i] = 0.0;
  for (;;) {
    double nrm2 = 0.0;
    for (std::size_t i = 0; i < len; ++i) nrm2 += r[i] * r[i];
    const double nrm = std::sqrt(nrm2);
    if (nrm <= radius) return;
    const double s = radius / nrm;
    for (std::size_t i = 0; i < len; ++i) r[i] *= s;
  }
}

}  // namespace detail

// Projects one AP's theta row onto the per-AP power budget.
inline void project_theta_block(double* r, std::size_t len, int antennas) {
  detail::clamp_shrink(r, len, 1.0 / std::sqrt(static_cast<double>(antennas)));
}

// Projects one AP's z row onto [0,1]^len intersected with the k_max ball.
inline void project_z_block(double* r, std::size_t len, double k_max) {
  detail::clamp_shrink(r, len, std::sqrt(k_max));
  for (std::size_t i = 0; i < len; ++i)
    if (r[i] > 1.0) r[i] = 1.0;
}

// Full projection of a stacked variable vector, AP by AP.
inline void project_vars(SolverVars& s, int antennas, double k_max) {
  const VarDims& d = s.dims;
  const std::size_t cols = static_cast<std::size_t>(d.per_ap());
  for (int ap = 0; ap < d.num_aps; ++ap) {
    project_theta_block(&s.v[static_cast<std::size_t>(d.theta_at(ap, 0))], cols,
                        antennas);
    project_z_block(&s.v[static_cast<std::size_t>(d.z_at(ap, 0))], cols, k_max);
  }
}

}  // namespace cfmm
