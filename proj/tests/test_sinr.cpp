// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cfmm/sinr.hpp"
#include "helpers.hpp"

using namespace cfmm;

namespace {

// Single AP, single unicast user, unit gain, unit pilot energy: the closed
// form collapses to p L^2 eta gamma^2 / (p L eta beta gamma + 1).
NetworkRealization one_link_network() {
  NetworkRealization r;
  r.cfg.num_aps = 1;
  r.cfg.antennas_per_ap = 2;
  r.cfg.num_unicast = 1;
  r.cfg.group_sizes = {};
  r.cfg.pilot_symbols = 1;
  r.cfg.ul_power_mw = 1.0;
  r.cfg.dl_power_mw = 10.0;
  r.groups = GroupIndex::from_sizes({});
  r.beta = Mat<double>(1, 1, 1.0);
  r.lambda = Mat<double>(1, 0);
  return r;
}

}  // namespace

TEST_CASE("single-link unicast SINR matches the scalar reduction") {
  const NetworkRealization r = one_link_network();
  const EstimationStats st = compute_stats(r);
  REQUIRE(st.gamma(0, 0) == Catch::Approx(0.5).epsilon(1e-15));
  Allocation al;
  al.assoc_uni = Mat<std::uint8_t>(1, 1, 1);
  al.assoc_multi = Mat<std::uint8_t>(1, 0);
  al.eta_uni = Mat<double>(1, 1, 0.1);
  al.eta_multi = Mat<double>(1, 0);
  const double p = 10.0, l = 2.0, eta = 0.1, beta = 1.0, gamma = 0.5;
  const double expect =
      p * l * l * eta * gamma * gamma / (p * l * eta * beta * gamma + 1.0);
  CHECK(sinr_unicast(al, st, r, 0) == Catch::Approx(expect).epsilon(1e-14));
  CHECK(expect == Catch::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("single-member multicast group reduces to the unicast-style form") {
  NetworkRealization r;
  r.cfg.num_aps = 1;
  r.cfg.antennas_per_ap = 2;
  r.cfg.num_unicast = 0;
  r.cfg.group_sizes = {1};
  r.cfg.pilot_symbols = 1;
  r.cfg.ul_power_mw = 1.0;
  r.cfg.dl_power_mw = 10.0;
  r.groups = GroupIndex::from_sizes({1});
  r.beta = Mat<double>(1, 0);
  r.lambda = Mat<double>(1, 1, 0.8);
  const EstimationStats st = compute_stats(r);
  REQUIRE(st.zeta(0, 0) == Catch::Approx(st.xi(0, 0)).epsilon(1e-15));
  Allocation al;
  al.assoc_uni = Mat<std::uint8_t>(1, 0);
  al.assoc_multi = Mat<std::uint8_t>(1, 1, 1);
  al.eta_uni = Mat<double>(1, 0);
  al.eta_multi = Mat<double>(1, 1, 0.2);
  const double p = 10.0, l = 2.0, eta = 0.2, lam = 0.8, xi = st.xi(0, 0);
  const double expect =
      p * l * l * eta * xi * xi / (p * l * eta * lam * xi + 1.0);
  CHECK(sinr_multicast(al, st, r, 0, 0) ==
        Catch::Approx(expect).epsilon(1e-14));
}

TEST_CASE("members with identical gains see identical SINR") {
  Rng rng(3);
  NetworkRealization r = testutil::synthetic(3, 2, 1, {2}, rng);
  r.lambda(0, 1) = r.lambda(0, 0);
  r.lambda(1, 1) = r.lambda(1, 0);
  r.lambda(2, 1) = r.lambda(2, 0);
  const EstimationStats st = compute_stats(r);
  Allocation al = testutil::random_allocation(st, r, rng);
  CHECK(sinr_multicast(al, st, r, 0, 0) ==
        Catch::Approx(sinr_multicast(al, st, r, 0, 1)).epsilon(1e-13));
}

TEST_CASE("zero power means zero SINR in both parameterizations") {
  Rng rng(4);
  const NetworkRealization r = testutil::synthetic(2, 2, 2, {2}, rng);
  const EstimationStats st = compute_stats(r);
  Allocation al;
  al.assoc_uni = Mat<std::uint8_t>(2, 2, 1);
  al.assoc_multi = Mat<std::uint8_t>(2, 1, 1);
  al.eta_uni = Mat<double>(2, 2, 0.0);
  al.eta_multi = Mat<double>(2, 1, 0.0);
  CHECK(sinr_unicast(al, st, r, 0) == 0.0);
  CHECK(sinr_unicast(al, st, r, 1) == 0.0);
  CHECK(sinr_multicast(al, st, r, 0, 0) == 0.0);
  ThetaVars tv;
  tv.theta = Mat<double>(2, 2, 0.0);
  tv.theta_bar = Mat<double>(2, 1, 0.0);
  CHECK(sinr_unicast_theta(tv, st, r, 1) == 0.0);
  CHECK(sinr_multicast_theta(tv, st, r, 0, 1) == 0.0);
}

TEST_CASE("scaling every power up raises every SINR") {
  Rng rng(6);
  const NetworkRealization r = testutil::synthetic(3, 4, 2, {2}, rng);
  const EstimationStats st = compute_stats(r);
  Allocation al = testutil::random_allocation(st, r, rng, 0.9);
  Allocation half = al;
  for (double& v : half.eta_uni.storage()) v *= 0.5;
  for (double& v : half.eta_multi.storage()) v *= 0.5;
  for (int u = 0; u < 2; ++u)
    CHECK(sinr_unicast(al, st, r, u) > sinr_unicast(half, st, r, u));
  for (int k = 0; k < 2; ++k)
    CHECK(sinr_multicast(al, st, r, 0, k) > sinr_multicast(half, st, r, 0, k));
}

TEST_CASE("square-root power parameterization matches the explicit one") {
  Rng rng(8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const NetworkRealization r = testutil::synthetic(4, 2, 3, {2, 2}, rng);
    const EstimationStats st = compute_stats(r);
    const Allocation al = testutil::random_allocation(st, r, rng);
    const ThetaVars tv = theta_from_allocation(al, st);
    for (int u = 0; u < 3; ++u) {
      const double a = sinr_unicast(al, st, r, u);
      const double b = sinr_unicast_theta(tv, st, r, u);
      worst = std::max(worst, std::abs(a - b) / std::max(a, 1e-300));
    }
    for (int m = 0; m < 2; ++m)
      for (int k = 0; k < 2; ++k) {
        const double a = sinr_multicast(al, st, r, m, k);
        const double b = sinr_multicast_theta(tv, st, r, m, k);
        worst = std::max(worst, std::abs(a - b) / std::max(a, 1e-300));
      }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("spectral efficiency from SINR") {
  CHECK(se_from_sinr(0.0, 200, 19) == 0.0);
  CHECK(se_from_sinr(1.0, 200, 100) == Catch::Approx(0.5).epsilon(1e-15));
  CHECK(se_from_sinr(3.0, 200, 19) == Catch::Approx(1.81).epsilon(1e-12));
  CHECK_THROWS_AS(se_from_sinr(-0.5, 200, 19), std::invalid_argument);
  CHECK_THROWS_AS(se_from_sinr(1.0, 200, 200), std::invalid_argument);
  CHECK_THROWS_AS(se_from_sinr(1.0, 200, 0), std::invalid_argument);
}

TEST_CASE("report aggregates per-user SE with class weights") {
  Rng rng(10);
  const NetworkRealization r = testutil::synthetic(3, 2, 2, {2}, rng);
  const EstimationStats st = compute_stats(r);
  const Allocation al = testutil::random_allocation(st, r, rng);
  const SeReport rep = se_report(al, st, r, 0.8, 0.2);
  REQUIRE(rep.se_uni.size() == 2);
  REQUIRE(rep.se_multi.size() == 2);
  const int t = r.cfg.coherence_symbols, tau = r.cfg.resolved_pilots();
  for (int u = 0; u < 2; ++u)
    CHECK(rep.se_uni[static_cast<std::size_t>(u)] ==
          Catch::Approx(se_from_sinr(sinr_unicast(al, st, r, u), t, tau)));
  double sum = 0.0;
  for (double v : rep.se_uni) sum += 0.8 * v;
  for (double v : rep.se_multi) sum += 0.2 * v;
  CHECK(rep.weighted_sse == Catch::Approx(sum).epsilon(1e-14));
  CHECK(count_qos_violations(rep, 0.0, 0.0) == 0);
  CHECK(count_qos_violations(rep, 1e9, 1e9) == 4);
}

TEST_CASE("allocation validation catches budget and masking violations") {
  Rng rng(12);
  const NetworkRealization r = testutil::synthetic(2, 2, 2, {}, rng);
  const EstimationStats st = compute_stats(r);
  Allocation al = testutil::random_allocation(st, r, rng, 0.5);
  CHECK_NOTHROW(validate_allocation(al, st, r));
  SECTION("budget") {
    al.eta_uni(0, 0) = 1e9;
    al.assoc_uni(0, 0) = 1;
    CHECK_THROWS_AS(validate_allocation(al, st, r), std::invalid_argument);
  }
  SECTION("power without association") {
    al.assoc_uni(0, 0) = 0;
    al.eta_uni(0, 0) = 0.1;
    CHECK_THROWS_AS(validate_allocation(al, st, r), std::invalid_argument);
  }
  SECTION("negative power") {
    al.eta_uni(0, 0) = -0.1;
    al.assoc_uni(0, 0) = 1;
    CHECK_THROWS_AS(validate_allocation(al, st, r), std::invalid_argument);
  }
}
