#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "desk.hpp"
#include "leobeam/orchestrator.hpp"
#include "synthetic.hpp"

using namespace leobeam;

namespace {

void expect_same(const Allocation& a, const Allocation& b) {
  EXPECT_EQ(a.center, b.center);
  EXPECT_EQ(a.sub, b.sub);
  EXPECT_EQ(a.power, b.power);
  EXPECT_EQ(a.assoc, b.assoc);
}

}  // namespace

TEST(Init, FeasibleOnRandomNetworks) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    const int Q = 1 + rng.index(4), C = 1 + rng.index(6), N = rng.index(9), T = 1 + rng.index(3);
    const int K = 1 + rng.index(5), kthr = 1 + rng.index(K);
    auto net = testnet::random(seed, Q, C, N, T, K, kthr, 1 + rng.index(Q));
    net.radio.satellite_power_cap = rng.uniform(1.0, 40.0);
    for (int g = 0; g < Q; ++g)
      for (int n = 0; n < N; ++n)
        for (int t = 0; t < T; ++t) net.channel.set_usable(g, n, t, rng.uniform() < 0.8);
    const auto a = initialize_allocation(net);
    for (const auto& v : check_feasibility(net, a)) ADD_FAILURE() << "seed " << seed << ": " << v.constraint << " " << v.detail;
    for (int t = 0; t < T; ++t)
      for (int n = 0; n < N; ++n) EXPECT_LE(a.count(n, t), kthr);
  }
}

TEST(Init, NoUsers) {
  auto net = testnet::blank(3, 2, 0, 2, 4, 2, 1.0, 1);
  net.radio.satellite_power_cap = 12.0;
  const auto a = initialize_allocation(net);
  EXPECT_TRUE(a.sub.empty());
  for (double p : a.power) EXPECT_DOUBLE_EQ(p, 4.0);
}

TEST(Init, SingleUserGetsCap) {
  auto net = testnet::blank(1, 1, 1, 1, 2, 1);
  net.channel.h[0] = 1.0;
  const auto a = initialize_allocation(net);
  EXPECT_EQ(a.count(0, 0), 1);
}

TEST(Init, EqualSplitRespectsBeamCap) {
  auto net = testnet::blank(4, 1, 1, 2, 2, 1, 1.0, 2);
  net.radio.beam_power_cap = 3.0;
  net.radio.satellite_power_cap = 10.0;
  auto a = initialize_allocation(net);
  for (double p : a.power) EXPECT_DOUBLE_EQ(p, 3.0);
  net.radio.satellite_power_cap = 4.0;
  a = initialize_allocation(net);
  for (double p : a.power) EXPECT_DOUBLE_EQ(p, 2.0);
}

TEST(Framework, ConvergesFeasiblyWithoutDecrease) {
  for (int L : {1, 3}) {
    const auto s = desk::scenario(L);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto net = build_network(s, seed);
      for (Algorithm alg : {Algorithm::proposal, Algorithm::baseline1, Algorithm::baseline2}) {
        FrameworkConfig cfg;
        cfg.seed = seed;
        RunRecord rec;
        const auto a = run_framework(net, cfg, alg, rec);
        EXPECT_TRUE(rec.converged);
        EXPECT_LE(rec.outer_iterations, 10);
        EXPECT_EQ(rec.violations, 0) << (rec.violation_log.empty() ? "" : rec.violation_log[0]);
        EXPECT_EQ(rec.outer_decreases, 0);
        EXPECT_GE(rec.objective, rec.initial_objective);
        for (std::size_t i = 1; i < rec.iterations.size(); ++i)
          EXPECT_GE(rec.iterations[i].objective, rec.iterations[i - 1].objective);
        EXPECT_DOUBLE_EQ(rec.objective, objective(net, a));
        EXPECT_TRUE(check_feasibility(net, a).empty());
      }
    }
  }
}

TEST(Framework, SingleBeamConvergesAfterFirstIteration) {
  const auto s = desk::scenario(1);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto net = build_network(s, seed);
    RunRecord rec;
    run_framework(net, {}, Algorithm::proposal, rec);
    EXPECT_TRUE(rec.converged);
    EXPECT_EQ(rec.outer_iterations, 1) << "seed " << seed;
  }
}

TEST(Framework, Deterministic) {
  const auto net = build_network(desk::scenario(3), 9);
  RunRecord r1, r2;
  const auto a = run_framework(net, {}, Algorithm::proposal, r1);
  const auto b = run_framework(net, {}, Algorithm::proposal, r2);
  expect_same(a, b);
  ASSERT_EQ(r1.iterations.size(), r2.iterations.size());
  for (std::size_t i = 0; i < r1.iterations.size(); ++i)
    EXPECT_EQ(r1.iterations[i].objective, r2.iterations[i].objective);
}

TEST(Framework, NoUsersRunsToZero) {
  const auto net = build_network(desk::scenario(2, 12, 3, 0), 1);
  RunRecord rec;
  run_framework(net, {}, Algorithm::proposal, rec);
  EXPECT_TRUE(rec.converged);
  EXPECT_EQ(rec.objective, 0.0);
  EXPECT_EQ(rec.violations, 0);
}

TEST(Baseline2, PowerStaysAtEqualSplit) {
  const auto net = build_network(desk::scenario(3), 2);
  RunRecord rec;
  const auto a = baseline2(net, {}, rec);
  Allocation ref(net);
  equal_split_power(net, ref);
  EXPECT_EQ(a.power, ref.power);
  for (const auto& it : rec.iterations) EXPECT_EQ(it.sca_iterations, 0);
}

TEST(Baseline2, MatchesProposalWithOneBeam) {
  const auto s = desk::scenario(1);
  int identical = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto net = build_network(s, seed);
    RunRecord rp, rb;
    const auto p = run_framework(net, {}, Algorithm::proposal, rp);
    const auto b = baseline2(net, {}, rb);
    // with the cap binding the two coincide; otherwise power control found
    // a strictly better point against the other satellite's beam
    const bool at_cap = std::all_of(p.power.begin(), p.power.end(),
                                    [&](double v) { return v == net.radio.beam_power_cap; });
    if (at_cap) {
      ++identical;
      EXPECT_EQ(rp.objective, rb.objective) << "seed " << seed;
      expect_same(p, b);
    } else {
      EXPECT_GT(rp.objective, rb.objective) << "seed " << seed;
    }
  }
  EXPECT_GE(identical, 3);
}

TEST(Baseline1, CentresFixedOverSlots) {
  const auto net = build_network(desk::scenario(3), 4);
  FrameworkConfig cfg;
  cfg.seed = 4;
  RunRecord rec;
  const auto a = baseline1(net, cfg, rec);
  const auto c = cluster_centers(net, a.Q, 4);
  for (int q = 0; q < a.Q; ++q)
    for (int t = 0; t < a.T; ++t) EXPECT_EQ(a.beam_center(q, t), c[q]);
  for (const auto& it : rec.iterations) EXPECT_EQ(it.swaps, 0);
}

TEST(Clustering, TightClustersGiveTheirCentroids) {
  // candidates on a ring of 12, users packed around 4 of them
  auto net = testnet::blank(4, 12, 20, 1, 2, 1, 1.0, 2);
  const GeodeticCoord o{deg_to_rad(40.0), deg_to_rad(80.0), 0.0};
  for (int c = 0; c < 12; ++c)
    net.candidate_positions.push_back(
        geodetic_to_ecef(destination_point(o, 2 * kPi * c / 12, 200e3, kEarthRadius), kEarthRadius));
  const int hubs[4] = {0, 3, 6, 9};
  Rng rng(5);
  for (int n = 0; n < 20; ++n) {
    const auto g = destination_point(o, 2 * kPi * hubs[n % 4] / 12, 200e3, kEarthRadius);
    net.user_positions.push_back(geodetic_to_ecef(
        destination_point(g, rng.uniform(0, 2 * kPi), rng.uniform(0, 2e3), kEarthRadius), kEarthRadius));
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = cluster_centers(net, 4, seed);
    std::sort(c.begin(), c.end());
    EXPECT_EQ(c, (std::vector<int>{0, 3, 6, 9})) << "seed " << seed;
    EXPECT_EQ(cluster_centers(net, 4, seed), cluster_centers(net, 4, seed));
  }
}

TEST(Clustering, FewerUsersThanBeamsStillDistinct) {
  const auto net = build_network(desk::scenario(3, 12, 1, 2), 3);
  const auto c = cluster_centers(net, 6, 3);
  std::vector<int> s = c;
  std::sort(s.begin(), s.end());
  EXPECT_EQ(std::unique(s.begin(), s.end()), s.end());
  for (int v : c) EXPECT_GE(v, 0);
}

TEST(Sweep, RowCountsAndOrder) {
  auto s = desk::scenario(1, 8, 2, 6);
  s.seeds = {1, 2};
  auto rows = run_sweep(s);
  EXPECT_EQ(rows.size(), 6u);
  s.sweep.beams_per_satellite = {1, 3};
  s.sweep.subchannels = {2, 4};
  rows = run_sweep(s, false, 2);
  ASSERT_EQ(rows.size(), 2u * 2 * 2 * 3);
  EXPECT_EQ(rows[0].seed, 1u);
  EXPECT_EQ(rows[0].L, 1);
  EXPECT_EQ(rows[0].K, 2);
  EXPECT_EQ(rows[0].algorithm, Algorithm::proposal);
  EXPECT_EQ(rows[1].algorithm, Algorithm::baseline1);
  EXPECT_EQ(rows.back().seed, 2u);
  EXPECT_EQ(rows.back().L, 3);
  for (const auto& r : rows) EXPECT_LE(r.K_thr, r.K);
}

TEST(Sweep, ThreadCountDoesNotChangeRows) {
  auto s = desk::scenario(1, 8, 2, 6);
  s.seeds = {1, 2};
  s.sweep.beams_per_satellite = {1, 2};
  const auto a = run_sweep(s, false, 1), b = run_sweep(s, false, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].metrics.sum_alpha_utility, b[i].metrics.sum_alpha_utility);
    EXPECT_EQ(a[i].metrics.sum_rate, b[i].metrics.sum_rate);
    EXPECT_EQ(a[i].outer_iterations, b[i].outer_iterations);
  }
}
