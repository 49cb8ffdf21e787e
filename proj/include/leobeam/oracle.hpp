#pragma once

// Brute-force references for tiny instances. Deliberately plain: they
// share only the netmodel evaluator with the algorithms.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "leobeam/netmodel.hpp"

namespace leobeam {

class OracleBoundsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kOracleStateLimit = 1e7;

struct OracleResult {
  Allocation best;
  double objective = -INFINITY;
  std::uint64_t states = 0;  // feasible states evaluated
};

namespace detail {

inline void guard_states(double bound, const char* what) {
  if (bound > kOracleStateLimit)
    throw OracleBoundsError(std::string(what) + ": " + std::to_string(bound) +
                            " states exceed the limit of 1e7");
}

inline bool min_sinr_holds(const Network& net, const Allocation& a) {
  if (net.radio.min_sinr <= 0.0) return true;
  for (int t = 0; t < a.T; ++t)
    for (int n = 0; n < a.N; ++n) {
      if (a.user_beam(n, t) < 0) continue;
      for (int k = 0; k < a.K; ++k)
        if (a.has(k, n, t) && sinr(net, a, n, k, t) < net.radio.min_sinr) return false;
    }
  return true;
}

// literal rates: with fixed subchannels some centre choices make two users
// of one beam share a subchannel, scored as is
inline void consider(const Network& net, const Allocation& a, OracleResult& r) {
  ++r.states;
  const double f = objective_from_rates(net.radio, rate_table(net, a));
  if (f > r.objective) {
    r.objective = f;
    r.best = a;
  }
}

}  // namespace detail

/// Every centre assignment (each beam one candidate or none per slot, no
/// candidate shared within a slot) under the given subchannels and powers.
inline OracleResult exact_bdc(const Network& net, const Allocation& fixed) {
  const int Q = fixed.Q, C = fixed.C, T = fixed.T;
  double per_slot = 0.0;  // partial injections of Q beams into C candidates
  for (int j = 0; j <= std::min(Q, C); ++j) {
    double ways = 1.0;
    for (int i = 0; i < j; ++i) ways *= static_cast<double>(Q - i) * (C - i) / (i + 1);
    per_slot += ways;
  }
  detail::guard_states(std::pow(per_slot, T), "exact_bdc");

  OracleResult r;
  Allocation a = fixed;
  std::vector<char> used(static_cast<std::size_t>(C) * T, 0);
  auto rec = [&](auto&& self, int slot_beam) -> void {
    if (slot_beam == Q * T) {
      associate_users(net, a);
      detail::consider(net, a, r);
      return;
    }
    const int t = slot_beam / Q, q = slot_beam % Q;
    a.beam_center(q, t) = -1;
    self(self, slot_beam + 1);
    for (int c = 0; c < C; ++c) {
      char& u = used[static_cast<std::size_t>(t) * C + c];
      if (u) continue;
      u = 1;
      a.beam_center(q, t) = c;
      self(self, slot_beam + 1);
      u = 0;
    }
    a.beam_center(q, t) = -1;
  };
  rec(rec, 0);
  return r;
}

/// Every subchannel assignment under the given centres and powers: at most
/// K_thr per user, no subchannel shared inside a beam, the SINR floor met.
/// Users without a beam carry nothing.
inline OracleResult exact_sa(const Network& net, const Allocation& fixed) {
  Allocation a = fixed;
  associate_users(net, a);
  const int K = a.K, cap = std::min(net.radio.per_user_cap, K);
  std::vector<unsigned> subsets;
  for (unsigned m = 0; m < (1u << K); ++m)
    if (__builtin_popcount(m) <= cap) subsets.push_back(m);
  double bound = 1.0;
  std::vector<std::pair<int, int>> slots_users;  // (t, n) with a beam
  for (int t = 0; t < a.T; ++t)
    for (int n = 0; n < a.N; ++n) {
      for (int k = 0; k < K; ++k) a.set(k, n, t, false);
      if (a.user_beam(n, t) >= 0) {
        slots_users.push_back({t, n});
        bound *= static_cast<double>(subsets.size());
      }
    }
  detail::guard_states(bound, "exact_sa");

  OracleResult r;
  std::vector<unsigned> busy(static_cast<std::size_t>(a.Q) * a.T, 0);  // per beam and slot
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == slots_users.size()) {
      if (detail::min_sinr_holds(net, a)) detail::consider(net, a, r);
      return;
    }
    const auto [t, n] = slots_users[i];
    unsigned& b = busy[static_cast<std::size_t>(a.user_beam(n, t)) * a.T + t];
    for (unsigned m : subsets) {
      if (m & b) continue;
      for (int k = 0; k < K; ++k) a.set(k, n, t, (m >> k) & 1u);
      b |= m;
      self(self, i + 1);
      b &= ~m;
    }
    for (int k = 0; k < K; ++k) a.set(k, n, t, false);
  };
  rec(rec, 0);
  return r;
}

/// Grid search over the powers of beams that serve someone, `resolution`
/// steps of P_q^max per beam, every slot jointly, satellite budgets held.
inline OracleResult grid_power(const Network& net, const Allocation& fixed, int resolution) {
  if (resolution < 1) throw std::invalid_argument("grid_power: resolution must be >= 1");
  Allocation a = fixed;
  std::vector<std::pair<int, int>> dims;  // (q, t)
  for (int t = 0; t < a.T; ++t) {
    int here = 0;
    for (int q = 0; q < a.Q; ++q) {
      bool serves = false;
      for (int n = 0; n < a.N && !serves; ++n)
        if (a.user_beam(n, t) == q)
          for (int k = 0; k < a.K; ++k) serves = serves || a.has(k, n, t);
      if (serves) {
        dims.push_back({q, t});
        ++here;
      }
    }
    if (here > 3) throw OracleBoundsError("grid_power: more than 3 powers in one slot");
  }
  detail::guard_states(std::pow(resolution + 1.0, static_cast<double>(dims.size())), "grid_power");

  const double step = net.radio.beam_power_cap / resolution;
  auto budget_ok = [&] {
    for (int t = 0; t < a.T; ++t)
      for (int m = 0; m < net.satellite_count; ++m) {
        double s = 0.0;
        for (int q = 0; q < a.Q; ++q)
          if (net.beam_satellite[q] == m) s += a.beam_power(q, t);
        if (s > net.radio.satellite_power_cap * (1 + 1e-12)) return false;
      }
    return true;
  };
  OracleResult r;
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == dims.size()) {
      if (budget_ok()) detail::consider(net, a, r);
      return;
    }
    const auto [q, t] = dims[i];
    for (int j = 0; j <= resolution; ++j) {
      a.beam_power(q, t) = j == resolution ? net.radio.beam_power_cap : j * step;
      self(self, i + 1);
    }
    a.beam_power(q, t) = fixed.beam_power(q, t);
  };
  rec(rec, 0);
  return r;
}

}  // namespace leobeam
