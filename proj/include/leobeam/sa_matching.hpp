#pragma once

// Subchannel assignment: per-beam deferred acceptance between
// subchannel-time-slot units and users, then per-slot negotiation that
// strips shared subchannels where removal raises the total unit utility.

#include <algorithm>
#include <cmath>
#include <vector>

#include "leobeam/netmodel.hpp"

namespace leobeam {

struct SubSlotUnit {
  int k = 0;
  int t = 0;
};

/// Matching of one beam: unit (k, t) -> user or -1.
struct SaBeamMatching {
  int q = 0;
  int K = 0, T = 0;
  std::vector<int> unit_to_user;  // [t*K + k]

  int user_of(int k, int t) const { return unit_to_user[static_cast<std::size_t>(t) * K + k]; }
  std::vector<SubSlotUnit> units_of(int n) const {
    std::vector<SubSlotUnit> out;
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < K; ++k)
        if (user_of(k, t) == n) out.push_back({k, t});
    return out;
  }
  int count(int n, int t) const {
    int s = 0;
    for (int k = 0; k < K; ++k) s += user_of(k, t) == n;
    return s;
  }
};

struct SaOptions {
  int negotiation_cap = 2;              // I_2
  double interference_threshold = 0.0;  // W; 0 means the noise power
  double rel_tol = 1e-12;
};

struct SaStats {
  int removals = 0;
  int non_increasing_removals = 0;
  int min_sinr_removals = 0;
  std::vector<int> removals_per_slot;
  std::vector<double> removal_gains;  // per-slot total unit utility change at each removal
};

// ------------------------------------------------------------- utilities

inline double sa_interference_free_snr(const Network& net, const Allocation& alloc, int q, int n,
                                       int t) {
  const int c = alloc.beam_center(q, t);
  if (c < 0) return 0.0;
  return net.h(q, c, n, t) * alloc.beam_power(q, t) / alloc.K / net.noise();
}

inline double sa_interference_free_rate(const Network& net, const Allocation& alloc, int q, int n,
                                        int t) {
  return subchannel_rate(net.radio.subchannel_bandwidth(),
                         sa_interference_free_snr(net, alloc, q, n, t));
}

/// Utility of user n holding `units` of its beam, interference-free.
inline double user_utility(const Network& net, const Allocation& alloc, int q, int n,
                           const std::vector<SubSlotUnit>& units) {
  double r = 0.0;
  for (const auto& u : units) r += sa_interference_free_rate(net, alloc, q, n, u.t);
  return utility(net.radio, r);
}

/// Utility unit (k, t) of beam q gets from user n, from the rate n would
/// have on k with the allocation's interference (or none).
inline double sa_unit_utility(const Network& net, const Allocation& alloc, int q, int k, int n,
                              int t, bool with_interference) {
  const int c = alloc.beam_center(q, t);
  if (c < 0) return utility(net.radio, 0.0);
  const double signal = net.h(q, c, n, t) * alloc.beam_power(q, t) / alloc.K;
  double i = 0.0;
  if (with_interference) {
    std::vector<int> occ;
    fill_occupancy(alloc, t, occ);
    i = interference_from_occupancy(net, alloc, occ, n, k, t, q);
  }
  return utility(net.radio, subchannel_rate(net.radio.subchannel_bandwidth(),
                                            signal / (i + net.noise())));
}

// ------------------------------------------------------- single-beam DA

/// Deferred acceptance inside beam q, ignoring other beams. Units propose
/// to users associated with q in their slot, best rate first; a user keeps
/// its K_thr best units per slot (lower k on ties).
inline SaBeamMatching single_beam_matching(const Network& net, const Allocation& alloc, int q) {
  const int K = alloc.K, T = alloc.T, N = alloc.N;
  const int cap = net.radio.per_user_cap;
  SaBeamMatching m{q, K, T, std::vector<int>(static_cast<std::size_t>(K) * T, -1)};
  for (int t = 0; t < T; ++t) {
    if (alloc.beam_center(q, t) < 0) continue;
    std::vector<double> rate(N, 0.0);
    std::vector<int> users;
    for (int n = 0; n < N; ++n) {
      if (alloc.user_beam(n, t) != q) continue;
      rate[n] = sa_interference_free_rate(net, alloc, q, n, t);
      if (rate[n] > 0.0 && sa_interference_free_snr(net, alloc, q, n, t) >= net.radio.min_sinr)
        users.push_back(n);
    }
    // every unit of the slot ranks users the same way
    std::stable_sort(users.begin(), users.end(), [&](int a, int b) {
      return utility(net.radio, rate[a]) > utility(net.radio, rate[b]);
    });
    std::vector<int> next(K, 0);
    std::vector<std::vector<int>> held(N);
    for (;;) {
      std::vector<std::vector<int>> props(N);
      bool any = false;
      for (int k = 0; k < K; ++k) {
        if (m.user_of(k, t) >= 0 || next[k] >= static_cast<int>(users.size())) continue;
        props[users[next[k]++]].push_back(k);
        any = true;
      }
      if (!any) break;
      for (int n : users) {
        if (props[n].empty()) continue;
        auto s = held[n];
        s.insert(s.end(), props[n].begin(), props[n].end());
        std::sort(s.begin(), s.end());  // equal rates within a slot: lower k first
        for (int k : s) m.unit_to_user[static_cast<std::size_t>(t) * K + k] = -1;
        if (static_cast<int>(s.size()) > cap) s.resize(cap);
        for (int k : s) m.unit_to_user[static_cast<std::size_t>(t) * K + k] = n;
        held[n] = std::move(s);
      }
    }
  }
  return m;
}

inline void install_beam_matching(Allocation& alloc, const SaBeamMatching& m) {
  for (int t = 0; t < alloc.T; ++t) {
    for (int n = 0; n < alloc.N; ++n)
      if (alloc.user_beam(n, t) == m.q)
        for (int k = 0; k < alloc.K; ++k) alloc.set(k, n, t, false);
    for (int k = 0; k < alloc.K; ++k)
      if (m.user_of(k, t) >= 0) alloc.set(k, m.user_of(k, t), t, true);
  }
}

// ------------------------------------------------------------ negotiation

namespace detail {

inline int holder(const Allocation& alloc, int q, int k, int t) {
  for (int n = 0; n < alloc.N; ++n)
    if (alloc.user_beam(n, t) == q && alloc.has(k, n, t)) return n;
  return -1;
}

// Sum of unit utilities on subchannel k at slot t; `drop` lists holders
// treated as not holding k.
inline double subchannel_total(const Network& net, const Allocation& alloc, int k, int t,
                               const std::vector<int>& drop = {}) {
  std::vector<std::pair<int, int>> links;  // (beam, user)
  for (int n = 0; n < alloc.N; ++n) {
    if (!served_link(alloc, n, k, t)) continue;
    if (std::find(drop.begin(), drop.end(), n) != drop.end()) continue;
    links.push_back({alloc.user_beam(n, t), n});
  }
  double total = 0.0;
  for (const auto& [q, n] : links) {
    double i = 0.0;
    for (const auto& [q2, n2] : links)
      if (q2 != q) i += net.h(q2, alloc.beam_center(q2, t), n, t) * alloc.beam_power(q2, t) / alloc.K;
    const double s = net.h(q, alloc.beam_center(q, t), n, t) * alloc.beam_power(q, t) / alloc.K;
    total += utility(net.radio, subchannel_rate(net.radio.subchannel_bandwidth(),
                                                s / (i + net.noise())));
  }
  return total;
}

inline double slot_total(const Network& net, const Allocation& alloc, int t) {
  double s = 0.0;
  for (int k = 0; k < alloc.K; ++k) s += subchannel_total(net, alloc, k, t);
  return s;
}

// holder of k in `from` sees beam `to` above the elevation floor with
// interference at or above the threshold
inline bool exposed(const Network& net, const Allocation& alloc, int from_holder, int to, int t,
                    double threshold) {
  if (!net.usable(to, from_holder, t)) return false;
  const double i = net.h(to, alloc.beam_center(to, t), from_holder, t) *
                   alloc.beam_power(to, t) / alloc.K;
  return i >= threshold;
}

}  // namespace detail

struct InterferingPair {
  int q1 = 0, q2 = 0, k = 0;
};

/// All (q1 < q2, k) at slot t meeting the three interfering-pair
/// properties, in ascending order.
inline std::vector<InterferingPair> find_interfering_pairs(const Network& net,
                                                           const Allocation& alloc, int t,
                                                           const SaOptions& opt = {}) {
  const double thr = opt.interference_threshold > 0.0 ? opt.interference_threshold : net.noise();
  std::vector<InterferingPair> out;
  for (int q1 = 0; q1 < alloc.Q; ++q1) {
    if (alloc.beam_center(q1, t) < 0) continue;
    for (int q2 = q1 + 1; q2 < alloc.Q; ++q2) {
      if (alloc.beam_center(q2, t) < 0) continue;
      for (int k = 0; k < alloc.K; ++k) {
        const int n1 = detail::holder(alloc, q1, k, t);
        const int n2 = detail::holder(alloc, q2, k, t);
        if (n1 < 0 || n2 < 0) continue;
        if (!detail::exposed(net, alloc, n1, q2, t, thr) &&
            !detail::exposed(net, alloc, n2, q1, t, thr))
          continue;
        const double base = detail::subchannel_total(net, alloc, k, t);
        const double r1 = detail::subchannel_total(net, alloc, k, t, {n1});
        const double r2 = detail::subchannel_total(net, alloc, k, t, {n2});
        const double tol = opt.rel_tol * std::max(std::fabs(base), 1.0);
        if (r1 > base + tol || r2 > base + tol) out.push_back({q1, q2, k});
      }
    }
  }
  return out;
}

/// Negotiation at one slot. Each executed removal strips k from the holder
/// with the lower unit utility, or from the other holder when only that
/// removal raises the total.
inline int negotiate(const Network& net, Allocation& alloc, int t, const SaOptions& opt,
                     SaStats& stats) {
  std::vector<int> counter(static_cast<std::size_t>(alloc.Q) * alloc.K, 0);
  auto s = [&](int q, int k) -> int& { return counter[static_cast<std::size_t>(q) * alloc.K + k]; };
  int removed = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : find_interfering_pairs(net, alloc, t, opt)) {
      if (s(p.q1, p.k) + s(p.q2, p.k) >= opt.negotiation_cap) continue;
      const int n1 = detail::holder(alloc, p.q1, p.k, t);
      const int n2 = detail::holder(alloc, p.q2, p.k, t);
      if (n1 < 0 || n2 < 0) continue;  // an earlier removal in this pass freed k
      SlotEval ev;
      evaluate_slot(net, alloc, t, ev);
      const double phi1 = utility(net.radio, subchannel_rate(net.radio.subchannel_bandwidth(),
                                                             ev.sinr[n1 * alloc.K + p.k]));
      const double phi2 = utility(net.radio, subchannel_rate(net.radio.subchannel_bandwidth(),
                                                             ev.sinr[n2 * alloc.K + p.k]));
      const double base = detail::subchannel_total(net, alloc, p.k, t);
      const double tol = opt.rel_tol * std::max(std::fabs(base), 1.0);
      int victim = phi1 <= phi2 ? n1 : n2;
      int vq = phi1 <= phi2 ? p.q1 : p.q2;
      if (!(detail::subchannel_total(net, alloc, p.k, t, {victim}) > base + tol)) {
        victim = victim == n1 ? n2 : n1;
        vq = vq == p.q1 ? p.q2 : p.q1;
        if (!(detail::subchannel_total(net, alloc, p.k, t, {victim}) > base + tol)) continue;
      }
      const double before = detail::slot_total(net, alloc, t);
      alloc.set(p.k, victim, t, false);
      const double after = detail::slot_total(net, alloc, t);
      ++s(vq, p.k);
      ++removed;
      ++stats.removals;
      stats.removal_gains.push_back(after - before);
      if (after < before) ++stats.non_increasing_removals;
      changed = true;
    }
  }
  return removed;
}

/// Full subchannel assignment: fresh per-beam matchings, negotiation per
/// slot, then the SINR floor.
inline SaStats run_sa(const Network& net, Allocation& alloc, const SaOptions& opt = {}) {
  SaStats stats;
  for (int t = 0; t < alloc.T; ++t) alloc.clear_slot_subchannels(t);
  for (int q = 0; q < alloc.Q; ++q) install_beam_matching(alloc, single_beam_matching(net, alloc, q));
  stats.removals_per_slot.assign(alloc.T, 0);
  for (int t = 0; t < alloc.T; ++t) stats.removals_per_slot[t] = negotiate(net, alloc, t, opt, stats);
  stats.min_sinr_removals = enforce_min_sinr(net, alloc);
  return stats;
}

}  // namespace leobeam
