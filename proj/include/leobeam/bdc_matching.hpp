#pragma once

// Beam direction control: matching coordinate-time-slot units to beams.
// Phase 1 runs deferred acceptance on interference-free utilities, phase 2
// executes swaps judged with full interference.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "leobeam/netmodel.hpp"

namespace leobeam {

struct CoordSlotUnit {
  int c = 0;
  int t = 0;
  friend bool operator==(const CoordSlotUnit&, const CoordSlotUnit&) = default;
};

class BdcMatching {
 public:
  BdcMatching() = default;
  BdcMatching(int Q, int C, int T)
      : Q_(Q), C_(C), T_(T),
        unit_to_beam_(static_cast<std::size_t>(C) * T, -1),
        beam_slot_unit_(static_cast<std::size_t>(Q) * T, -1) {}

  int beams() const { return Q_; }
  int candidates() const { return C_; }
  int slots() const { return T_; }

  int beam_of(int c, int t) const { return unit_to_beam_[static_cast<std::size_t>(t) * C_ + c]; }
  int unit_of(int q, int t) const { return beam_slot_unit_[static_cast<std::size_t>(q) * T_ + t]; }

  std::vector<CoordSlotUnit> units_of(int q) const {
    std::vector<CoordSlotUnit> out;
    for (int t = 0; t < T_; ++t)
      if (unit_of(q, t) >= 0) out.push_back({unit_of(q, t), t});
    return out;
  }

  // Match (c, t) to q, displacing whatever either side held in that slot.
  void assign(int c, int t, int q) {
    unassign(c, t);
    const int old = unit_of(q, t);
    if (old >= 0) unit_to_beam_[static_cast<std::size_t>(t) * C_ + old] = -1;
    unit_to_beam_[static_cast<std::size_t>(t) * C_ + c] = q;
    beam_slot_unit_[static_cast<std::size_t>(q) * T_ + t] = c;
  }

  void unassign(int c, int t) {
    int& q = unit_to_beam_[static_cast<std::size_t>(t) * C_ + c];
    if (q >= 0) beam_slot_unit_[static_cast<std::size_t>(q) * T_ + t] = -1;
    q = -1;
  }

  // Exchange the beams of two units in the same slot (either may be vacant).
  void swap(int c1, int c2, int t) {
    const int q1 = beam_of(c1, t), q2 = beam_of(c2, t);
    unassign(c1, t);
    unassign(c2, t);
    if (q2 >= 0) assign(c1, t, q2);
    if (q1 >= 0) assign(c2, t, q1);
  }

  bool consistent() const {
    for (int t = 0; t < T_; ++t) {
      for (int c = 0; c < C_; ++c) {
        const int q = beam_of(c, t);
        if (q >= 0 && unit_of(q, t) != c) return false;
      }
      for (int q = 0; q < Q_; ++q) {
        const int c = unit_of(q, t);
        if (c >= 0 && beam_of(c, t) != q) return false;
      }
    }
    return true;
  }

  void apply_to(Allocation& alloc) const {
    for (int q = 0; q < Q_; ++q)
      for (int t = 0; t < T_; ++t) alloc.beam_center(q, t) = unit_of(q, t);
  }

  static BdcMatching from_allocation(const Allocation& alloc) {
    BdcMatching m(alloc.Q, alloc.C, alloc.T);
    for (int q = 0; q < alloc.Q; ++q)
      for (int t = 0; t < alloc.T; ++t)
        if (alloc.beam_center(q, t) >= 0) m.assign(alloc.beam_center(q, t), t, q);
    return m;
  }

  friend bool operator==(const BdcMatching&, const BdcMatching&) = default;

 private:
  int Q_ = 0, C_ = 0, T_ = 0;
  std::vector<int> unit_to_beam_;    // [t*C + c]
  std::vector<int> beam_slot_unit_;  // [q*T + t]
};

struct BdcOptions {
  int swap_cap = 2;            // I_1
  bool vacancy_swaps = false;  // allow swapping a matched unit with an unmatched one
  double rel_tol = 1e-12;
  // re-matches subchannels for the phase-1 centres before swaps are judged;
  // left empty, swaps see the incoming subchannels
  std::function<void(const Network&, Allocation&)> rematch;
};

struct BdcStats {
  int phase1_rounds = 0;
  int swaps = 0;
  int evaluations = 0;
  std::vector<double> total_trace;  // total beam utility, entry 0 before any swap
  int non_increasing_swaps = 0;
  int repaired_subchannels = 0;
};

// ------------------------------------------------------------- utilities

enum class UtilityMode { interference_free, with_interference };

/// Users counted for beam q at (c, t): inside the r0 disc of c and able to
/// see the beam's satellite. The current association plays no part.
inline bool in_service_set(const Network& net, int q, int c, int n, int t) {
  return net.in_disc(c, n) && net.usable(q, n, t);
}

/// Subchannels a user is scored with in beam direction control: its
/// current count, or the per-user cap when it holds none (with a literal
/// zero no beam could ever be drawn towards users left unserved).
inline int subchannels_scored(const Network& net, const Allocation& alloc, int n, int t) {
  const int held = alloc.count(n, t);
  return held > 0 ? held : std::min(net.radio.per_user_cap, alloc.K);
}

/// Rate of user n under beam q centred at c, alone and at the equal-split
/// power of its satellite.
inline double interference_free_rate(const Network& net, const Allocation& alloc, int q, int c,
                                     int n, int t) {
  int siblings = 0;
  for (int j = 0; j < alloc.Q; ++j) siblings += net.beam_satellite[j] == net.beam_satellite[q];
  const double p = std::min(net.radio.beam_power_cap, net.radio.satellite_power_cap / siblings);
  const double snr = net.h(q, c, n, t) * p / alloc.K / net.noise();
  return subchannels_scored(net, alloc, n, t) * subchannel_rate(net.radio.subchannel_bandwidth(), snr);
}

/// Utility of unit (c, t) when matched with beam q. The interference-free
/// mode scores the service set as if q were alone; the interference mode
/// scores the users associated with q under the allocation as given (its
/// centre at t must already be c).
inline double unit_utility(const Network& net, const Allocation& alloc, int q, int c, int t,
                           UtilityMode mode) {
  double u = 0.0;
  if (mode == UtilityMode::interference_free) {
    for (int n = 0; n < alloc.N; ++n)
      if (in_service_set(net, q, c, n, t))
        u += utility(net.radio, interference_free_rate(net, alloc, q, c, n, t));
    return u;
  }
  if (alloc.beam_center(q, t) != c)
    throw std::logic_error("unit_utility: beam centre does not match the unit");
  SlotEval ev;
  evaluate_slot(net, alloc, t, ev);
  for (int n = 0; n < alloc.N; ++n)
    if (alloc.user_beam(n, t) == q) u += utility(net.radio, ev.rate[n]);
  return u;
}

/// Utility of beam q holding `units`, with interference, under `alloc` whose
/// other beams stay as they are.
inline double beam_utility(const Network& net, const Allocation& alloc, int q,
                           const std::vector<CoordSlotUnit>& units) {
  std::vector<char> seen(alloc.T, 0);
  for (const auto& u : units) {
    if (seen[u.t]) throw std::logic_error("beam_utility: two units in one slot");
    seen[u.t] = 1;
  }
  Allocation a = alloc;
  for (int t = 0; t < a.T; ++t) a.beam_center(q, t) = -1;
  for (const auto& u : units) a.beam_center(q, u.t) = u.c;
  associate_users(net, a);
  std::vector<double> tot(a.N, 0.0);
  SlotEval ev;
  for (const auto& u : units) {
    evaluate_slot(net, a, u.t, ev);
    for (int n = 0; n < a.N; ++n)
      if (a.user_beam(n, u.t) == q) tot[n] += ev.rate[n];
  }
  double s = 0.0;
  for (double r : tot) s += utility(net.radio, r);
  return s;
}

// ---------------------------------------------------------------- phase 1

/// w[(q*C + c)*T + t]: interference-free utility, shared by both sides.
/// When `served` is filled (the users behind each entry of w) a beam judges
/// a proposal by what the unit adds to its whole unit set: users it already
/// covers in another slot count for less, users inside another beam's unit
/// in the same slot not at all, and only as many users as its subchannels
/// can carry. Otherwise by w alone.
struct BdcPreferences {
  struct Entry {
    int user = 0;
    double rate = 0.0;  // bit/s with the user's subchannel count
    int subchannels = 0;
  };
  int Q = 0, C = 0, T = 0;
  std::vector<double> w;
  std::vector<char> acceptable;
  std::vector<std::vector<Entry>> served;
  RadioConfig radio;
  int K = 0;

  std::size_t index(int q, int c, int t) const {
    return (static_cast<std::size_t>(q) * C + c) * T + t;
  }
  double value(int q, int c, int t) const { return w[index(q, c, t)]; }
  bool ok(int q, int c, int t) const { return acceptable[index(q, c, t)] != 0; }
};

inline BdcPreferences build_preferences(const Network& net, const Allocation& alloc) {
  BdcPreferences p;
  p.Q = alloc.Q;
  p.C = alloc.C;
  p.T = alloc.T;
  p.K = alloc.K;
  p.radio = net.radio;
  p.w.assign(static_cast<std::size_t>(p.Q) * p.C * p.T, 0.0);
  p.acceptable.assign(p.w.size(), 0);
  p.served.resize(p.w.size());
  for (int q = 0; q < p.Q; ++q)
    for (int c = 0; c < p.C; ++c)
      for (int t = 0; t < p.T; ++t) {
        double u = 0.0, rsum = 0.0;
        auto& list = p.served[p.index(q, c, t)];
        for (int n = 0; n < alloc.N; ++n) {
          if (!in_service_set(net, q, c, n, t)) continue;
          const double r = interference_free_rate(net, alloc, q, c, n, t);
          u += utility(net.radio, r);
          if (r <= 0.0) continue;
          list.push_back({n, r, subchannels_scored(net, alloc, n, t)});
          rsum += r;
        }
        p.w[p.index(q, c, t)] = u;
        p.acceptable[p.index(q, c, t)] = rsum > 0.0 ? 1 : 0;
      }
  return p;
}

/// Units propose to their best remaining beam; each beam keeps its best
/// proposal per slot. Ties favour the lower beam index and, on the beam
/// side, the lower coordinate index.
///
/// With per-user rate lists the beam side judges a unit by what it adds:
/// users already covered at that slot by another held unit are skipped, the
/// rest are packed into K subchannels by marginal utility against the rates
/// users collect across all beams and slots. A beam whose best gain is zero
/// holds nothing.
inline BdcMatching phase1_deferred_acceptance(const BdcPreferences& prefs, int* rounds = nullptr) {
  using Entry = BdcPreferences::Entry;
  const int Q = prefs.Q, C = prefs.C, T = prefs.T;
  BdcMatching m(Q, C, T);
  std::vector<std::vector<int>> lists(static_cast<std::size_t>(C) * T);
  std::vector<int> next(lists.size(), 0);
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < C; ++c) {
      auto& l = lists[static_cast<std::size_t>(t) * C + c];
      for (int q = 0; q < Q; ++q)
        if (prefs.ok(q, c, t)) l.push_back(q);
      std::stable_sort(l.begin(), l.end(), [&](int a, int b) {
        return prefs.value(a, c, t) > prefs.value(b, c, t);
      });
    }
  auto better = [&](int q, int c1, int c2, int t) {
    const double a = prefs.value(q, c1, t), b = prefs.value(q, c2, t);
    return a > b || (a == b && c1 < c2);
  };

  const bool by_set = !prefs.served.empty();
  const auto U = [&](double x) {
    return alpha_utility(x, prefs.radio.fairness_alpha, prefs.radio.utility_floor);
  };
  std::vector<double> held;                               // user totals over all beams
  std::vector<std::vector<int>> taken(by_set ? T : 0);    // per slot, covering beams
  std::vector<std::vector<Entry>> carried(by_set ? static_cast<std::size_t>(Q) * T : 0);
  auto at = [](auto& v, int n) -> auto& {
    if (static_cast<int>(v.size()) <= n) v.resize(n + 1, 0);
    return v[n];
  };
  auto book = [&](int q, int t, const std::vector<Entry>& users, int sign) {
    for (const auto& e : users) {
      double& h = at(held, e.user);
      h = std::max(0.0, h + sign * e.rate);
      at(taken[t], e.user) += sign;
    }
  };
  // users the beam would carry with unit (c, t), best marginal gain first
  auto carry = [&](int q, int c, int t, double& g) {
    std::vector<std::pair<double, Entry>> cand;
    for (const auto& e : prefs.served[prefs.index(q, c, t)]) {
      if (e.user < static_cast<int>(taken[t].size()) && taken[t][e.user] > 0) continue;
      const double base = e.user < static_cast<int>(held.size()) ? held[e.user] : 0.0;
      cand.push_back({U(base + e.rate) - U(base), e});
    }
    std::stable_sort(cand.begin(), cand.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Entry> out;
    int left = prefs.K;
    g = 0.0;
    for (const auto& [d, e] : cand) {
      if (e.subchannels > left) continue;
      left -= e.subchannels;
      g += d;
      out.push_back(e);
    }
    return out;
  };
  int r = 0;
  for (;;) {
    std::vector<std::vector<int>> proposals(static_cast<std::size_t>(Q) * T);
    bool any = false;
    for (int t = 0; t < T; ++t)
      for (int c = 0; c < C; ++c) {
        const std::size_t u = static_cast<std::size_t>(t) * C + c;
        if (m.beam_of(c, t) >= 0 || next[u] >= static_cast<int>(lists[u].size())) continue;
        const int q = lists[u][next[u]++];
        proposals[static_cast<std::size_t>(q) * T + t].push_back(c);
        any = true;
      }
    if (!any) break;
    ++r;
    for (int q = 0; q < Q; ++q)
      for (int t = 0; t < T; ++t) {
        const auto& props = proposals[static_cast<std::size_t>(q) * T + t];
        const int cur = m.unit_of(q, t);
        int best = cur;
        if (!by_set) {
          for (int c : props)
            if (best < 0 || better(q, c, best, t)) best = c;
        } else if (!props.empty()) {
          auto& mine = carried[static_cast<std::size_t>(q) * T + t];
          book(q, t, mine, -1);
          double best_g = 0.0;
          std::vector<Entry> best_set;
          if (cur >= 0) best_set = carry(q, cur, t, best_g);
          for (int c : props) {
            double g = 0.0;
            auto set = carry(q, c, t, g);
            if (best < 0 || g > best_g || (g == best_g && c < best)) {
              best = c;
              best_g = g;
              best_set = std::move(set);
            }
          }
          if (best_g > 0.0) {
            mine = std::move(best_set);
            book(q, t, mine, 1);
          } else {
            mine.clear();
            best = -1;  // nothing left to add: the beam holds no unit here
            if (cur >= 0) m.unassign(cur, t);
          }
        }
        if (best >= 0 && best != cur) m.assign(best, t, q);
      }
  }
  if (rounds) *rounds = r;
  return m;
}

// ---------------------------------------------------------------- phase 2

/// Cached slot rates and per-beam totals so a hypothetical swap only
/// re-evaluates its own slot. Owns a working copy of the allocation.
class BdcEvaluator {
 public:
  BdcEvaluator(const Network& net, Allocation alloc) : net_(net), a_(std::move(alloc)) {
    associate_users(net_, a_);
    rate_.assign(static_cast<std::size_t>(a_.T) * a_.N, 0.0);
    tot_.assign(static_cast<std::size_t>(a_.Q) * a_.N, 0.0);
    SlotEval ev;
    for (int t = 0; t < a_.T; ++t) {
      evaluate_slot(net_, a_, t, ev);
      for (int n = 0; n < a_.N; ++n) {
        rate_[static_cast<std::size_t>(t) * a_.N + n] = ev.rate[n];
        const int q = a_.user_beam(n, t);
        if (q >= 0) tot_[static_cast<std::size_t>(q) * a_.N + n] += ev.rate[n];
      }
    }
    beam_.resize(a_.Q);
    for (int q = 0; q < a_.Q; ++q) beam_[q] = beam_from_totals(tot_, q);
  }

  const Allocation& allocation() const { return a_; }
  double beam_utility(int q) const { return beam_[q]; }
  double total() const {
    double s = 0.0;
    for (double v : beam_) s += v;
    return s;
  }
  // utility of the unit held by q at t (0 for an unmatched unit)
  double unit_utility(int q, int t) const {
    if (q < 0) return 0.0;
    double u = 0.0;
    for (int n = 0; n < a_.N; ++n)
      if (a_.user_beam(n, t) == q)
        u += utility(net_.radio, rate_[static_cast<std::size_t>(t) * a_.N + n]);
    return u;
  }

  struct Hypothesis {
    int t = 0;
    std::vector<std::pair<int, int>> moves;  // (beam, new centre)
    std::vector<int> assoc;
    std::vector<double> rate;
    std::vector<double> tot;
    std::vector<double> beam;
    double unit_of(const Network& net, int q) const {
      if (q < 0) return 0.0;
      double u = 0.0;
      for (std::size_t n = 0; n < assoc.size(); ++n)
        if (assoc[n] == q) u += utility(net.radio, rate[n]);
      return u;
    }
  };

  Hypothesis evaluate(int t, const std::vector<std::pair<int, int>>& moves) {
    Hypothesis h;
    h.t = t;
    h.moves = moves;
    std::vector<int> saved_c;
    for (const auto& [q, c] : moves) {
      saved_c.push_back(a_.beam_center(q, t));
      a_.beam_center(q, t) = c;
    }
    std::vector<int> saved_a(a_.assoc.begin() + static_cast<std::ptrdiff_t>(t) * a_.N,
                             a_.assoc.begin() + static_cast<std::ptrdiff_t>(t + 1) * a_.N);
    associate_users(net_, a_, t);
    SlotEval ev;
    evaluate_slot(net_, a_, t, ev);
    h.assoc.assign(a_.assoc.begin() + static_cast<std::ptrdiff_t>(t) * a_.N,
                   a_.assoc.begin() + static_cast<std::ptrdiff_t>(t + 1) * a_.N);
    h.rate = ev.rate;
    h.tot = tot_;
    // totals are re-summed rather than patched: a difference that should be
    // zero would otherwise leave a residue the concave utility amplifies
    for (int n = 0; n < a_.N; ++n) {
      for (int q : {saved_a[n], h.assoc[n]}) {
        if (q < 0) continue;
        double r = 0.0;
        for (int s = 0; s < a_.T; ++s) {
          const int as = s == t ? h.assoc[n] : a_.user_beam(n, s);
          if (as == q) r += s == t ? h.rate[n] : rate_[static_cast<std::size_t>(s) * a_.N + n];
        }
        h.tot[static_cast<std::size_t>(q) * a_.N + n] = r;
      }
    }
    h.beam.resize(a_.Q);
    for (int q = 0; q < a_.Q; ++q) h.beam[q] = beam_from_totals(h.tot, q);
    // restore
    for (std::size_t i = 0; i < moves.size(); ++i) a_.beam_center(moves[i].first, t) = saved_c[i];
    std::copy(saved_a.begin(), saved_a.end(),
              a_.assoc.begin() + static_cast<std::ptrdiff_t>(t) * a_.N);
    ++evaluations_;
    return h;
  }

  void commit(const Hypothesis& h) {
    for (const auto& [q, c] : h.moves) a_.beam_center(q, h.t) = c;
    std::copy(h.assoc.begin(), h.assoc.end(),
              a_.assoc.begin() + static_cast<std::ptrdiff_t>(h.t) * a_.N);
    std::copy(h.rate.begin(), h.rate.end(),
              rate_.begin() + static_cast<std::ptrdiff_t>(h.t) * a_.N);
    tot_ = h.tot;
    beam_ = h.beam;
  }

  int evaluations() const { return evaluations_; }

 private:
  double beam_from_totals(const std::vector<double>& tot, int q) const {
    double s = 0.0;
    for (int n = 0; n < a_.N; ++n)
      s += utility(net_.radio, tot[static_cast<std::size_t>(q) * a_.N + n]);
    return s;
  }

  const Network& net_;
  Allocation a_;
  std::vector<double> rate_;  // [t*N + n]
  std::vector<double> tot_;   // [q*N + n]
  std::vector<double> beam_;
  int evaluations_ = 0;
};

namespace detail {

inline double tol_scale(double a, double b, double rel) {
  return rel * std::max({std::fabs(a), std::fabs(b), 1.0});
}
inline bool weakly_ge(double a, double b, double rel) { return a >= b - tol_scale(a, b, rel); }
inline bool strictly_gt(double a, double b, double rel) { return a > b + tol_scale(a, b, rel); }

}  // namespace detail

struct SwapVerdict {
  bool blocking = false;
  BdcEvaluator::Hypothesis hyp;
};

/// Checks the four swap-blocking properties for units (c1, t) and (c2, t)
/// under the evaluator's current matching.
inline SwapVerdict check_swap(const Network& net, BdcEvaluator& ev, const BdcMatching& m, int c1,
                              int c2, int t, const BdcOptions& opt) {
  SwapVerdict v;
  if (c1 == c2) return v;
  const int q1 = m.beam_of(c1, t), q2 = m.beam_of(c2, t);
  if (q1 < 0 && q2 < 0) return v;
  if ((q1 < 0 || q2 < 0) && !opt.vacancy_swaps) return v;
  std::vector<std::pair<int, int>> moves;
  if (q1 >= 0) moves.push_back({q1, c2});
  if (q2 >= 0) moves.push_back({q2, c1});
  v.hyp = ev.evaluate(t, moves);
  const auto& h = v.hyp;
  const double tol = opt.rel_tol;

  // players: unit i now with q2, unit j now with q1, and the two beams
  const double ui0 = ev.unit_utility(q1, t), ui1 = h.unit_of(net, q2);
  const double uj0 = ev.unit_utility(q2, t), uj1 = h.unit_of(net, q1);
  struct Pair {
    double before, after;
  };
  std::vector<Pair> players{{ui0, ui1}, {uj0, uj1}};
  if (q1 >= 0) players.push_back({ev.beam_utility(q1), h.beam[q1]});
  if (q2 >= 0) players.push_back({ev.beam_utility(q2), h.beam[q2]});
  bool gain = false;
  for (const auto& p : players) {
    if (!detail::weakly_ge(p.after, p.before, tol)) return v;
    gain = gain || detail::strictly_gt(p.after, p.before, tol);
  }
  if (!gain) return v;
  double others0 = 0.0, others1 = 0.0;
  for (int q = 0; q < m.beams(); ++q) {
    if (q == q1 || q == q2) continue;
    others0 += ev.beam_utility(q);
    others1 += h.beam[q];
  }
  if (!detail::weakly_ge(others1, others0, tol)) return v;
  v.blocking = true;
  return v;
}

inline bool is_swap_blocking(const Network& net, const Allocation& alloc, const BdcMatching& m,
                             CoordSlotUnit i, CoordSlotUnit j, const BdcOptions& opt = {}) {
  if (i.t != j.t) return false;
  Allocation a = alloc;
  m.apply_to(a);
  BdcEvaluator ev(net, std::move(a));
  return check_swap(net, ev, m, i.c, j.c, i.t, opt).blocking;
}

namespace detail {

// Candidate pairs of a slot in lexicographic order of coordinate index.
inline std::vector<std::pair<int, int>> slot_pairs(const BdcMatching& m, int t, bool vacancy) {
  std::vector<int> matched;
  for (int c = 0; c < m.candidates(); ++c)
    if (m.beam_of(c, t) >= 0) matched.push_back(c);
  std::vector<std::pair<int, int>> out;
  if (!vacancy) {
    for (std::size_t a = 0; a < matched.size(); ++a)
      for (std::size_t b = a + 1; b < matched.size(); ++b) out.push_back({matched[a], matched[b]});
    return out;
  }
  for (int c1 = 0; c1 < m.candidates(); ++c1)
    for (int c2 = c1 + 1; c2 < m.candidates(); ++c2)
      if (m.beam_of(c1, t) >= 0 || m.beam_of(c2, t) >= 0) out.push_back({c1, c2});
  return out;
}

}  // namespace detail

/// Swap phase. Scans (slot, pair) in lexicographic order and executes each
/// blocking pair whose combined counter is below the cap; passes repeat
/// until one executes nothing.
inline BdcMatching phase2_swap(const Network& net, BdcEvaluator& ev, BdcMatching m,
                               const BdcOptions& opt, BdcStats& stats) {
  std::map<std::tuple<int, int, int>, int> counters;  // (t, c_low, c_high)
  stats.total_trace.push_back(ev.total());
  for (bool changed = true; changed;) {
    changed = false;
    for (int t = 0; t < m.slots(); ++t) {
      for (const auto& [c1, c2] : detail::slot_pairs(m, t, opt.vacancy_swaps)) {
        if (m.beam_of(c1, t) < 0 && m.beam_of(c2, t) < 0) continue;
        int& s = counters[{t, c1, c2}];
        if (s >= opt.swap_cap) continue;
        auto v = check_swap(net, ev, m, c1, c2, t, opt);
        if (!v.blocking) continue;
        const double before = ev.total();
        ev.commit(v.hyp);
        m.swap(c1, c2, t);
        ++s;
        ++stats.swaps;
        changed = true;
        const double after = ev.total();
        stats.total_trace.push_back(after);
        if (!(after > before)) ++stats.non_increasing_swaps;
      }
    }
  }
  stats.evaluations = ev.evaluations();
  return m;
}

struct StabilityReport {
  int pairs_checked = 0;
  int blocking_pairs = 0;
};

/// Exhaustive scan with fresh counters: every same-slot pair is tested.
inline StabilityReport scan_stability(const Network& net, const Allocation& alloc,
                                      const BdcMatching& m, const BdcOptions& opt = {}) {
  Allocation a = alloc;
  m.apply_to(a);
  BdcEvaluator ev(net, std::move(a));
  StabilityReport r;
  for (int t = 0; t < m.slots(); ++t)
    for (const auto& [c1, c2] : detail::slot_pairs(m, t, opt.vacancy_swaps)) {
      ++r.pairs_checked;
      if (check_swap(net, ev, m, c1, c2, t, opt).blocking) ++r.blocking_pairs;
    }
  return r;
}

struct BdcResult {
  BdcMatching matching;
  BdcStats stats;
  Allocation judged;  // allocation the swap phase saw, before the repair
};

/// Full beam direction control: both phases, then the allocation gets the
/// new centres, a refreshed association, and same-beam subchannel conflicts
/// resolved.
inline BdcResult run_bdc(const Network& net, Allocation& alloc, const BdcOptions& opt = {}) {
  BdcResult res;
  const auto prefs = build_preferences(net, alloc);
  BdcMatching m = phase1_deferred_acceptance(prefs, &res.stats.phase1_rounds);
  Allocation work = alloc;
  m.apply_to(work);
  if (opt.rematch) {
    associate_users(net, work);
    opt.rematch(net, work);
  }
  BdcEvaluator ev(net, std::move(work));
  m = phase2_swap(net, ev, std::move(m), opt, res.stats);
  res.judged = ev.allocation();
  m.apply_to(alloc);
  associate_users(net, alloc);
  res.stats.repaired_subchannels = repair_subchannels(net, alloc);
  res.matching = std::move(m);
  return res;
}

}  // namespace leobeam
