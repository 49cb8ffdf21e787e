#pragma once

// Decision variables, rates, utilities, constraint checks and reported
// metrics for the multi-beam downlink.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "leobeam/channel.hpp"
#include "leobeam/geometry.hpp"

namespace leobeam {

class FeasibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RadioConfig {
  double beam_bandwidth = 400e6;     // Hz
  int subchannel_count = 20;         // K
  int per_user_cap = 6;              // K_thr
  double beam_power_cap = 200.0;     // W
  double satellite_power_cap = 1200.0;
  double min_elevation = deg_to_rad(25.0);
  double min_sinr = 0.0;             // linear
  double reference_power = 0.0;      // W; 0 means beam_power_cap / K
  double fairness_alpha = 0.5;
  double utility_floor = 1.0;        // bit/s, only used when alpha = 1

  double subchannel_bandwidth() const { return beam_bandwidth / subchannel_count; }
  double effective_reference_power() const {
    return reference_power > 0.0 ? reference_power : beam_power_cap / subchannel_count;
  }

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (!(beam_bandwidth > 0.0)) out.push_back("beam_bandwidth must be > 0");
    if (subchannel_count < 1) out.push_back("subchannel_count must be >= 1");
    if (per_user_cap < 1 || per_user_cap > subchannel_count)
      out.push_back("per_user_cap must lie in [1, subchannel_count]");
    if (!(beam_power_cap > 0.0)) out.push_back("beam_power_cap must be > 0");
    if (!(satellite_power_cap > 0.0)) out.push_back("satellite_power_cap must be > 0");
    if (!(fairness_alpha >= 0.0 && fairness_alpha <= 1.0))
      out.push_back("fairness_alpha must lie in [0, 1]");
    if (min_sinr < 0.0) out.push_back("min_sinr must be >= 0");
    if (!(utility_floor > 0.0)) out.push_back("utility_floor must be > 0");
    return out;
  }
  void validate() const {
    const auto p = problems();
    if (p.empty()) return;
    std::string msg = "radio config:";
    for (const auto& s : p) msg += " " + s + ";";
    throw ConfigError(msg);
  }
};

/// Everything the algorithms need to evaluate an allocation: radio
/// parameters, gains, and which satellite each beam belongs to.
struct Network {
  RadioConfig radio;
  ChannelTensor channel;
  std::vector<int> beam_group;      // beam -> channel tensor group
  std::vector<int> beam_satellite;  // beam -> satellite index for the power cap
  int satellite_count = 0;
  std::vector<char> service_disc;   // [c*N + n], user within r0 of candidate
  std::vector<EcefCoord> candidate_positions;
  std::vector<EcefCoord> user_positions;

  int beams() const { return static_cast<int>(beam_group.size()); }
  int candidates() const { return channel.candidates; }
  int users() const { return channel.users; }
  int slots() const { return channel.slots; }
  int subchannels() const { return radio.subchannel_count; }
  double noise() const { return channel.noise; }

  double h(int q, int c, int n, int t) const { return channel.at(beam_group[q], c, n, t); }
  bool usable(int q, int n, int t) const { return channel.usable(beam_group[q], n, t); }
  bool in_disc(int c, int n) const {
    return service_disc.empty() || service_disc[static_cast<std::size_t>(c) * users() + n] != 0;
  }
};

/// One beam per satellite group, every user inside every disc.
inline Network make_network(const RadioConfig& radio, ChannelTensor channel,
                            std::vector<int> beam_satellite, int satellite_count) {
  Network net;
  net.radio = radio;
  net.channel = std::move(channel);
  net.beam_group = beam_satellite;
  net.beam_satellite = std::move(beam_satellite);
  net.satellite_count = satellite_count;
  return net;
}

/// The decision triple plus the derived association.
struct Allocation {
  int Q = 0, C = 0, N = 0, T = 0, K = 0;
  std::vector<int> center;     // [q*T + t], -1 when the beam is not configured
  std::vector<char> sub;       // [(t*N + n)*K + k]
  std::vector<double> power;   // [q*T + t], W
  std::vector<int> assoc;      // [t*N + n], -1 when unassociated

  Allocation() = default;
  explicit Allocation(const Network& net)
      : Q(net.beams()), C(net.candidates()), N(net.users()), T(net.slots()),
        K(net.subchannels()),
        center(static_cast<std::size_t>(Q) * T, -1),
        sub(static_cast<std::size_t>(T) * N * K, 0),
        power(static_cast<std::size_t>(Q) * T, 0.0),
        assoc(static_cast<std::size_t>(T) * N, -1) {}

  int& beam_center(int q, int t) { return center[static_cast<std::size_t>(q) * T + t]; }
  int beam_center(int q, int t) const { return center[static_cast<std::size_t>(q) * T + t]; }
  double& beam_power(int q, int t) { return power[static_cast<std::size_t>(q) * T + t]; }
  double beam_power(int q, int t) const { return power[static_cast<std::size_t>(q) * T + t]; }
  int& user_beam(int n, int t) { return assoc[static_cast<std::size_t>(t) * N + n]; }
  int user_beam(int n, int t) const { return assoc[static_cast<std::size_t>(t) * N + n]; }
  bool has(int k, int n, int t) const {
    return sub[(static_cast<std::size_t>(t) * N + n) * K + k] != 0;
  }
  void set(int k, int n, int t, bool v) {
    sub[(static_cast<std::size_t>(t) * N + n) * K + k] = v ? 1 : 0;
  }
  int count(int n, int t) const {
    int s = 0;
    for (int k = 0; k < K; ++k) s += has(k, n, t);
    return s;
  }
  void clear_slot_subchannels(int t) {
    std::fill(sub.begin() + static_cast<std::ptrdiff_t>(t) * N * K,
              sub.begin() + static_cast<std::ptrdiff_t>(t + 1) * N * K, 0);
  }

  friend bool operator==(const Allocation&, const Allocation&) = default;
};

// ---------------------------------------------------------------- association

inline int best_beam(const Network& net, const Allocation& alloc, int n, int t) {
  int best = -1;
  double best_val = -1.0;
  const double pref = net.radio.effective_reference_power();
  for (int q = 0; q < alloc.Q; ++q) {
    const int c = alloc.beam_center(q, t);
    if (c < 0 || !net.usable(q, n, t)) continue;
    const double v = net.h(q, c, n, t) * pref;
    if (v > best_val) {
      best_val = v;
      best = q;
    }
  }
  return best;
}

inline void associate_users(const Network& net, Allocation& alloc, int t) {
  for (int n = 0; n < alloc.N; ++n) alloc.user_beam(n, t) = best_beam(net, alloc, n, t);
}

inline void associate_users(const Network& net, Allocation& alloc) {
  for (int t = 0; t < alloc.T; ++t) associate_users(net, alloc, t);
}

// ------------------------------------------------------------- rate machinery

/// Per-slot SINR and rates. `occ[q*K + k]` counts the users of beam q holding
/// subchannel k; interference sums over those counts.
struct SlotEval {
  std::vector<int> occ;
  std::vector<double> sinr;  // [n*K + k], 0 when not served
  std::vector<double> rate;  // [n], bit/s in this slot
};

inline bool served_link(const Allocation& alloc, int n, int k, int t) {
  const int q = alloc.user_beam(n, t);
  return q >= 0 && alloc.beam_center(q, t) >= 0 && alloc.has(k, n, t);
}

inline void fill_occupancy(const Allocation& alloc, int t, std::vector<int>& occ) {
  occ.assign(static_cast<std::size_t>(alloc.Q) * alloc.K, 0);
  for (int n = 0; n < alloc.N; ++n) {
    const int q = alloc.user_beam(n, t);
    if (q < 0 || alloc.beam_center(q, t) < 0) continue;
    for (int k = 0; k < alloc.K; ++k)
      if (alloc.has(k, n, t)) ++occ[static_cast<std::size_t>(q) * alloc.K + k];
  }
}

inline double interference_from_occupancy(const Network& net, const Allocation& alloc,
                                          const std::vector<int>& occ, int n, int k, int t,
                                          int serving) {
  double sum = 0.0;
  for (int q2 = 0; q2 < alloc.Q; ++q2) {
    if (q2 == serving) continue;
    const int o = occ[static_cast<std::size_t>(q2) * alloc.K + k];
    if (o == 0) continue;
    const int c2 = alloc.beam_center(q2, t);
    if (c2 < 0) continue;
    sum += o * net.h(q2, c2, n, t) * alloc.beam_power(q2, t) / alloc.K;
  }
  return sum;
}

inline double interference(const Network& net, const Allocation& alloc, int n, int k, int t) {
  std::vector<int> occ;
  fill_occupancy(alloc, t, occ);
  return interference_from_occupancy(net, alloc, occ, n, k, t, alloc.user_beam(n, t));
}

inline double sinr(const Network& net, const Allocation& alloc, int n, int k, int t) {
  if (!served_link(alloc, n, k, t)) return 0.0;
  const int q = alloc.user_beam(n, t);
  const int c = alloc.beam_center(q, t);
  const double signal = net.h(q, c, n, t) * alloc.beam_power(q, t) / alloc.K;
  return signal / (interference(net, alloc, n, k, t) + net.noise());
}

inline double subchannel_rate(double subchannel_bandwidth, double gamma) {
  return subchannel_bandwidth * std::log2(1.0 + gamma);
}

inline void evaluate_slot(const Network& net, const Allocation& alloc, int t, SlotEval& ev) {
  fill_occupancy(alloc, t, ev.occ);
  ev.sinr.assign(static_cast<std::size_t>(alloc.N) * alloc.K, 0.0);
  ev.rate.assign(alloc.N, 0.0);
  const double bk = net.radio.subchannel_bandwidth();
  for (int n = 0; n < alloc.N; ++n) {
    const int q = alloc.user_beam(n, t);
    if (q < 0) continue;
    const int c = alloc.beam_center(q, t);
    if (c < 0) continue;
    const double signal = net.h(q, c, n, t) * alloc.beam_power(q, t) / alloc.K;
    double r = 0.0;
    for (int k = 0; k < alloc.K; ++k) {
      if (!alloc.has(k, n, t)) continue;
      const double g =
          signal / (interference_from_occupancy(net, alloc, ev.occ, n, k, t, q) + net.noise());
      ev.sinr[static_cast<std::size_t>(n) * alloc.K + k] = g;
      r += subchannel_rate(bk, g);
    }
    ev.rate[n] = r;
  }
}

inline double user_rate(const Network& net, const Allocation& alloc, int n, int t) {
  SlotEval ev;
  evaluate_slot(net, alloc, t, ev);
  return ev.rate[n];
}

/// Rates per (user, slot) plus period totals. The serving beam of each
/// entry is the association at that slot.
struct RateTable {
  int N = 0, T = 0;
  std::vector<double> slot_rate;  // [t*N + n]
  std::vector<double> total;      // [n]

  double at(int n, int t) const { return slot_rate[static_cast<std::size_t>(t) * N + n]; }
};

inline RateTable rate_table(const Network& net, const Allocation& alloc) {
  RateTable rt;
  rt.N = alloc.N;
  rt.T = alloc.T;
  rt.slot_rate.assign(static_cast<std::size_t>(alloc.N) * alloc.T, 0.0);
  rt.total.assign(alloc.N, 0.0);
  SlotEval ev;
  for (int t = 0; t < alloc.T; ++t) {
    evaluate_slot(net, alloc, t, ev);
    for (int n = 0; n < alloc.N; ++n) {
      rt.slot_rate[static_cast<std::size_t>(t) * alloc.N + n] = ev.rate[n];
      rt.total[n] += ev.rate[n];
    }
  }
  return rt;
}

// ------------------------------------------------------------------ utility

inline double alpha_utility(double x, double alpha, double floor = 1.0) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (alpha == 1.0) return std::log(std::max(x, floor));
  if (alpha == 0.0) return x;
  return std::pow(std::max(x, 0.0), 1.0 - alpha) / (1.0 - alpha);
}

inline double utility(const RadioConfig& radio, double x) {
  return alpha_utility(x, radio.fairness_alpha, radio.utility_floor);
}

inline double objective_from_rates(const RadioConfig& radio, const RateTable& rt) {
  double s = 0.0;
  for (double r : rt.total) s += utility(radio, r);
  return s;
}

// --------------------------------------------------------------- feasibility

struct Violation {
  std::string constraint;
  std::string detail;
};

inline std::vector<Violation> check_feasibility(const Network& net, const Allocation& alloc) {
  std::vector<Violation> out;
  auto add = [&](const char* name, const std::string& detail) {
    out.push_back({name, detail});
  };
  auto where = [](std::initializer_list<std::pair<const char*, int>> kv) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, v] : kv) {
      os << (first ? "" : " ") << k << "=" << v;
      first = false;
    }
    return os.str();
  };
  const auto& radio = net.radio;
  const double tol = 1e-9;
  const int Q = alloc.Q, C = alloc.C, N = alloc.N, T = alloc.T, K = alloc.K;
  std::vector<int> occ;
  std::vector<int> center_use(C);
  SlotEval ev;
  for (int t = 0; t < T; ++t) {
    fill_occupancy(alloc, t, occ);
    for (int q = 0; q < Q; ++q) {
      int total = 0;
      for (int k = 0; k < K; ++k) {
        const int o = occ[static_cast<std::size_t>(q) * K + k];
        total += o;
        if (o > 1) add("subchannel_exclusive", where({{"q", q}, {"k", k}, {"t", t}}));
      }
      if (total > K) add("beam_subchannel_total", where({{"q", q}, {"t", t}}));
    }
    for (int n = 0; n < N; ++n)
      if (alloc.count(n, t) > radio.per_user_cap)
        add("per_user_cap", where({{"n", n}, {"t", t}}));

    std::fill(center_use.begin(), center_use.end(), 0);
    for (int q = 0; q < Q; ++q) {
      const int c = alloc.beam_center(q, t);
      if (c < -1 || c >= C) {
        add("one_center_per_beam", where({{"q", q}, {"t", t}}));
        continue;
      }
      if (c >= 0 && ++center_use[c] > 1) add("one_beam_per_center", where({{"c", c}, {"t", t}}));
    }

    std::vector<double> sat_sum(net.satellite_count, 0.0);
    for (int q = 0; q < Q; ++q) {
      const double p = alloc.beam_power(q, t);
      if (!(p >= 0.0)) add("non_negative_power", where({{"q", q}, {"t", t}}));
      if (p > radio.beam_power_cap * (1.0 + tol))
        add("beam_power_cap", where({{"q", q}, {"t", t}}));
      sat_sum[net.beam_satellite[q]] += p;
    }
    for (int m = 0; m < net.satellite_count; ++m)
      if (sat_sum[m] > radio.satellite_power_cap * (1.0 + tol))
        add("satellite_power_cap", where({{"m", m}, {"t", t}}));

    for (int n = 0; n < N; ++n) {
      const int q = alloc.user_beam(n, t);
      if (q < -1 || q >= Q || (q >= 0 && alloc.beam_center(q, t) < 0) ||
          q != best_beam(net, alloc, n, t))
        add("association", where({{"n", n}, {"t", t}}));
      else if (q >= 0 && !net.usable(q, n, t))
        add("min_elevation", where({{"n", n}, {"q", q}, {"t", t}}));
    }

    if (radio.min_sinr > 0.0) {
      evaluate_slot(net, alloc, t, ev);
      for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k)
          if (served_link(alloc, n, k, t) &&
              ev.sinr[static_cast<std::size_t>(n) * K + k] < radio.min_sinr)
            add("min_sinr", where({{"n", n}, {"k", k}, {"t", t}}));
    }
  }
  return out;
}

inline std::string describe(const std::vector<Violation>& v) {
  std::string s;
  for (const auto& x : v) s += x.constraint + "(" + x.detail + ") ";
  return s;
}

inline double objective(const Network& net, const Allocation& alloc) {
  const auto v = check_feasibility(net, alloc);
  if (!v.empty()) throw FeasibilityError("infeasible allocation: " + describe(v));
  return objective_from_rates(net.radio, rate_table(net, alloc));
}

// ------------------------------------------------------------------- repairs

/// Resolve same-beam subchannel conflicts by keeping the holder with the
/// larger rate on that subchannel, and drop subchannels of users that are
/// not served by any configured beam.
inline int repair_subchannels(const Network& net, Allocation& alloc) {
  int removed = 0;
  SlotEval ev;
  for (int t = 0; t < alloc.T; ++t) {
    evaluate_slot(net, alloc, t, ev);
    for (int n = 0; n < alloc.N; ++n) {
      const int q = alloc.user_beam(n, t);
      if (q >= 0 && alloc.beam_center(q, t) >= 0) continue;
      for (int k = 0; k < alloc.K; ++k)
        if (alloc.has(k, n, t)) {
          alloc.set(k, n, t, false);
          ++removed;
        }
    }
    for (int q = 0; q < alloc.Q; ++q) {
      for (int k = 0; k < alloc.K; ++k) {
        int keep = -1;
        for (int n = 0; n < alloc.N; ++n) {
          if (alloc.user_beam(n, t) != q || !alloc.has(k, n, t)) continue;
          if (keep < 0) {
            keep = n;
            continue;
          }
          const double gk = ev.sinr[static_cast<std::size_t>(keep) * alloc.K + k];
          const double gn = ev.sinr[static_cast<std::size_t>(n) * alloc.K + k];
          const int drop = gn > gk ? keep : n;
          if (drop == keep) keep = n;
          alloc.set(k, drop, t, false);
          ++removed;
        }
      }
    }
  }
  return removed;
}

/// Drop the weakest subchannel below the SINR floor, one at a time, until
/// every served link meets it.
inline int enforce_min_sinr(const Network& net, Allocation& alloc) {
  if (net.radio.min_sinr <= 0.0) return 0;
  int removed = 0;
  SlotEval ev;
  for (int t = 0; t < alloc.T; ++t) {
    for (;;) {
      evaluate_slot(net, alloc, t, ev);
      int wn = -1, wk = -1;
      double worst = net.radio.min_sinr;
      for (int n = 0; n < alloc.N; ++n)
        for (int k = 0; k < alloc.K; ++k) {
          if (!served_link(alloc, n, k, t)) continue;
          const double g = ev.sinr[static_cast<std::size_t>(n) * alloc.K + k];
          if (g < worst) {
            worst = g;
            wn = n;
            wk = k;
          }
        }
      if (wn < 0) break;
      alloc.set(wk, wn, t, false);
      ++removed;
    }
  }
  return removed;
}

// ------------------------------------------------------------------- metrics

struct MetricsReport {
  double sum_rate = 0.0;  // bit/s averaged over the period
  int served_users = 0;
  double sum_alpha_utility = 0.0;
  double jfi_rate = 1.0;
  double jfi_utility = 1.0;
};

inline double jain_index(const std::vector<double>& a) {
  double s = 0.0, s2 = 0.0;
  for (double x : a) {
    s += x;
    s2 += x * x;
  }
  if (a.empty() || s2 == 0.0) return 1.0;
  return s * s / (static_cast<double>(a.size()) * s2);
}

inline MetricsReport metrics(const RateTable& rt, const RadioConfig& radio) {
  MetricsReport m;
  std::vector<double> u(rt.N);
  for (int n = 0; n < rt.N; ++n) {
    m.sum_rate += rt.total[n] / rt.T;
    if (rt.total[n] > 0.0) ++m.served_users;
    u[n] = utility(radio, rt.total[n]);
    m.sum_alpha_utility += u[n];
  }
  m.jfi_rate = jain_index(rt.total);
  m.jfi_utility = jain_index(u);
  return m;
}

}  // namespace leobeam
