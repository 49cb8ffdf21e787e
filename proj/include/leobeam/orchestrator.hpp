#pragma once

// Outer loop: beam direction control, subchannel assignment and power
// control in turn until the objective settles, plus the two baselines and
// parameter sweeps.

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "leobeam/bdc_matching.hpp"
#include "leobeam/sa_matching.hpp"
#include "leobeam/sca_power.hpp"
#include "leobeam/scenario.hpp"

namespace leobeam {

struct FrameworkConfig {
  AlgorithmConfig algo;
  bool timing = false;          // wall-clock fields stay 0 otherwise, keeping records reproducible
  bool stability_scan = false;  // exhaustive swap scan after every matching phase
  std::uint64_t seed = 1;       // baseline 1 clustering

  BdcOptions bdc() const {
    BdcOptions o;
    o.swap_cap = algo.swap_cap;
    o.vacancy_swaps = algo.vacancy_swaps;
    o.rematch = [sa = sa()](const Network& net, Allocation& a) { run_sa(net, a, sa); };
    return o;
  }
  SaOptions sa() const {
    SaOptions o;
    o.negotiation_cap = algo.negotiation_cap;
    o.interference_threshold = algo.interference_threshold;
    return o;
  }
  ScaOptions sca() const {
    ScaOptions o;
    o.convergence_threshold = algo.sca_threshold;
    o.max_iterations = algo.sca_max_iterations;
    return o;
  }
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double bdc_seconds = 0.0, sa_seconds = 0.0, sca_seconds = 0.0;
  int phase1_rounds = 0;
  int swaps = 0;
  int non_increasing_swaps = 0;
  int repaired_subchannels = 0;
  int blocking_pairs = -1;  // -1 when not scanned
  int negotiation_removals = 0;
  int non_increasing_removals = 0;
  int min_sinr_removals = 0;
  int sca_iterations = 0;
  int sca_guard_triggers = 0;
  bool sca_converged = true;
  int rejected_phases = 0;  // phase results discarded because the objective fell
  std::vector<double> sca_trace;
  int violations = 0;
};

struct RunRecord {
  Algorithm algorithm = Algorithm::proposal;
  double initial_objective = 0.0;
  std::vector<IterationRecord> iterations;
  bool converged = false;
  int outer_iterations = 0;
  int outer_decreases = 0;
  int violations = 0;  // summed over every phase boundary
  std::vector<std::string> violation_log;
  MetricsReport metrics;
  double objective = 0.0;
  double wall_time_s = 0.0;
};

// ------------------------------------------------------------ initial state

inline void equal_split_power(const Network& net, Allocation& alloc) {
  std::vector<int> per_sat(net.satellite_count, 0);
  for (int q = 0; q < alloc.Q; ++q) ++per_sat[net.beam_satellite[q]];
  for (int q = 0; q < alloc.Q; ++q) {
    const double p = std::min(net.radio.beam_power_cap,
                              net.radio.satellite_power_cap / per_sat[net.beam_satellite[q]]);
    for (int t = 0; t < alloc.T; ++t) alloc.beam_power(q, t) = p;
  }
}

/// Equal power, no centres. With no centre there is no association, so
/// every user gets a provisional K_thr subchannels (strongest users first,
/// round robin); beam direction control only reads the counts and the
/// repair after it clears the rest.
inline Allocation initialize_allocation(const Network& net) {
  Allocation a(net);
  equal_split_power(net, a);
  const int cap = std::min(net.radio.per_user_cap, a.K);
  for (int t = 0; t < a.T; ++t) {
    std::vector<std::pair<double, int>> order;
    for (int n = 0; n < a.N; ++n) {
      double best = 0.0;
      for (int q = 0; q < a.Q; ++q) {
        if (!net.usable(q, n, t)) continue;
        for (int c = 0; c < a.C; ++c) best = std::max(best, net.h(q, c, n, t));
      }
      if (best > 0.0) order.push_back({-best, n});
    }
    std::stable_sort(order.begin(), order.end());
    int k = 0;
    for (const auto& [g, n] : order)
      for (int j = 0; j < cap; ++j) {
        a.set(k, n, t, true);
        k = (k + 1) % a.K;
      }
  }
  return a;
}

// ----------------------------------------------------------- baseline 1

namespace detail {

inline EcefCoord scaled(const EcefCoord& v, double s) { return {v.x * s, v.y * s, v.z * s}; }

}  // namespace detail

/// Lloyd clustering of user positions with farthest-point seeding, snapped
/// to distinct candidates. Result is one candidate per beam (-1 if the
/// candidates run out), beams of different satellites interleaved so the
/// densest clusters are spread over satellites.
inline std::vector<int> cluster_centers(const Network& net, int Q, std::uint64_t seed) {
  const auto& users = net.user_positions;
  const auto& cands = net.candidate_positions;
  const int N = static_cast<int>(users.size());
  const int C = static_cast<int>(cands.size());
  std::vector<int> out(Q, -1);
  if (C == 0) return out;
  const int k = std::min(Q, N);
  std::vector<EcefCoord> cent;
  std::vector<int> size(k, 0);
  if (k > 0) {
    Rng rng(seed);
    cent.push_back(users[rng.index(N)]);
    while (static_cast<int>(cent.size()) < k) {
      int far = 0;
      double far_d = -1.0;
      for (int n = 0; n < N; ++n) {
        double d = 1e300;
        for (const auto& c : cent) d = std::min(d, distance(users[n], c));
        if (d > far_d) {
          far_d = d;
          far = n;
        }
      }
      cent.push_back(users[far]);
    }
    std::vector<int> label(N, -1);
    for (int it = 0; it < 20; ++it) {
      bool changed = false;
      for (int n = 0; n < N; ++n) {
        int best = 0;
        for (int j = 1; j < k; ++j)
          if (distance(users[n], cent[j]) < distance(users[n], cent[best])) best = j;
        if (best != label[n]) {
          label[n] = best;
          changed = true;
        }
      }
      if (!changed) break;
      for (int j = 0; j < k; ++j) {
        EcefCoord s{0, 0, 0};
        int m = 0;
        for (int n = 0; n < N; ++n)
          if (label[n] == j) {
            s = s + users[n];
            ++m;
          }
        if (m > 0) cent[j] = detail::scaled(s, users[0].norm() / s.norm());  // back onto the sphere
      }
    }
    for (int n = 0; n < N; ++n) ++size[label[n]];
  }
  std::vector<int> order(k);
  for (int j = 0; j < k; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return size[a] > size[b]; });

  std::vector<char> used(C, 0);
  auto nearest_free = [&](const EcefCoord& p) {
    int best = -1;
    for (int c = 0; c < C; ++c)
      if (!used[c] && (best < 0 || distance(cands[c], p) < distance(cands[best], p))) best = c;
    if (best >= 0) used[best] = 1;
    return best;
  };
  std::vector<int> picked;
  for (int j : order) picked.push_back(nearest_free(cent[j]));
  // fewer clusters than beams: extra beams go next to the densest clusters
  for (int i = 0; static_cast<int>(picked.size()) < Q; ++i) {
    const EcefCoord p = k > 0 ? cent[order[i % k]] : cands[0];
    picked.push_back(nearest_free(p));
  }

  // interleave satellites: beam order (sat 0, beam 0), (sat 1, beam 0), ...
  std::vector<std::vector<int>> by_sat(net.satellite_count);
  for (int q = 0; q < Q; ++q) by_sat[net.beam_satellite[q]].push_back(q);
  std::vector<int> beam_order;
  for (std::size_t l = 0; static_cast<int>(beam_order.size()) < Q; ++l)
    for (const auto& v : by_sat)
      if (l < v.size()) beam_order.push_back(v[l]);
  for (int i = 0; i < Q; ++i) out[beam_order[i]] = picked[i];
  return out;
}

// ------------------------------------------------------------- outer loop

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void check_phase(const Network& net, const Allocation& a, const char* phase, int iteration,
                        RunRecord& rec, IterationRecord* it) {
  const auto v = check_feasibility(net, a);
  if (v.empty()) return;
  rec.violations += static_cast<int>(v.size());
  if (it) it->violations += static_cast<int>(v.size());
  rec.violation_log.push_back(std::string(phase) + " #" + std::to_string(iteration) + ": " +
                              describe(v));
}

}  // namespace detail

/// Runs one algorithm to convergence. The reported iteration count is the
/// last iteration that changed the objective by more than the tolerance.
inline Allocation run_framework(const Network& net, const FrameworkConfig& cfg, Algorithm algorithm,
                                RunRecord& rec) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  rec = RunRecord{};
  rec.algorithm = algorithm;
  Allocation a = initialize_allocation(net);
  if (algorithm == Algorithm::baseline1) {
    const auto centers = cluster_centers(net, a.Q, cfg.seed);
    for (int q = 0; q < a.Q; ++q)
      for (int t = 0; t < a.T; ++t) a.beam_center(q, t) = centers[q];
    associate_users(net, a);
    repair_subchannels(net, a);
  }
  detail::check_phase(net, a, "init", 0, rec, nullptr);
  double prev = objective_from_rates(net.radio, rate_table(net, a));
  rec.initial_objective = prev;

  // a phase whose result lowers the objective is undone
  double current = prev;
  Allocation saved;
  auto keep_or_undo = [&](IterationRecord& it) {
    const double f = objective_from_rates(net.radio, rate_table(net, a));
    if (f < current) {
      a = saved;
      ++it.rejected_phases;
    } else {
      current = f;
    }
  };

  for (int r = 1; r <= cfg.algo.max_outer_iterations; ++r) {
    IterationRecord it;
    it.iteration = r;
    if (algorithm != Algorithm::baseline1) {
      const auto t0 = clock::now();
      saved = a;
      auto res = run_bdc(net, a, cfg.bdc());
      it.min_sinr_removals += enforce_min_sinr(net, a);
      if (cfg.timing) it.bdc_seconds = detail::seconds_since(t0);
      it.phase1_rounds = res.stats.phase1_rounds;
      it.swaps = res.stats.swaps;
      it.non_increasing_swaps = res.stats.non_increasing_swaps;
      it.repaired_subchannels = res.stats.repaired_subchannels;
      if (cfg.stability_scan)
        it.blocking_pairs = scan_stability(net, res.judged, res.matching, cfg.bdc()).blocking_pairs;
      detail::check_phase(net, a, "bdc", r, rec, &it);
      keep_or_undo(it);
    }
    {
      const auto t0 = clock::now();
      saved = a;
      const auto st = run_sa(net, a, cfg.sa());
      if (cfg.timing) it.sa_seconds = detail::seconds_since(t0);
      it.negotiation_removals = st.removals;
      it.non_increasing_removals = st.non_increasing_removals;
      it.min_sinr_removals += st.min_sinr_removals;
      detail::check_phase(net, a, "sa", r, rec, &it);
      keep_or_undo(it);
    }
    if (algorithm != Algorithm::baseline2) {
      const auto t0 = clock::now();
      saved = a;
      const auto st = run_sca(net, a, cfg.sca());
      it.min_sinr_removals += enforce_min_sinr(net, a);
      if (cfg.timing) it.sca_seconds = detail::seconds_since(t0);
      it.sca_iterations = st.iterations;
      it.sca_guard_triggers = st.guard_triggers;
      it.sca_converged = st.converged;
      it.sca_trace = st.trace;
      detail::check_phase(net, a, "sca", r, rec, &it);
      keep_or_undo(it);
    }
    const double f = objective_from_rates(net.radio, rate_table(net, a));
    it.objective = f;
    rec.iterations.push_back(std::move(it));
    const double tol = cfg.algo.outer_tolerance * std::max(std::fabs(prev), 1e-300);
    if (r > 1 && f < prev - tol) ++rec.outer_decreases;
    if (r > 1 && std::fabs(f - prev) <= tol) {
      rec.converged = true;
      rec.outer_iterations = r - 1;
      break;
    }
    rec.outer_iterations = r;
    prev = f;
  }
  const auto rt = rate_table(net, a);
  rec.metrics = metrics(rt, net.radio);
  rec.objective = objective_from_rates(net.radio, rt);
  if (cfg.timing) rec.wall_time_s = detail::seconds_since(start);
  return a;
}

inline Allocation baseline1(const Network& net, const FrameworkConfig& cfg, RunRecord& rec) {
  return run_framework(net, cfg, Algorithm::baseline1, rec);
}

inline Allocation baseline2(const Network& net, const FrameworkConfig& cfg, RunRecord& rec) {
  return run_framework(net, cfg, Algorithm::baseline2, rec);
}

// ------------------------------------------------------------------ sweeps

struct SweepRow {
  Algorithm algorithm = Algorithm::proposal;
  int L = 0, K = 0, K_thr = 0;
  std::string distribution;
  std::uint64_t seed = 0;
  MetricsReport metrics;
  int outer_iterations = 0;
  double wall_time_s = 0.0;
  RunRecord record;
};

/// Same geometry with a different beam count or subchannel split.
inline Network reconfigure(const Network& base, const Scenario& s, int L, int K, int kthr) {
  Network net = base;
  net.radio.subchannel_count = K;
  net.radio.per_user_cap = std::min(kthr, K);
  net.channel.noise = noise_power(s.noise_temperature, net.radio.subchannel_bandwidth());
  net.beam_group.clear();
  net.beam_satellite.clear();
  for (int m = 0; m < net.satellite_count; ++m)
    for (int l = 0; l < L; ++l) {
      net.beam_group.push_back(m);
      net.beam_satellite.push_back(m);
    }
  return net;
}

/// One row per (algorithm, sweep point, seed), ordered by distribution,
/// seed, L, K, K_thr, algorithm. Empty axes fall back to the scenario's own
/// value.
inline std::vector<SweepRow> run_sweep(const Scenario& s, bool timing = false, int threads = 1) {
  s.validate();
  const auto& sw = s.sweep;
  const std::vector<int> Ls = sw.beams_per_satellite.empty() ? std::vector<int>{s.beams_per_satellite}
                                                             : sw.beams_per_satellite;
  const std::vector<int> Ks =
      sw.subchannels.empty() ? std::vector<int>{s.radio.subchannel_count} : sw.subchannels;
  const std::vector<int> Kts =
      sw.per_user_caps.empty() ? std::vector<int>{s.radio.per_user_cap} : sw.per_user_caps;
  const std::vector<std::string> Ds = sw.distributions.empty()
                                          ? std::vector<std::string>{std::string(to_string(s.layout.distribution))}
                                          : sw.distributions;
  struct Job {
    std::size_t base;
    SweepRow row;
  };
  std::vector<Job> jobs;
  std::vector<std::pair<std::string, std::uint64_t>> bases;
  for (const auto& d : Ds)
    for (auto seed : s.seeds) bases.push_back({d, seed});
  for (std::size_t b = 0; b < bases.size(); ++b)
    for (int L : Ls)
      for (int K : Ks)
        for (int kt : Kts)
          for (Algorithm alg : sw.algorithms) {
            SweepRow r;
            r.algorithm = alg;
            r.L = L;
            r.K = K;
            r.K_thr = std::min(kt, K);
            r.distribution = bases[b].first;
            r.seed = bases[b].second;
            jobs.push_back({b, r});
          }

  std::vector<Network> nets(bases.size());
  for (std::size_t b = 0; b < bases.size(); ++b) {
    Scenario sc = s;
    sc.layout.distribution = parse_distribution(bases[b].first);
    nets[b] = build_network(sc, bases[b].second);
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex fail_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < jobs.size();) {
      try {
        auto& j = jobs[i];
        const Network net = reconfigure(nets[j.base], s, j.row.L, j.row.K, j.row.K_thr);
        FrameworkConfig cfg;
        cfg.algo = s.algorithm;
        cfg.timing = timing;
        cfg.seed = j.row.seed;
        run_framework(net, cfg, j.row.algorithm, j.row.record);
        j.row.metrics = j.row.record.metrics;
        j.row.outer_iterations = j.row.record.outer_iterations;
        j.row.wall_time_s = j.row.record.wall_time_s;
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < nt; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<SweepRow> rows;
  rows.reserve(jobs.size());
  for (auto& j : jobs) rows.push_back(std::move(j.row));
  return rows;
}

}  // namespace leobeam
