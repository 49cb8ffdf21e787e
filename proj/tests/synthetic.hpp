#pragma once

// Hand-built networks for unit tests: every beam is its own group so gains
// can be set per beam.

#include "leobeam/netmodel.hpp"
#include "leobeam/rng.hpp"

namespace testnet {

using namespace leobeam;

inline Network blank(int Q, int C, int N, int T, int K, int kthr = 1, double noise = 1.0,
                     int sats = 0) {
  RadioConfig r;
  r.subchannel_count = K;
  r.per_user_cap = kthr;
  r.beam_bandwidth = 1.0 * K;  // 1 Hz per subchannel keeps rates readable
  r.beam_power_cap = 10.0;
  r.satellite_power_cap = 1e9;
  ChannelTensor ch(Q, C, N, T);
  ch.noise = noise;
  std::vector<int> sat(Q);
  if (sats <= 0) sats = Q;
  for (int q = 0; q < Q; ++q) sat[q] = q % sats;
  Network net;
  net.radio = r;
  net.channel = std::move(ch);
  for (int q = 0; q < Q; ++q) net.beam_group.push_back(q);
  net.beam_satellite = sat;
  net.satellite_count = sats;
  return net;
}

inline Network random(std::uint64_t seed, int Q, int C, int N, int T, int K, int kthr,
                      int sats = 0) {
  Network net = blank(Q, C, N, T, K, kthr, 1.0, sats);
  Rng rng(seed);
  for (double& v : net.channel.h) v = std::exp(rng.uniform(-4.0, 1.0));
  return net;
}

// Random powers, distinct centres per slot and up to kthr random subchannels
// per user. Association is left to the caller.
inline Allocation random_allocation(const Network& net, std::uint64_t seed, bool centres = true) {
  Rng rng(seed);
  Allocation a(net);
  for (double& p : a.power) p = rng.uniform(1.0, net.radio.beam_power_cap);
  for (int t = 0; t < a.T && centres; ++t) {
    std::vector<int> cs(a.C);
    for (int c = 0; c < a.C; ++c) cs[c] = c;
    for (int i = a.C - 1; i > 0; --i) std::swap(cs[i], cs[rng.index(i + 1)]);
    for (int q = 0; q < a.Q && q < a.C; ++q) a.beam_center(q, t) = cs[q];
  }
  for (int t = 0; t < a.T; ++t)
    for (int n = 0; n < a.N; ++n) {
      const int want = static_cast<int>(rng.index(net.radio.per_user_cap + 1));
      for (int j = 0; j < want; ++j) a.set(static_cast<int>(rng.index(a.K)), n, t, true);
    }
  return a;
}

}  // namespace testnet
