#pragma once

// Small scenarios built from the real geometry and channel, sized so whole
// framework runs finish in milliseconds.

#include "leobeam/scenario.hpp"

namespace desk {

inline leobeam::Scenario scenario(int L = 2, int C = 12, int T = 3, int N = 10, int K = 4,
                                  int kthr = 2) {
  leobeam::Scenario s;
  s.beams_per_satellite = L;
  s.candidate_count = C;
  s.slot_count = T;
  s.user_count = N;
  s.radio.subchannel_count = K;
  s.radio.per_user_cap = kthr;
  return s;
}

}  // namespace desk
