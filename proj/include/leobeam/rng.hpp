#pragma once

#include <cstdint>
#include <random>

namespace leobeam {

// mt19937_64 with a conversion that does not depend on the standard
// library's distribution implementations, so streams match across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }
  int index(int n) { return static_cast<int>(uniform() * n) % n; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace leobeam
