#pragma once

#include <cmath>
#include <cstdint>

#include "rational.hpp"

namespace tphi {

// Deterministic generator with a fixed algorithm so that (seed -> stream) is
// bit-identical on every platform; <random> distributions are not portable.
struct Rng {
  uint64_t s;

  explicit Rng(uint64_t seed) : s(seed) {}

  uint64_t next() {
    s += 0x9e3779b97f4a7c15ULL;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Substream for trial k of a suite, independent of thread scheduling.
  static Rng substream(uint64_t seed, uint64_t stream) {
    Rng mix(seed ^ (0xd1b54a32d192ed03ULL * (stream + 1)));
    mix.next();
    return mix;
  }

  uint64_t below(uint64_t n) { return n ? next() % n : 0; }
  long range(long lo, long hi) { return lo + (long)below((uint64_t)(hi - lo + 1)); }
  bool coin() { return next() & 1; }

  double unit() {  // [0,1)
    return (next() >> 11) * 0x1.0p-53;
  }

  double normal() {  // Box-Muller, one value per call (second discarded: determinism over thrift)
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = unit();
    double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Small-denominator rational in [-num_max, num_max] with denominator in [1, den_max].
  Rat rat(long num_max = 3, long den_max = 3) {
    long n = range(-num_max, num_max);
    long d = range(1, den_max);
    return Rat(n, d);
  }

  RC rc(long num_max = 3, long den_max = 3) { return RC(rat(num_max, den_max), rat(num_max, den_max)); }

  Rat rat_nonzero(long num_max = 3, long den_max = 3) {
    Rat q = rat(num_max, den_max);
    while (q == 0) q = rat(num_max, den_max);
    return q;
  }

  Rat rat_positive(long num_max = 3, long den_max = 3) {
    return Rat(range(1, num_max), range(1, den_max));
  }
};

}  // namespace tphi
