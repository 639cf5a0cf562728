#pragma once

#include <cstdint>

namespace dragsim {

// Small deterministic generator (splitmix64).  Used instead of the standard
// distributions so that streams are reproducible across compilers and
// platforms, and so that independent streams can be derived per sequence.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased draw from [0, n) by rejection.
  uint64_t next_below(uint64_t n) {
    uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  double next_double() {  // [0, 1)
    return (next_u64() >> 11) * 0x1.0p-53;
  }

  // Derives an independent child stream; mixing is order-sensitive so
  // derive_stream(seed, a, b) != derive_stream(seed, b, a).
  static uint64_t derive_stream(uint64_t seed, uint64_t a, uint64_t b) {
    Rng r(seed ^ (a * 0xd1342543de82ef95ULL) ^ (b * 0xaf251af3b0f025b5ULL));
    r.next_u64();
    return r.next_u64();
  }

 private:
  uint64_t state_;
};

}  // namespace dragsim
