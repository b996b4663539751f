#pragma once

#include <bit>
#include <cstdint>
#include <random>

namespace pubproj {

// Deterministic random source. All randomness in the library flows through
// this wrapper so that a run is reproducible from a single seed; independent
// substreams are derived with derive() instead of sharing one generator
// across unrelated sampling tasks.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0,1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Exact uniform on {0,...,n-1} by rejection; n >= 1.
  std::uint32_t next_below(std::uint32_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero(std::uint64_t{n - 1});
    for (;;) {
      std::uint64_t r = gen_() & mask;
      if (r < n) return static_cast<std::uint32_t>(r);
    }
  }

  // True with probability exactly 2^-e, for any e >= 0. Succeeds only if
  // e consecutive random bits are all zero, so e far beyond the double
  // exponent range is handled without underflow.
  bool bernoulli_pow2(std::uint64_t e) {
    while (e >= 64) {
      if (gen_() != 0) return false;
      e -= 64;
    }
    if (e == 0) return true;
    return (gen_() >> (64 - e)) == 0;
  }

  // Child stream keyed by id; distinct ids give statistically independent
  // streams seeded from the same master seed.
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace pubproj
