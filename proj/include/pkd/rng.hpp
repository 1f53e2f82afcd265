#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <random>

namespace pkd {

// splitmix64 step; used to derive child seeds from a parent seed.
std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic randomness for one logical stream. Wraps a 64-bit Mersenne
// twister for scalar draws and a GMP state for big-integer draws, both seeded
// from the same 64-bit seed, so a run is reproducible from its seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();                       // [0, 1)
  double uniform(double lo, double hi);     // [lo, hi)
  std::uint64_t uniform_below(std::uint64_t n);  // [0, n)

  mpz_class mpz_bits(unsigned bits);        // uniform in [0, 2^bits)
  mpz_class mpz_below(const mpz_class& n);  // uniform in [0, n)

  // Derived stream: depends only on (seed, tag), not on how much of this
  // stream has been consumed. Distinct tags give independent streams.
  Rng fork(std::uint64_t tag) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  gmp_randclass gmp_;
};

}  // namespace pkd
