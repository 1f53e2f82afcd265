#include "pkd/rng.hpp"

namespace pkd {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed)
    : seed_(seed), engine_(seed), gmp_(gmp_randinit_mt) {
  // gmp wants its own seed; derive one so the two generators differ.
  std::uint64_t s = seed;
  gmp_.seed(static_cast<unsigned long>(splitmix64(s)));
}

double Rng::uniform01() {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

mpz_class Rng::mpz_bits(unsigned bits) { return gmp_.get_z_bits(bits); }

mpz_class Rng::mpz_below(const mpz_class& n) { return gmp_.get_z_range(n); }

Rng Rng::fork(std::uint64_t tag) const {
  std::uint64_t s = seed_ ^ (0xa5a5a5a5a5a5a5a5ULL + tag);
  std::uint64_t child = splitmix64(s);
  return Rng(child);
}

}  // namespace pkd
