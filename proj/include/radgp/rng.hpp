#pragma once

#include <cstdint>
#include <random>

namespace radgp {

// splitmix64, used to turn (seed, stream id) pairs into well-spread engine seeds
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded generator wrapper. Substreams derived with substream() are
// statistically independent and reproducible given the master seed.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix64(seed)) {}

  double uniform() { return unif_(gen_); }
  double normal() { return norm_(gen_); }

  // uniform integer in [0, n)
  std::int64_t uniform_int(std::int64_t n) {
    return std::uniform_int_distribution<std::int64_t>(0, n - 1)(gen_);
  }

  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(gen_);
  }

  // inverse gamma with shape a, rate b (mean b/(a-1) for a>1)
  double inverse_gamma(double a, double b) { return 1.0 / gamma(a, 1.0 / b); }

  Rng substream(std::uint64_t id) const { return Rng(mix64(seed_ ^ mix64(id + 1))); }

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return gen_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace radgp
