#ifndef CONFORMAL_KIT_RANDOM_HPP
#define CONFORMAL_KIT_RANDOM_HPP

#include <cmath>
#include <cstdint>

#include "conformal_kit/types.hpp"

namespace conformal {

/**
 * Deterministic pseudo-random stream (xoshiro256++ seeded via splitmix64).
 *
 * The sequence of draws is a pure function of the (seed, stream) pair, so the
 * same pair reproduces the same draws on every run regardless of platform
 * std::random internals or how work is divided across threads.  Experiments
 * derive one stream per Monte Carlo replication.
 */
class Rng {
 public:
  explicit Rng(RngSeed s) {
    // Fold the stream id into the seed material, then expand with splitmix64.
    std::uint64_t t = s.seed ^ (0x9E3779B97F4A7C15ULL * (s.stream + 1));
    for (auto& word : state_) word = splitmix64(t);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /** Uniform draw from [0, 1) with 53 random bits. */
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /** Standard normal draw (Marsaglia polar method, spare value cached). */
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double normal(double mu, double sd) { return mu + sd * normal(); }

  /** Student-t draw with integer df >= 1 (ratio of a normal to a scaled chi). */
  double student_t(int df) {
    if (df < 1) throw argument_error("Rng::student_t: df must be >= 1");
    double chi2 = 0.0;
    for (int i = 0; i < df; ++i) {
      const double z = normal();
      chi2 += z * z;
    }
    return normal() / std::sqrt(chi2 / static_cast<double>(df));
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace conformal

#endif  // CONFORMAL_KIT_RANDOM_HPP
