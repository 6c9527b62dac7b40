#ifndef ARSPIKE_RNG_HPP
#define ARSPIKE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace arspike {

/// splitmix64 mixing step, used to derive independent stream seeds from a
/// base seed.  The constants are the standard ones from Vigna's reference
/// implementation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` / item `item` of a run keyed by `base`.
/// Chaining two mixing steps keeps distinct (stream, item) pairs decorrelated
/// regardless of how close the raw integers are.  The item is xored (not
/// ored) with the offset constant: xor is a bijection, so distinct items can
/// never collapse onto the same seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t item = 0) {
  return splitmix64(splitmix64(base ^ splitmix64(stream)) ^ splitmix64(item ^ 0x5555555555555555ULL));
}

/// Deterministic random source.  All variate derivations are written out
/// explicitly (instead of using std::uniform_real_distribution and friends)
/// so that a given seed yields the same stream on every platform and
/// standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound).  Rejection over a power-of-two mask,
  /// which is exactly uniform and portable.
  std::uint64_t uniform_index(std::uint64_t bound) {
    if (bound <= 1) return 0;
    std::uint64_t mask = bound - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
      std::uint64_t v = engine_() & mask;
      if (v < bound) return v;
    }
  }

  /// Standard normal via Box-Muller; the second variate of each pair is
  /// cached so consecutive calls consume randomness at half rate.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Guard the log: uniform() can return exactly 0.
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Random sign, +1 or -1 with equal probability.
  double sign() { return (engine_() & 1ULL) ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace arspike

#endif  // ARSPIKE_RNG_HPP
