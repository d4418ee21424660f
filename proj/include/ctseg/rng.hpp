// Seedable, portable random number generation. Every randomized routine in
// the toolkit derives its draws from (seed, stream index) through the rules
// below, so results are identical across platforms and thread counts.
//
// Generator: the SplitMix64 finalizer over a Weyl sequence. Stream k of
// seed s starts from the state
//
//     state0 = mix(mix(s ^ 0x5851F42D4C957F2D) ^ mix(k))
//
// where mix() is the murmur-style SplitMix64 output scrambler. Each draw
// advances the state by the golden-ratio constant and scrambles it. The
// same rule is what test oracles re-implement independently.

#pragma once

#include <cmath>
#include <cstdint>

namespace ctseg {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

class Rng {
public:
  explicit Rng(std::uint64_t state) : state_(state) {}

  // Stream `index` of the master `seed`; streams are independent for all
  // practical purposes and can be consumed in parallel.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(detail::mix64(detail::mix64(seed ^ 0x5851F42D4C957F2DULL) ^
                             detail::mix64(index)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return detail::mix64(state_);
  }

  // Uniform in [0, n) without modulo bias (Lemire multiply-shift with
  // rejection). Deterministic for a given stream.
  std::uint64_t bounded(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal deviate via Box-Muller (one value per call; the
  // companion value is discarded to keep the stream layout simple).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

private:
  std::uint64_t state_;
};

}  // namespace ctseg
