#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace percept::rng {

// Algorithm identity recorded in sample provenance. Draw protocol:
// mt19937_64 seeded through splitmix64, bounded integers by rejection
// sampling on the raw 64-bit output, unit reals from the top 53 bits.
inline constexpr std::string_view kGeneratorId =
    "mt19937_64/splitmix64-seed/rejection-bounded";

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Independent deterministic stream for (seed, stream_index).
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream_index) {
  std::uint64_t state = seed;
  std::uint64_t a = splitmix64(state);
  state ^= 0x6A09E667F3BCC909ull + stream_index * 0x9E3779B97F4A7C15ull;
  std::uint64_t b = splitmix64(state);
  return std::mt19937_64(a ^ (b + 0x2545F4914F6CDD1Dull * (stream_index + 1)));
}

/// Uniform integer in [0, n); portable across platforms (does not use
/// std::uniform_int_distribution, whose output is implementation-defined).
inline std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n) {
  // rejection zone keeps the draw exactly uniform
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    std::uint64_t r = gen();
    if (r >= threshold) return r % n;
  }
}

/// Uniform real in [0, 1) from the top 53 bits.
inline double unit_real(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; consumes exactly two uniforms.
inline double standard_normal(std::mt19937_64& gen) {
  double u1 = 1.0 - unit_real(gen);  // (0, 1]
  double u2 = unit_real(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

/// Zero-mean uniform deviate with standard deviation sigma.
inline double uniform_zero_mean(std::mt19937_64& gen, double sigma) {
  constexpr double sqrt3 = 1.7320508075688772935;
  return (2.0 * unit_real(gen) - 1.0) * sqrt3 * sigma;
}

}  // namespace percept::rng
