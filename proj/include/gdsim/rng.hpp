#pragma once

#include <cstdint>
#include <limits>

namespace gdsim {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Small counter-based generator (SplitMix64). Construction is a couple of
/// multiplies, so every agent can get its own stream per transition.
class Rng {
 public:
  using result_type = std::uint64_t;

  constexpr Rng() = default;
  constexpr explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Stream for one agent in one transition application.
  static constexpr Rng for_agent(std::uint64_t seed, std::uint64_t step, std::uint64_t ordinal,
                                 std::uint64_t agent_key) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ step);
    h = splitmix64(h ^ (ordinal * 0x632be59bd9b4e019ull));
    h = splitmix64(h ^ agent_key);
    return Rng(h);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  constexpr bool bernoulli(double p) { return uniform01() < p; }

  /// Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift; the slight bias for huge n is irrelevant here.
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>((*this)()) * n) >> 64);
  }

 private:
  std::uint64_t state_ = 0;
};

}  // namespace gdsim
