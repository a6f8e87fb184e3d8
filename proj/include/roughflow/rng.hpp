#pragma once

// Counter-based random numbers: value = mix(seed, stream, counter). Any draw
// can be reproduced without replaying earlier ones, so generation does not
// depend on scheduling.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace roughflow {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::string_view stream) : key_(splitmix64(seed ^ splitmix64(fnv1a(stream)))) {}

  std::uint64_t bits(std::uint64_t counter) const { return splitmix64(key_ ^ splitmix64(counter)); }

  /// Uniform in (0, 1).
  double uniform(std::uint64_t counter) const { return (double(bits(counter) >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via Box-Muller on counters 2c, 2c+1.
  double normal(std::uint64_t counter) const {
    double u1 = uniform(2 * counter), u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Integer in [0, m).
  std::uint64_t below(std::uint64_t counter, std::uint64_t m) const { return std::uint64_t(uniform(counter) * double(m)) % m; }

private:
  std::uint64_t key_;
};

} // namespace roughflow
