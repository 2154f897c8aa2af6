#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace fbe {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) { return mix64(h ^ mix64(v)); }

template <typename... Ts>
constexpr std::uint64_t hash_key(std::uint64_t seed, Ts... values) {
  std::uint64_t h = mix64(seed);
  ((h = hash_combine(h, static_cast<std::uint64_t>(values))), ...);
  return h;
}

/// Seed for a named substream, e.g. derive_seed(master, "synth", pair_index).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                    std::uint64_t index = 0) {
  std::uint64_t fnv = 0xcbf29ce484222325ULL;
  for (char c : label) {
    fnv ^= static_cast<unsigned char>(c);
    fnv *= 0x100000001b3ULL;
  }
  return hash_key(master, fnv, index);
}

/// Uniform double in [0, 1) from the top 53 bits of a hash.
constexpr double unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Small sequential generator (splitmix64 stream). Distributions are written
/// out here instead of using <random> so sampled values do not depend on the
/// standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return unit_double(next()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next() % span);
  }

  double normal(double mean = 0.0, double sd = 1.0) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::int64_t poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda > 30.0) {
      const double x = std::round(normal(lambda, std::sqrt(lambda)));
      return x < 0 ? 0 : static_cast<std::int64_t>(x);
    }
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double p = uniform();
    while (p > limit) {
      ++k;
      p *= uniform();
    }
    return k;
  }

  Rng fork(std::uint64_t label) { return Rng(hash_key(next(), label)); }

 private:
  std::uint64_t state_;
};

}  // namespace fbe
