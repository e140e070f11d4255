#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <string_view>

namespace vidq {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ mix64(v));
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based generator: output i is a hash of (key, i). Streams derived
/// from distinct keys are independent, so a logical event can own its draws
/// regardless of the order in which events are visited.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 0) : key_(mix64(key)) {}

  /// Stream keyed by a seed, a tag and any number of integer coordinates.
  static CounterRng stream(std::uint64_t seed, std::string_view tag,
                           std::initializer_list<std::uint64_t> coords = {}) {
    std::uint64_t h = hash_combine(seed, hash_tag(tag));
    for (auto c : coords) h = hash_combine(h, c);
    return CounterRng(h);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return mix64(key_ ^ mix64(counter_++)); }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Uniform in [0, 1).
template <class Rng>
double uniform01(Rng& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

/// Uniform in (0, 1].
template <class Rng>
double uniform_open0(Rng& rng) {
  return double((rng() >> 11) + 1) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Lemire's multiply-shift with rejection.
template <class Rng>
std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const unsigned __int128 m = static_cast<unsigned __int128>(rng()) * n;
    if (static_cast<std::uint64_t>(m) >= threshold) {
      return static_cast<std::uint64_t>(m >> 64);
    }
  }
}

/// Standard normal via Box-Muller (one output per pair of uniforms).
template <class Rng>
double standard_normal(Rng& rng) {
  const double u1 = uniform_open0(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <class Rng>
double clipped_normal(Rng& rng, double mean, double sigma, double lo = 0.0,
                      double hi = 1.0) {
  const double v = sigma > 0.0 ? mean + sigma * standard_normal(rng) : mean;
  return v < lo ? lo : (v > hi ? hi : v);
}

/// Gamma(shape, 1) by Marsaglia-Tsang squeeze/rejection. Shapes below one are
/// boosted: G(a) = G(a + 1) * U^(1/a).
template <class Rng>
double standard_gamma(Rng& rng, double shape) {
  if (shape < 1.0) {
    const double g = standard_gamma(rng, shape + 1.0);
    const double u = uniform_open0(rng);
    const double v = g * std::exp(std::log(u) / shape);
    return v > 0.0 ? v : std::numeric_limits<double>::denorm_min();
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open0(rng);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

/// Gamma with shape/rate parameterization (mean shape / rate).
template <class Rng>
double gamma_shape_rate(Rng& rng, double shape, double rate) {
  return standard_gamma(rng, shape) / rate;
}

/// Poisson by inversion for small means, normal approximation above 500.
template <class Rng>
std::uint64_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  if (mean > 500.0) {
    const double v = std::round(mean + std::sqrt(mean) * standard_normal(rng));
    return v < 0.0 ? 0 : static_cast<std::uint64_t>(v);
  }
  const double limit = std::exp(-mean);
  std::uint64_t k = 0;
  double p = uniform_open0(rng);
  while (p > limit) {
    p *= uniform_open0(rng);
    ++k;
  }
  return k;
}

}  // namespace vidq
