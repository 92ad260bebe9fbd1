#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

#include "sfclass/error.hpp"

// Poisson photon-counting engine. Everything here is built on
// std::mt19937_64, whose output sequence is fixed by the standard, and on
// hand-written uniform/Poisson transforms, so sampled streams do not depend
// on the standard library implementation.

namespace sfclass {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of substream `stream` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do u = uniform();
    while (u == 0.0);
    return u;
  }

  /// +1 or -1 with equal probability.
  int sign() { return (engine_() >> 63) ? 1 : -1; }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

inline double log_factorial(std::uint64_t k) {
  static const auto table = [] {
    std::array<double, 256> t{};
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  if (k < table.size()) return table[k];
  const double n = static_cast<double>(k) + 1.0;  // log Γ(n) by Stirling
  const double inv = 1.0 / n;
  const double inv2 = inv * inv;
  return (n - 0.5) * std::log(n) - n + 0.5 * std::log(2.0 * std::numbers::pi) +
         inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0)));
}

// Sequential-search inversion; used for small means.
inline std::uint64_t poisson_inversion(Rng& rng, double lambda) {
  const double u = rng.uniform();
  double p = std::exp(-lambda);
  double cdf = p;
  std::uint64_t k = 0;
  while (u > cdf) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cdf += p;
    if (p == 0.0 && cdf < u) break;  // round-off tail
  }
  return k;
}

// Transformed rejection with squeeze (Hörmann's PTRS).
inline std::uint64_t poisson_ptrs(Rng& rng, double lambda) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const auto k = static_cast<std::uint64_t>(kf);
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lambda + kf * loglam - log_factorial(k)) {
      return k;
    }
  }
}

}  // namespace detail

/// One Poisson(lambda) draw. Inversion below 30, PTRS above.
inline std::uint64_t sample_poisson(Rng& rng, double lambda) {
  detail::require(lambda >= 0.0 && std::isfinite(lambda), "sample_poisson: mean must be finite and >= 0");
  if (lambda == 0.0) return 0;
  if (lambda < 30.0) return detail::poisson_inversion(rng, lambda);
  return detail::poisson_ptrs(rng, lambda);
}

/// Pulse allocation between the Gaussian and optimized pump settings.
struct CountingPlan {
  std::uint64_t pulses_gaussian = 0;
  std::uint64_t pulses_optimized = 0;
  std::uint64_t seed = 0;
};

/// Sum-frequency counts under the Gaussian pump (G) and the optimized pump (O).
struct CountPair {
  std::uint64_t G = 0;
  std::uint64_t O = 0;

  friend bool operator==(const CountPair&, const CountPair&) = default;
};

/// Single-owner stream of counting sessions.
class CountStream {
 public:
  explicit CountStream(std::uint64_t seed) : rng_(seed) {}

  CountPair sample(double rate_g, double rate_o, std::uint64_t pulses_g, std::uint64_t pulses_o) {
    detail::require(rate_g >= 0.0 && rate_o >= 0.0, "sample_counts: rates must be >= 0");
    CountPair c;
    c.G = sample_poisson(rng_, rate_g * static_cast<double>(pulses_g));
    c.O = sample_poisson(rng_, rate_o * static_cast<double>(pulses_o));
    return c;
  }

  /// Draw with the session means given directly.
  CountPair sample_means(double mean_g, double mean_o) { return sample(mean_g, mean_o, 1, 1); }

  Rng& rng() { return rng_; }

 private:
  Rng rng_;
};

/// G ~ Poisson(rate_g * pulses_gaussian), O ~ Poisson(rate_o * pulses_optimized),
/// drawn from a fresh stream seeded by the plan.
inline CountPair sample_counts(double rate_g, double rate_o, const CountingPlan& plan) {
  CountStream stream(plan.seed);
  return stream.sample(rate_g, rate_o, plan.pulses_gaussian, plan.pulses_optimized);
}

/// Mean of G + O over a list of case-B sessions.
inline double n_ave(std::span<const CountPair> pairs) {
  if (pairs.empty()) throw DegenerateInput("n_ave: empty session list");
  double total = 0.0;
  for (const auto& p : pairs) total += static_cast<double>(p.G + p.O);
  return total / static_cast<double>(pairs.size());
}

}  // namespace sfclass
