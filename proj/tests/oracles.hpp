#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "sfclass/photon_stats.hpp"

namespace oracles {

struct Band {
  double lo = 0.0;      // 16th percentile
  double median = 0.0;
  double hi = 0.0;      // 84th percentile
};

/// Percentile band of R = O / G over `sessions` Poisson draws. Sessions with
/// G = 0 rank as R = +inf.
inline Band ratio_band(double mean_g, double mean_o, std::uint64_t sessions, std::uint64_t seed) {
  sfclass::CountStream stream(seed);
  std::vector<double> r(sessions);
  for (auto& v : r) {
    const auto c = stream.sample_means(mean_g, mean_o);
    v = c.G ? static_cast<double>(c.O) / static_cast<double>(c.G) : std::numeric_limits<double>::infinity();
  }
  auto at = [&](double q) {
    const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(sessions - 1)));
    std::nth_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(k), r.end());
    return r[k];
  };
  Band b;
  b.median = at(0.5);
  b.lo = at(0.158655);
  b.hi = at(0.841345);
  return b;
}

/// Band form of R_A + dR_A < R_B - dR_B at total budget N (= E[G_B + O_B]),
/// with G_B = O_B and the same Gaussian-pump exposure in both cases.
inline bool band_discriminable(double R_A, double N, std::uint64_t sessions, std::uint64_t seed) {
  const double g = 0.5 * N;
  const Band a = ratio_band(g, R_A * g, sessions, sfclass::derive_seed(seed, 0xa));
  const Band b = ratio_band(g, g, sessions, sfclass::derive_seed(seed, 0xb));
  return a.hi < b.lo;
}

/// Smallest budget on a 1% geometric grid at which the band criterion holds.
inline double brute_force_n_min(double R_A, std::uint64_t sessions, std::uint64_t seed, double n_max = 1e4) {
  for (double N = 1.0; N <= n_max; N *= 1.01) {
    if (band_discriminable(R_A, N, sessions, seed)) return N;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace oracles
