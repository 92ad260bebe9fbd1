#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <thread>
#include <vector>

#include "sfclass/error.hpp"
#include "sfclass/photon_stats.hpp"

// Ratio test on Gaussian-pump (G) and optimized-pump (O) counts.

namespace sfclass {

/// Extinction ratio R = O / G with its shot-noise standard error.
struct RatioEstimate {
  double R = 0.0;
  double dR = 0.0;
  bool valid = false;
};

struct Threshold {
  double R_t = 0.0;
};

enum class Decision { A, B, inconclusive };

struct Verdict {
  Decision decision = Decision::inconclusive;
};

/// R and dR = R sqrt((O + G) / (O G)) from (possibly fractional) counts.
/// Invalid when either count is zero.
inline RatioEstimate ratio_from_means(double G, double O) {
  if (!(G > 0.0) || !(O > 0.0)) return {};
  const double R = O / G;
  return {R, R * std::sqrt((O + G) / (O * G)), true};
}

inline RatioEstimate ratio(const CountPair& counts) {
  return ratio_from_means(static_cast<double>(counts.G), static_cast<double>(counts.O));
}

inline Threshold threshold(const RatioEstimate& ra, const RatioEstimate& rb) {
  if (!ra.valid || !rb.valid) throw InvalidArgument("threshold: ratio estimates must be valid");
  return {(ra.R + rb.R + ra.dR - rb.dR) / 2.0};
}

/// Faithful-discrimination condition R_A + dR_A < R_B - dR_B (strict).
inline bool discriminable(const RatioEstimate& ra, const RatioEstimate& rb) {
  if (!ra.valid || !rb.valid) throw InvalidArgument("discriminable: ratio estimates must be valid");
  return ra.R + ra.dR < rb.R - rb.dR;
}

/// A if R < R_t, B otherwise (ties go to B).
inline Verdict classify(const CountPair& counts, const Threshold& t) {
  const auto r = ratio(counts);
  if (!r.valid) return {Decision::inconclusive};
  return {r.R < t.R_t ? Decision::A : Decision::B};
}

/// Minimum total photon number for which the bands separate at G_B = O_B:
/// 2 (sqrt 2 + sqrt(R_A (1 + R_A)))^2 / (R_A - 1)^2.
inline double n_min(double R_A) {
  detail::require(std::isfinite(R_A) && R_A >= 0.0, "n_min: R_A must be finite and >= 0");
  if (R_A == 1.0) throw DegenerateInput("n_min: singular at R_A = 1 (no selectivity contrast)");
  // 2 (sqrt2 + s)^2 expanded, so that R_A = 0 gives exactly 4.
  const double s = std::sqrt(R_A * (1.0 + R_A));
  const double d = R_A - 1.0;
  return (4.0 + 4.0 * std::numbers::sqrt2 * s + 2.0 * s * s) / (d * d);
}

/// Solves n_min(R_A) = n for R_A in [0, 1) by bisection. n must be >= 4.
inline double invert_n_min(double n) {
  detail::require(std::isfinite(n) && n >= 4.0, "invert_n_min: target must be >= 4");
  // n_min is strictly increasing on [0, 1).
  double lo = 0.0;
  double hi = 1.0;
  for (;;) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (n_min(mid) < n ? lo : hi) = mid;
  }
  return hi < 1.0 && std::abs(n_min(hi) - n) < std::abs(n_min(lo) - n) ? hi : lo;
}

// --- Monte Carlo fidelity ------------------------------------------------

/// Expected session counts for one hypothesis.
struct SessionMeans {
  double g = 0.0;
  double o = 0.0;
};

struct FidelityScenario {
  SessionMeans a;
  SessionMeans b;
  Threshold threshold;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct FidelityResult {
  double fidelity = 0.0;
  Interval ci;
  std::uint64_t trials = 0;
  std::uint64_t correct = 0;
  std::uint64_t inconclusive = 0;
  std::uint64_t sessions_b = 0;
  double n_ave_b = 0.0;  // mean G + O over case-B sessions
};

/// Wilson score interval at 95%.
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t n) {
  if (n == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double nd = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nd;
  const double denom = 1.0 + z * z / nd;
  const double center = (p + z * z / (2.0 * nd)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nd + z * z / (4.0 * nd * nd)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// Threshold computed from expected counts (planning mode).
inline Threshold planning_threshold(const FidelityScenario& s) {
  return threshold(ratio_from_means(s.a.g, s.a.o), ratio_from_means(s.b.g, s.b.o));
}

/// Threshold computed from the mean counts of `sessions` sampled calibration
/// sessions per hypothesis (experiment-emulation mode).
inline Threshold calibration_threshold(const FidelityScenario& s, std::uint64_t sessions, std::uint64_t seed) {
  detail::require(sessions >= 1, "calibration_threshold: need at least one session");
  CountStream stream(derive_seed(seed, 0xca11b7a7e));
  double ga = 0, oa = 0, gb = 0, ob = 0;
  for (std::uint64_t i = 0; i < sessions; ++i) {
    const auto ca = stream.sample_means(s.a.g, s.a.o);
    const auto cb = stream.sample_means(s.b.g, s.b.o);
    ga += static_cast<double>(ca.G);
    oa += static_cast<double>(ca.O);
    gb += static_cast<double>(cb.G);
    ob += static_cast<double>(cb.O);
  }
  const double k = static_cast<double>(sessions);
  const auto ra = ratio_from_means(ga / k, oa / k);
  const auto rb = ratio_from_means(gb / k, ob / k);
  if (!ra.valid || !rb.valid) throw DegenerateInput("calibration_threshold: zero counts in calibration run");
  return threshold(ra, rb);
}

namespace detail {

inline constexpr std::uint64_t kTrialBlock = 1024;

struct BlockTally {
  std::uint64_t trials = 0, correct = 0, inconclusive = 0, sessions_b = 0, counts_b = 0;
};

inline BlockTally run_block(const FidelityScenario& s, std::uint64_t seed, std::uint64_t block,
                            std::uint64_t trials) {
  CountStream stream(derive_seed(seed, block));
  BlockTally t;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const bool truth_b = stream.rng().bits() >> 63;
    const auto& m = truth_b ? s.b : s.a;
    const auto counts = stream.sample_means(m.g, m.o);
    const auto v = classify(counts, s.threshold);
    ++t.trials;
    if (v.decision == Decision::inconclusive) ++t.inconclusive;
    if ((truth_b && v.decision == Decision::B) || (!truth_b && v.decision == Decision::A)) ++t.correct;
    if (truth_b) {
      ++t.sessions_b;
      t.counts_b += counts.G + counts.O;
    }
  }
  return t;
}

}  // namespace detail

/// Fraction of correctly classified sessions, ground truth A or B with
/// probability 1/2 each; inconclusive verdicts count as incorrect. Trials are
/// split into fixed blocks with their own derived seeds, so the result does
/// not depend on `jobs`.
inline FidelityResult fidelity(const FidelityScenario& s, std::uint64_t trials, std::uint64_t seed,
                               unsigned jobs = 1) {
  detail::require(trials >= 1, "fidelity: trials must be >= 1");
  const std::uint64_t blocks = (trials + detail::kTrialBlock - 1) / detail::kTrialBlock;
  std::vector<detail::BlockTally> tallies(blocks);
  auto work = [&](std::uint64_t first, std::uint64_t stride) {
    for (std::uint64_t b = first; b < blocks; b += stride) {
      const std::uint64_t n = std::min(detail::kTrialBlock, trials - b * detail::kTrialBlock);
      tallies[b] = detail::run_block(s, seed, b, n);
    }
  };
  const unsigned workers = static_cast<unsigned>(std::clamp<std::uint64_t>(jobs, 1, blocks));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }

  FidelityResult r;
  std::uint64_t counts_b = 0;
  for (const auto& t : tallies) {
    r.trials += t.trials;
    r.correct += t.correct;
    r.inconclusive += t.inconclusive;
    r.sessions_b += t.sessions_b;
    counts_b += t.counts_b;
  }
  r.fidelity = static_cast<double>(r.correct) / static_cast<double>(r.trials);
  r.ci = wilson_interval(r.correct, r.trials);
  r.n_ave_b = r.sessions_b ? static_cast<double>(counts_b) / static_cast<double>(r.sessions_b) : 0.0;
  return r;
}

}  // namespace sfclass
