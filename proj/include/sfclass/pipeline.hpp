#pragma once

#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sfclass/baseline.hpp"
#include "sfclass/classifier.hpp"
#include "sfclass/config.hpp"
#include "sfclass/photon_stats.hpp"
#include "sfclass/pump_opt.hpp"
#include "sfclass/upconv.hpp"

// Scenario orchestration: optimize the pump for each separation, resolve the
// count model, then simulate counting sessions and benchmark against direct
// detection.

namespace sfclass {

/// Reference values reported for the three measured separations.
namespace reference {
inline constexpr double theta_x[] = {3.0, 5.0, 10.0};
inline constexpr double n_min[] = {95.0, 36.0, 22.0};
inline constexpr double threshold[] = {0.77, 0.61, 0.45};
inline constexpr double fidelity_at_n_min[] = {0.75, 0.79, 0.87};
inline constexpr double saturation_n_ave[] = {534.0, 132.0, 62.0};
}  // namespace reference

/// Everything known about one separation once the pump and model are fixed.
struct ThetaSetup {
  double theta_x = 0.0;
  OptimizationResult optimization;
  double eigen_objective = 0.0;
  CountModel model;
  std::optional<double> target_n_min;  // from selectivity calibration
  // Expected per-pulse rates, dark counts included.
  double rate_g_a = 0.0;
  double rate_o_a = 0.0;
  double rate_g_b = 0.0;
  double rate_o_b = 0.0;
  double selectivity = 0.0;
  double R_A = 0.0;
  double R_B = 0.0;
  double N_min = 0.0;
};

enum class FailureKind { none, degenerate, convergence, other };

struct ThetaOutcome {
  double theta_x = 0.0;
  std::optional<ThetaSetup> setup;
  FailureKind failure = FailureKind::none;
  std::string error;
};

namespace detail {

inline CountModel base_model(const ScenarioConfig& c) {
  CountModel m;
  m.sigma_f = c.collection_width();
  m.eta0 = c.eta0;
  m.dark_per_pulse = c.dark_per_pulse;
  m.gain_opt = c.gain_opt.value_or(1.0);
  m.leak_even = c.leak_even;
  m.misalign_x = c.misalign_x;
  return m;
}

inline std::optional<double> calibration_for(const ScenarioConfig& c, double theta) {
  for (const auto& p : c.selectivity_calibration) {
    if (std::abs(p.theta_x - theta) <= 1e-9 * std::max(1.0, theta)) return p.n_min;
  }
  return std::nullopt;
}

/// Expected R_A as a function of the leak amplitude, with the gain balanced
/// per leak value unless fixed by the config.
struct LeakScan {
  LinearResponse resp_a;
  LinearResponse resp_b;
  std::vector<complex> coeffs;
  double eta_g_a;
  double eta_g_b;
  CountModel model;
  std::optional<double> fixed_gain;

  double ratio_a(double leak) const {
    const double eo_a = resp_a.eta(coeffs, leak);
    const double eo_b = resp_b.eta(coeffs, leak);
    const double gain = fixed_gain ? *fixed_gain : eta_g_b / eo_b;
    return (model.eta0 * gain * eo_a + model.dark_per_pulse) / (model.eta0 * eta_g_a + model.dark_per_pulse);
  }
};

inline double solve_leak(const LeakScan& scan, double ra_target) {
  if (scan.ratio_a(0.0) >= ra_target) {
    throw DegenerateInput("selectivity calibration: target R_A is below the leak-free value");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (scan.ratio_a(hi) < ra_target) {
    hi *= 2.0;
    if (hi > 1e8) throw DegenerateInput("selectivity calibration: target R_A not reachable by leakage");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (scan.ratio_a(mid) < ra_target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline OptimizationSpec optimization_spec(const ScenarioConfig& c, std::size_t theta_index) {
  OptimizationSpec s;
  s.l_list = c.l_list;
  s.m_list = c.m_list;
  s.theta_x = c.theta_x.at(theta_index);
  s.geometry = c.geometry();
  s.method = c.method;
  s.feedback = c.feedback;
  s.feedback.seed = derive_seed(c.seed, 0xfeedbac0 + theta_index);
  return s;
}

/// Optimizes the pump for one separation and resolves leak and gain.
inline ThetaSetup prepare_theta(const ScenarioConfig& c, std::size_t theta_index) {
  const double theta = c.theta_x.at(theta_index);
  if (!(theta > 0.0)) throw DegenerateInput("theta_x must be > 0 for an optimized pump");
  const auto spec = optimization_spec(c, theta_index);
  CountModel model = detail::base_model(c);
  ThetaSetup t{theta, optimize(spec, model)};
  t.eigen_objective =
      spec.method == OptimizerMethod::eigen ? t.optimization.objective : optimize_eigen(spec).objective;

  const auto state_a = SignalState::single(c.sigma_s);
  const auto state_b = SignalState::symmetric_pair(c.sigma_s, theta);
  const auto gaussian = PumpProfile::gaussian(c.sigma_p);
  const auto& pump = t.optimization.pump;

  t.target_n_min = detail::calibration_for(c, theta);
  if (t.target_n_min) {
    CountModel clean = model;
    clean.leak_even = 0.0;
    const detail::LeakScan scan{LinearResponse(pump.basis(), state_a, clean),
                                LinearResponse(pump.basis(), state_b, clean),
                                pump.coeffs(),
                                eta_rel(gaussian, state_a, clean),
                                eta_rel(gaussian, state_b, clean),
                                clean,
                                c.gain_opt};
    model.leak_even = detail::solve_leak(scan, invert_n_min(*t.target_n_min));
  }
  if (!c.gain_opt) model.gain_opt = balanced_gain(pump, state_b, model);
  t.model = model;

  t.rate_g_a = expected_rate(gaussian, state_a, model).rate_total;
  t.rate_o_a = expected_rate(pump, state_a, model).rate_total;
  t.rate_g_b = expected_rate(gaussian, state_b, model).rate_total;
  t.rate_o_b = expected_rate(pump, state_b, model).rate_total;
  t.selectivity = t.rate_o_a / t.rate_o_b;
  t.R_A = t.rate_o_a / t.rate_g_a;
  t.R_B = t.rate_o_b / t.rate_g_b;
  t.N_min = t.R_A < 1.0 ? n_min(t.R_A) : std::numeric_limits<double>::infinity();
  return t;
}

inline std::vector<ThetaOutcome> prepare_all(const ScenarioConfig& c) {
  std::vector<ThetaOutcome> out;
  for (std::size_t i = 0; i < c.theta_x.size(); ++i) {
    ThetaOutcome o;
    o.theta_x = c.theta_x[i];
    try {
      o.setup = prepare_theta(c, i);
    } catch (const DegenerateInput& e) {
      o.failure = FailureKind::degenerate;
      o.error = e.what();
    } catch (const ConvergenceError& e) {
      o.failure = FailureKind::convergence;
      o.error = e.what();
    } catch (const InvalidArgument& e) {
      o.failure = FailureKind::other;
      o.error = e.what();
    }
    out.push_back(std::move(o));
  }
  return out;
}

/// Equal pulse split sized so that E[G_B + O_B] = n_ave.
inline CountingPlan plan_for_budget(const ThetaSetup& t, double n_ave, std::uint64_t seed) {
  const auto pulses = static_cast<std::uint64_t>(std::llround(n_ave / (t.rate_g_b + t.rate_o_b)));
  return {pulses, pulses, seed};
}

inline FidelityScenario scenario_for_plan(const ThetaSetup& t, const CountingPlan& plan, const ScenarioConfig& c) {
  const double pg = static_cast<double>(plan.pulses_gaussian);
  const double po = static_cast<double>(plan.pulses_optimized);
  FidelityScenario s;
  s.a = {t.rate_g_a * pg, t.rate_o_a * po};
  s.b = {t.rate_g_b * pg, t.rate_o_b * po};
  if (!(s.a.g > 0.0 && s.a.o > 0.0 && s.b.g > 0.0 && s.b.o > 0.0)) {
    s.threshold = {0.0};  // every session is inconclusive
  } else if (c.threshold_mode == ThresholdMode::planning) {
    s.threshold = planning_threshold(s);
  } else {
    s.threshold = calibration_threshold(s, c.calibration_sessions, plan.seed);
  }
  return s;
}

// --- sweep ---------------------------------------------------------------

struct SweepRow {
  double theta_x = 0.0;
  double n_ave_target = 0.0;
  double n_ave = 0.0;  // measured mean G_B + O_B
  FidelityResult result;
  double R_A = 0.0;
  double R_B = 0.0;
  double R_t = 0.0;
};

inline SweepRow sweep_point(const ThetaSetup& t, double n_ave, const ScenarioConfig& c, std::uint64_t seed,
                            unsigned jobs) {
  const auto plan = plan_for_budget(t, n_ave, seed);
  const auto scen = scenario_for_plan(t, plan, c);
  SweepRow r;
  r.theta_x = t.theta_x;
  r.n_ave_target = n_ave;
  r.result = fidelity(scen, c.trials, seed, jobs);
  r.n_ave = r.result.n_ave_b;
  r.R_A = t.R_A;
  r.R_B = t.R_B;
  r.R_t = scen.threshold.R_t;
  return r;
}

inline std::uint64_t sweep_seed(const ScenarioConfig& c, std::size_t theta_index, std::size_t budget_index) {
  return derive_seed(derive_seed(c.seed, 0x5eed0000 + theta_index), budget_index);
}

inline std::vector<SweepRow> run_sweep(const ScenarioConfig& c, const std::vector<ThetaOutcome>& setups,
                                       unsigned jobs = 1) {
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < setups.size(); ++i) {
    if (!setups[i].setup) continue;
    for (std::size_t j = 0; j < c.n_ave_budgets.size(); ++j) {
      rows.push_back(sweep_point(*setups[i].setup, c.n_ave_budgets[j], c, sweep_seed(c, i, j), jobs));
    }
  }
  return rows;
}

// --- benchmark -----------------------------------------------------------

struct BudgetSearch {
  double n = std::numeric_limits<double>::quiet_NaN();
  bool flagged = false;
  std::string status = "ok";
};

/// Smallest budget (geometric bisection) at which the Monte Carlo fidelity's
/// lower 95% bound reaches `target`. All candidates share one seed.
inline BudgetSearch find_budget(const ThetaSetup& t, double target, const ScenarioConfig& c, std::uint64_t seed,
                                unsigned jobs) {
  auto meets = [&](double n) {
    const auto plan = plan_for_budget(t, n, seed);
    return fidelity(scenario_for_plan(t, plan, c), c.trials, seed, jobs).ci.lo >= target;
  };
  BudgetSearch out;
  double lo = 1.0;
  double hi = c.benchmark_max_n;
  if (!meets(hi)) {
    out.flagged = true;
    out.status = "unreachable";
    return out;
  }
  if (meets(lo)) {
    out.n = lo;
    return out;
  }
  constexpr double rel_tol = 1e-3;
  int it = 0;
  for (; it < c.benchmark_max_bisections && hi / lo > 1.0 + rel_tol; ++it) {
    const double mid = std::sqrt(lo * hi);
    (meets(mid) ? hi : lo) = mid;
  }
  out.n = hi;
  if (hi / lo > 1.0 + rel_tol) {
    out.flagged = true;
    out.status = "bisection_cap";
  }
  return out;
}

struct BenchmarkRow {
  double theta_x = 0.0;
  double n_direct_68 = 0.0;
  double n_direct_95 = 0.0;
  BudgetSearch simulated_68;
  BudgetSearch simulated_95;
  double gain_68 = 0.0;
  double gain_95 = 0.0;

  bool flagged() const { return simulated_68.flagged || simulated_95.flagged; }
};

inline std::vector<BenchmarkRow> run_benchmark(const ScenarioConfig& c, const std::vector<ThetaOutcome>& setups,
                                               unsigned jobs = 1) {
  std::vector<BenchmarkRow> rows;
  for (std::size_t i = 0; i < setups.size(); ++i) {
    if (!setups[i].setup) continue;
    const auto& t = *setups[i].setup;
    BenchmarkRow r;
    r.theta_x = t.theta_x;
    r.n_direct_68 = required_photons({c.benchmark_sigma, t.theta_x, FidelityTarget::f68()});
    r.n_direct_95 = required_photons({c.benchmark_sigma, t.theta_x, FidelityTarget::f95()});
    const auto seed = derive_seed(derive_seed(c.seed, 0xbe7c0000 + i), 0);
    r.simulated_68 = find_budget(t, 0.68, c, seed, jobs);
    r.simulated_95 = find_budget(t, 0.95, c, seed, jobs);
    r.gain_68 = r.n_direct_68 / r.simulated_68.n;
    r.gain_95 = r.n_direct_95 / r.simulated_95.n;
    rows.push_back(std::move(r));
  }
  return rows;
}

// --- reproduction --------------------------------------------------------

struct ReproduceRow {
  double theta_x = 0.0;
  double n_min_target = 0.0;
  double R_A_solved = 0.0;       // invert_n_min(n_min_target)
  double n_min_roundtrip = 0.0;  // n_min(R_A_solved)
  double n_min_model = 0.0;      // from the calibrated count model
  double leak_even = 0.0;
  double R_t = 0.0;
  SweepRow at_n_min;
  std::optional<double> reference_threshold;
  std::optional<double> reference_fidelity;
};

inline std::vector<ReproduceRow> run_reproduce(const ScenarioConfig& c, const std::vector<ThetaOutcome>& setups,
                                               unsigned jobs = 1) {
  std::vector<ReproduceRow> rows;
  for (std::size_t i = 0; i < setups.size(); ++i) {
    if (!setups[i].setup || !setups[i].setup->target_n_min) continue;
    const auto& t = *setups[i].setup;
    ReproduceRow r;
    r.theta_x = t.theta_x;
    r.n_min_target = *t.target_n_min;
    r.R_A_solved = invert_n_min(r.n_min_target);
    r.n_min_roundtrip = n_min(r.R_A_solved);
    r.n_min_model = t.N_min;
    r.leak_even = t.model.leak_even;
    r.at_n_min = sweep_point(t, r.n_min_target, c, derive_seed(derive_seed(c.seed, 0x9e9d0000 + i), 0), jobs);
    r.R_t = r.at_n_min.R_t;
    for (std::size_t k = 0; k < std::size(reference::theta_x); ++k) {
      if (std::abs(reference::theta_x[k] - t.theta_x) < 1e-9) {
        r.reference_threshold = reference::threshold[k];
        r.reference_fidelity = reference::fidelity_at_n_min[k];
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace sfclass
