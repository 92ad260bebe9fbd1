#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sfclass/error.hpp"
#include "sfclass/modes.hpp"
#include "sfclass/photon_stats.hpp"
#include "sfclass/upconv.hpp"

// Pump-mode optimization over odd-l HG superpositions. Odd x-parity makes
// the centered single-source overlap vanish identically, so maximizing the
// two-source conversion is the whole objective.

namespace sfclass {

enum class OptimizerMethod { eigen, feedback };

/// Simultaneous-perturbation stochastic ascent settings.
struct FeedbackParams {
  int iterations = 500;
  /// Expected counts per evaluation at the optimal pump, i.e. with the pump
  /// power rebalanced so the optimum reaches this count. Empty means
  /// noiseless (exact) evaluation.
  std::optional<double> shots = 1e4;
  double a = 0.2;
  double A = 10.0;
  double c = 0.1;
  double alpha = 0.602;
  double gamma = 0.101;
  /// Converged once the coefficient update stays below this for `stall_window` steps.
  double tolerance = 1e-7;
  int stall_window = 10;
  std::uint64_t seed = 1;

  friend bool operator==(const FeedbackParams&, const FeedbackParams&) = default;
};

struct OptimizationSpec {
  std::vector<int> l_list{1, 3, 5, 7};
  std::vector<int> m_list{0, 1, 2, 3, 4};
  double theta_x = 5.0;
  Geometry geometry{};
  OptimizerMethod method = OptimizerMethod::eigen;
  FeedbackParams feedback{};

  void validate() const {
    geometry.validate();
    detail::require(!l_list.empty() && !m_list.empty(), "OptimizationSpec: mode lists must be nonempty");
    for (int l : l_list) detail::require(l > 0 && l % 2 == 1, "OptimizationSpec: every l must be odd");
    for (int m : m_list) detail::require(m >= 0, "OptimizationSpec: every m must be >= 0");
    detail::require(std::isfinite(theta_x) && theta_x >= 0.0, "OptimizationSpec: theta_x must be >= 0");
  }

  ModeBasis basis() const { return ModeBasis::from_lists(geometry.sigma_p, l_list, m_list); }
};

struct OptimizationResult {
  PumpProfile pump;
  double objective = 0.0;      // eta_rel on the two-source state, ideal model
  std::vector<double> trace;   // measured objective per feedback iteration
  bool converged = true;
  int iterations = 0;
};

/// kappa_j = overlap(Phi_j, psi(x - theta_x, y), collection) / reference amplitude,
/// so that eta_rel on psi(x - theta_x) of coefficients c is |Σ c_j kappa_j|^2.
inline std::vector<double> overlap_vector(const OptimizationSpec& spec) {
  spec.validate();
  const auto basis = spec.basis();
  const auto& g = spec.geometry;
  const double ref = reference_amplitude(g.sigma_p, g.sigma_s, g.sigma_f);
  const Field sig = psf_field({g.sigma_s, spec.theta_x, 0.0});
  const Field coll = gaussian_field(g.sigma_f);
  std::vector<double> kappa;
  kappa.reserve(basis.size());
  for (const auto& idx : basis.indices()) {
    const complex v = overlap2d(hg_field(g.sigma_p, idx), sig, coll) / ref;
    if (std::abs(v.imag()) > 1e-12) throw Error("overlap_vector: non-real overlap for real geometry");
    kappa.push_back(v.real());
  }
  return kappa;
}

namespace detail {

inline double ideal_objective(const std::vector<double>& kappa, const std::vector<complex>& c) {
  complex a = 0.0;
  double n2 = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    a += c[j] * kappa[j];
    n2 += std::norm(c[j]);
  }
  return n2 > 0.0 ? std::norm(a) / n2 : 0.0;
}

// Global phase chosen so the first non-negligible coefficient is positive real.
inline void canonicalize_phase(std::vector<complex>& c) {
  for (const auto& v : c) {
    if (std::abs(v) > 1e-12) {
      const complex phase = std::conj(v) / std::abs(v);
      for (auto& x : c) x *= phase;
      return;
    }
  }
}

}  // namespace detail

/// Principal eigenvector of M = 1/2 (a+ a+^H + a- a-^H), a± = conj(kappa±),
/// which maximizes the mixture efficiency over unit vectors in the basis.
inline OptimizationResult optimize_eigen(const OptimizationSpec& spec) {
  const auto kappa = overlap_vector(spec);
  const auto n = static_cast<Eigen::Index>(kappa.size());
  // Odd-l modes flip sign under x -> -x, so kappa for the -theta component is -kappa.
  Eigen::VectorXcd a_plus(n);
  for (Eigen::Index j = 0; j < n; ++j) a_plus(j) = std::conj(complex(kappa[static_cast<std::size_t>(j)]));
  const Eigen::VectorXcd a_minus = -a_plus;
  const Eigen::MatrixXcd M = 0.5 * (a_plus * a_plus.adjoint() + a_minus * a_minus.adjoint());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(M);
  if (solver.info() != Eigen::Success) throw ConvergenceError("optimize_eigen: eigensolver failed");
  const double top = solver.eigenvalues()(n - 1);
  if (!(top > 1e-24)) {
    throw DegenerateInput("optimize_eigen: overlap vector vanishes (theta_x = 0?)");
  }
  std::vector<complex> c(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) c[static_cast<std::size_t>(j)] = solver.eigenvectors()(j, n - 1);
  detail::canonicalize_phase(c);

  auto pump = PumpProfile::normalized(spec.basis(), std::move(c), true);
  const double objective = detail::ideal_objective(kappa, pump.coeffs());
  return {std::move(pump), objective, {objective}, true, 0};
}

/// Emulated adaptive feedback: SPSA on the logarithm of the measured
/// optimized-pump count rate for the two-source state, with Poisson-sampled
/// measurements through `model`. Coefficients stay real; the overlaps are
/// real for this geometry, so the optimum is real up to a global phase.
inline OptimizationResult optimize_feedback(const OptimizationSpec& spec, const CountModel& model) {
  spec.validate();
  const auto& fb = spec.feedback;
  detail::require(fb.iterations >= 0, "optimize_feedback: iterations must be >= 0");
  detail::require(!fb.shots || *fb.shots >= 1.0, "optimize_feedback: shot budget must be >= 1");

  const auto basis = spec.basis();
  const auto kappa = overlap_vector(spec);
  const LinearResponse response(
      basis, SignalState::symmetric_pair(spec.geometry.sigma_s, spec.theta_x), model);
  const double background = model.eta0 > 0.0 ? model.dark_per_pulse / model.eta0 : 0.0;
  const std::size_t n = basis.size();
  double peak = 0.0;
  for (double v : kappa) peak += v * v;
  if (!(peak > 1e-24)) throw DegenerateInput("optimize_feedback: overlap vector vanishes (theta_x = 0?)");
  const double counts_per_eta = fb.shots ? *fb.shots / peak : 0.0;

  Rng rng(fb.seed);
  auto measure = [&](const std::vector<double>& x) {
    std::vector<complex> c(x.begin(), x.end());
    const double expected = response.eta(c) + background;
    if (!fb.shots) return expected;
    return static_cast<double>(sample_poisson(rng, expected * counts_per_eta)) / counts_per_eta;
  };
  auto normalize = [](std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    s = std::sqrt(s);
    if (s > 0.0)
      for (double& v : x) v /= s;
  };

  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> best = x;
  double best_measured = -1.0;
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(fb.iterations));
  std::vector<int> delta(n);
  std::vector<double> plus(n), minus(n);
  int quiet = 0;
  bool converged = false;
  int k = 0;
  for (; k < fb.iterations; ++k) {
    const double ak = fb.a / std::pow(k + 1 + fb.A, fb.alpha);
    const double ck = fb.c / std::pow(k + 1, fb.gamma);
    for (std::size_t j = 0; j < n; ++j) {
      delta[j] = rng.sign();
      plus[j] = x[j] + ck * delta[j];
      minus[j] = x[j] - ck * delta[j];
    }
    normalize(plus);
    normalize(minus);
    const double yp = measure(plus);
    const double ym = measure(minus);
    const double mean = 0.5 * (yp + ym);
    trace.push_back(mean);
    // Noisy runs rank iterates by the measured mean around them; noiseless
    // runs by the exact value at the iterate.
    const double score = fb.shots ? mean : measure(x);
    if (score > best_measured) {
      best_measured = score;
      best = x;
    }
    if (!(mean > 0.0)) continue;
    const double g = (yp - ym) / (2.0 * ck * mean);
    std::vector<double> next(n);
    for (std::size_t j = 0; j < n; ++j) next[j] = x[j] + ak * g / delta[j];
    normalize(next);
    double step = 0.0;
    for (std::size_t j = 0; j < n; ++j) step += (next[j] - x[j]) * (next[j] - x[j]);
    x = std::move(next);
    quiet = std::sqrt(step) < fb.tolerance ? quiet + 1 : 0;
    if (quiet >= fb.stall_window) {
      converged = true;
      ++k;
      break;
    }
  }
  if (!fb.shots && measure(x) > best_measured) best = x;

  std::vector<complex> c(best.begin(), best.end());
  detail::canonicalize_phase(c);
  auto pump = PumpProfile::normalized(basis, std::move(c), true);
  const double objective = detail::ideal_objective(kappa, pump.coeffs());
  return {std::move(pump), objective, std::move(trace), converged, k};
}

inline OptimizationResult optimize(const OptimizationSpec& spec, const CountModel& model = {}) {
  return spec.method == OptimizerMethod::eigen ? optimize_eigen(spec) : optimize_feedback(spec, model);
}

}  // namespace sfclass
