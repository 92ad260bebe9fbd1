#pragma once

#include <cmath>
#include <numbers>

#include "sfclass/error.hpp"
#include "sfclass/quadrature.hpp"

// Direct-detection benchmark: Fisher information of the intensity profile
// for the separation, the Cramér–Rao variance, and the photon number needed
// to reach a variance target.

namespace sfclass {

/// Variance target Var[theta_x] = k * theta_x^2 tied to a fidelity level
/// under a normal estimator distribution.
struct FidelityTarget {
  double fidelity = 0.68;
  double k = 4.8;

  static FidelityTarget f68() { return {0.68, 4.8}; }
  static FidelityTarget f95() { return {0.95, 0.4}; }
  static FidelityTarget custom(double fidelity, double k) {
    detail::require(k > 0.0, "FidelityTarget: k must be > 0");
    return {fidelity, k};
  }
};

struct DirectDetectionSpec {
  double sigma = 20.0;   // intensity-profile width (um)
  double theta_x = 5.0;  // separation (um)
  FidelityTarget target = FidelityTarget::f68();

  void validate() const {
    detail::require(sigma > 0.0 && std::isfinite(sigma), "DirectDetectionSpec: sigma must be > 0");
    detail::require(theta_x >= 0.0 && std::isfinite(theta_x), "DirectDetectionSpec: theta_x must be >= 0");
  }

  /// The small-separation expansion behind the information formula holds
  /// for 0 < theta_x < sigma.
  bool within_validity() const { return theta_x > 0.0 && theta_x < sigma; }
};

/// 1-D intensity I(x) = |psi(x)|^2, a normalized Gaussian of variance sigma^2.
inline double intensity(double sigma, double x) {
  return std::exp(-x * x / (2.0 * sigma * sigma)) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

inline double intensity_second_derivative(double sigma, double x) {
  const double s2 = sigma * sigma;
  return intensity(sigma, x) * (x * x / (s2 * s2) - 1.0 / s2);
}

/// ∫ [I''(x)]^2 / I(x) dx by Gauss–Hermite quadrature over the envelope of I.
inline double curvature_integral(double sigma) {
  detail::require(sigma > 0.0, "curvature_integral: sigma must be > 0");
  auto integrand = [sigma](double x) {
    const double i = intensity(sigma, x);
    if (i == 0.0) return 0.0;
    const double d2 = intensity_second_derivative(sigma, x);
    return d2 * d2 / i;
  };
  return integrate_gaussian_envelope(integrand, 0.0, 1.0 / (2.0 * sigma * sigma), 32);
}

/// F = N theta_x^2 / 16 * ∫ [I'']^2 / I, evaluated numerically.
inline double fisher_info_numeric(const DirectDetectionSpec& spec, double N) {
  spec.validate();
  detail::require(N > 0.0, "fisher_info: N must be > 0");
  return N * spec.theta_x * spec.theta_x / 16.0 * curvature_integral(spec.sigma);
}

/// Closed form N theta_x^2 / (8 sigma^4).
inline double fisher_info(const DirectDetectionSpec& spec, double N) {
  spec.validate();
  detail::require(N > 0.0, "fisher_info: N must be > 0");
  const double s2 = spec.sigma * spec.sigma;
  return N * spec.theta_x * spec.theta_x / (8.0 * s2 * s2);
}

/// Var[theta_x] >= 8 sigma^4 / (theta_x^2 N).
inline double crlb_variance(const DirectDetectionSpec& spec, double N) {
  spec.validate();
  detail::require(N > 0.0 && spec.theta_x > 0.0, "crlb_variance: N and theta_x must be > 0");
  const double s2 = spec.sigma * spec.sigma;
  return 8.0 * s2 * s2 / (spec.theta_x * spec.theta_x * N);
}

/// N solving 8 sigma^4 / (theta_x^2 N) = k theta_x^2.
inline double required_photons(const DirectDetectionSpec& spec) {
  spec.validate();
  detail::require(spec.theta_x > 0.0, "required_photons: theta_x must be > 0");
  detail::require(spec.target.k > 0.0, "required_photons: k must be > 0");
  const double s2 = spec.sigma * spec.sigma;
  const double t2 = spec.theta_x * spec.theta_x;
  return 8.0 * s2 * s2 / (spec.target.k * t2 * t2);
}

inline double efficiency_gain(double experimental_N, const DirectDetectionSpec& spec) {
  detail::require(experimental_N > 0.0, "efficiency_gain: experimental N must be > 0");
  return required_photons(spec) / experimental_N;
}

}  // namespace sfclass
