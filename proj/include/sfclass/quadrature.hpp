#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sfclass/error.hpp"

namespace sfclass {

/// Gauss–Hermite rule for weight exp(-u^2).
///
/// `scaled_weights[i]` is `w_i * exp(u_i^2)`, so that
/// `∫ F(u) du ≈ Σ scaled_weights[i] * F(u_i)` for integrands F that carry
/// their own Gaussian factor. Storing the scaled weights avoids the
/// underflow of the raw weights at the outer nodes.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> scaled_weights;

  std::size_t order() const { return nodes.size(); }
};

namespace detail {

// Orthonormal Hermite functions h_0..h_{n} at u, via the stable three-term
// recurrence. Returns h_n and writes h_{n-1}.
inline double hermite_function(std::size_t n, double u, double& prev) {
  double h_prev = 0.0;
  double h = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * u * u);
  for (std::size_t k = 0; k < n; ++k) {
    const double kd = static_cast<double>(k);
    const double next =
        std::sqrt(2.0 / (kd + 1.0)) * u * h - std::sqrt(kd / (kd + 1.0)) * h_prev;
    h_prev = h;
    h = next;
  }
  prev = h_prev;
  return h;
}

inline GaussHermiteRule build_gauss_hermite(std::size_t n) {
  // Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 0 ? n - 1 : 0));
  for (std::size_t k = 1; k < n; ++k) sub(static_cast<Eigen::Index>(k - 1)) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("Gauss-Hermite: tridiagonal eigensolver failed");
  }

  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.scaled_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = solver.eigenvalues()(static_cast<Eigen::Index>(i));
    // Newton polish on h_n; h_n' = sqrt(2n) h_{n-1} - u h_n.
    for (int it = 0; it < 3; ++it) {
      double hm1 = 0.0;
      const double hn = hermite_function(n, u, hm1);
      const double dh = std::sqrt(2.0 * static_cast<double>(n)) * hm1 - u * hn;
      if (dh == 0.0) break;
      u -= hn / dh;
    }
    // w_i = 1 / (n p_{n-1}(u_i)^2) for the orthonormal polynomial p; with
    // the Hermite function h = p e^{-u^2/2} this gives w_i e^{u_i^2} = 1 / (n h^2).
    double hm1 = 0.0;
    const double hn_1 = hermite_function(n - 1, u, hm1);
    rule.nodes[i] = u;
    rule.scaled_weights[i] = 1.0 / (static_cast<double>(n) * hn_1 * hn_1);
  }
  return rule;
}

}  // namespace detail

/// Cached Gauss–Hermite rule of the given order. Thread-safe.
inline const GaussHermiteRule& gauss_hermite(std::size_t order) {
  detail::require(order >= 1, "gauss_hermite: order must be >= 1");
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(detail::build_gauss_hermite(order));
  return *slot;
}

/// ∫ fn(x) dx over the real line for integrands of the form
/// polynomial(x) * exp(-precision * (x - center)^2). Exact when the
/// polynomial degree is below 2 * order.
template <class Fn>
double integrate_gaussian_envelope(Fn&& fn, double center, double precision,
                                   std::size_t order) {
  detail::require(precision > 0.0, "integrate_gaussian_envelope: precision must be > 0");
  const auto& rule = gauss_hermite(order);
  const double scale = 1.0 / std::sqrt(precision);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.order(); ++i) {
    sum += rule.scaled_weights[i] * fn(center + scale * rule.nodes[i]);
  }
  return scale * sum;
}

}  // namespace sfclass
