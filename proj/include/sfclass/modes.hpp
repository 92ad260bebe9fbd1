#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfclass/error.hpp"
#include "sfclass/quadrature.hpp"

// Hermite–Gaussian mode algebra. All lengths are micrometers.

namespace sfclass {

using complex = std::complex<double>;

struct ModeIndex {
  int l = 0;  // x-order
  int m = 0;  // y-order

  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
  friend auto operator<=>(const ModeIndex&, const ModeIndex&) = default;
};

inline std::string to_string(const ModeIndex& idx) {
  return "(" + std::to_string(idx.l) + "," + std::to_string(idx.m) + ")";
}

/// Gaussian point spread function
/// psi(x, y) = (1 / (2 pi sigma_s^2))^{1/2} exp(-((x-cx)^2 + (y-cy)^2) / (4 sigma_s^2)).
struct GaussianPSF {
  double sigma_s = 1.0;
  double center_x = 0.0;
  double center_y = 0.0;
};

/// Truncated HG basis of width sigma_p. Ordering is row-major over the l-list
/// then the m-list: (l0,m0), (l0,m1), ..., (l1,m0), ...
class ModeBasis {
 public:
  ModeBasis(double sigma_p, std::vector<ModeIndex> indices)
      : sigma_p_(sigma_p), indices_(std::move(indices)) {
    detail::require(sigma_p_ > 0.0, "ModeBasis: sigma_p must be > 0");
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      detail::require(indices_[i].l >= 0 && indices_[i].m >= 0,
                      "ModeBasis: mode orders must be non-negative");
      for (std::size_t j = 0; j < i; ++j) {
        detail::require(!(indices_[i] == indices_[j]),
                        "ModeBasis: duplicate mode " + to_string(indices_[i]));
      }
    }
  }

  static ModeBasis from_lists(double sigma_p, std::span<const int> l_list,
                              std::span<const int> m_list) {
    std::vector<ModeIndex> idx;
    idx.reserve(l_list.size() * m_list.size());
    for (int l : l_list)
      for (int m : m_list) idx.push_back({l, m});
    return ModeBasis(sigma_p, std::move(idx));
  }

  double sigma_p() const { return sigma_p_; }
  const std::vector<ModeIndex>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }

  std::optional<std::size_t> position(const ModeIndex& idx) const {
    auto it = std::find(indices_.begin(), indices_.end(), idx);
    if (it == indices_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - indices_.begin());
  }

  int max_l() const {
    int v = 0;
    for (const auto& i : indices_) v = std::max(v, i.l);
    return v;
  }
  int max_m() const {
    int v = 0;
    for (const auto& i : indices_) v = std::max(v, i.m);
    return v;
  }

 private:
  double sigma_p_;
  std::vector<ModeIndex> indices_;
};

struct SignalComponent {
  double weight = 1.0;
  GaussianPSF psf;
};

/// Incoherent mixture of displaced Gaussian PSFs.
class SignalState {
 public:
  explicit SignalState(std::vector<SignalComponent> components)
      : components_(std::move(components)) {
    detail::require(!components_.empty(), "SignalState: at least one component required");
    double total = 0.0;
    for (const auto& c : components_) {
      detail::require(c.weight > 0.0, "SignalState: weights must be > 0");
      detail::require(c.psf.sigma_s > 0.0, "SignalState: sigma_s must be > 0");
      total += c.weight;
    }
    detail::require(std::abs(total - 1.0) < 1e-12, "SignalState: weights must sum to 1");
  }

  /// Case A: one source at the centroid.
  static SignalState single(double sigma_s, double center_x = 0.0) {
    return SignalState(std::vector<SignalComponent>{{1.0, {sigma_s, center_x, 0.0}}});
  }

  /// Case B: two equal incoherent sources at +/- theta_x.
  static SignalState symmetric_pair(double sigma_s, double theta_x) {
    return SignalState(
        std::vector<SignalComponent>{{0.5, {sigma_s, -theta_x, 0.0}}, {0.5, {sigma_s, theta_x, 0.0}}});
  }

  /// Case B as realized on the bench: a single source displaced one way.
  static SignalState one_sided(double sigma_s, double theta_x) {
    return single(sigma_s, theta_x);
  }

  const std::vector<SignalComponent>& components() const { return components_; }

 private:
  std::vector<SignalComponent> components_;
};

namespace detail {

// Fills out[k] = H_k(u) / sqrt(2^k k!) for k = 0..out.size()-1.
inline void normalized_hermite_all(double u, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() > 1) out[1] = std::numbers::sqrt2 * u;
  for (std::size_t k = 1; k + 1 < out.size(); ++k) {
    const double kd = static_cast<double>(k);
    out[k + 1] = std::sqrt(2.0 / (kd + 1.0)) * u * out[k] - std::sqrt(kd / (kd + 1.0)) * out[k - 1];
  }
}

}  // namespace detail

/// H_n(u) / sqrt(2^n n!), three-term recurrence.
inline double normalized_hermite(int n, double u) {
  detail::require(n >= 0, "normalized_hermite: order must be >= 0");
  double prev = 0.0;
  double cur = 1.0;
  for (int k = 0; k < n; ++k) {
    const double kd = k;
    const double next = std::sqrt(2.0 / (kd + 1.0)) * u * cur - std::sqrt(kd / (kd + 1.0)) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Normalized HG amplitude Phi_lm of width sigma_p at (x, y).
inline double eval_hg(double sigma_p, const ModeIndex& idx, double x, double y) {
  const double s = std::numbers::sqrt2 * sigma_p;
  const double pref = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma_p);
  return pref * normalized_hermite(idx.l, x / s) * normalized_hermite(idx.m, y / s) *
         std::exp(-(x * x + y * y) / (4.0 * sigma_p * sigma_p));
}

inline double eval_hg(const ModeBasis& basis, const ModeIndex& idx, double x, double y) {
  return eval_hg(basis.sigma_p(), idx, x, y);
}

inline double eval_psf(const GaussianPSF& psf, double x, double y) {
  const double dx = x - psf.center_x;
  const double dy = y - psf.center_y;
  const double s2 = psf.sigma_s * psf.sigma_s;
  return std::exp(-(dx * dx + dy * dy) / (4.0 * s2)) / (std::sqrt(2.0 * std::numbers::pi) * psf.sigma_s);
}

// --- overlap integration -------------------------------------------------

/// Gaussian envelope of a field: |f| ~ poly * exp(-((x-cx)^2+(y-cy)^2) / (4 width^2)).
/// An infinite width denotes a flat (non-decaying) factor.
struct Envelope {
  double center_x = 0.0;
  double center_y = 0.0;
  double width = std::numeric_limits<double>::infinity();

  double precision() const { return std::isinf(width) ? 0.0 : 1.0 / (4.0 * width * width); }
};

/// A complex scalar field together with the envelope and polynomial degree
/// the quadrature needs to integrate it exactly.
struct Field {
  std::function<complex(double, double)> eval;
  Envelope envelope;
  int degree_x = 0;
  int degree_y = 0;
};

inline Field hg_field(double sigma_p, ModeIndex idx, double shift_x = 0.0, double shift_y = 0.0) {
  return {[=](double x, double y) { return complex(eval_hg(sigma_p, idx, x - shift_x, y - shift_y)); },
          {shift_x, shift_y, sigma_p},
          idx.l,
          idx.m};
}

inline Field psf_field(const GaussianPSF& psf) {
  return {[=](double x, double y) { return complex(eval_psf(psf, x, y)); },
          {psf.center_x, psf.center_y, psf.sigma_s},
          0,
          0};
}

/// Centered Gaussian of the PSF form; used for collection modes.
inline Field gaussian_field(double width) { return psf_field({width, 0.0, 0.0}); }

inline Field constant_field(complex value = 1.0) {
  return {[=](double, double) { return value; }, {}, 0, 0};
}

struct OverlapOptions {
  std::size_t min_order = 64;
  std::size_t refinement_step = 16;
  double rtol = 1e-10;
  double atol = 1e-13;  // relative to the sum of |integrand| samples
};

namespace detail {

struct OverlapSum {
  complex value;
  double abs_sum;
};

inline OverlapSum overlap_at_order(const Field& f, const Field& g, const Field& h,
                                   std::size_t order, double cx, double cy, double scale) {
  const auto& rule = gauss_hermite(order);
  const std::size_t n = rule.order();
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = cx + scale * rule.nodes[i];
  complex sum = 0.0;
  double abs_sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double y = cy + scale * rule.nodes[j];
    complex row = 0.0;
    double abs_row = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const complex v = f.eval(xs[i], y) * g.eval(xs[i], y) * std::conj(h.eval(xs[i], y));
      row += rule.scaled_weights[i] * v;
      abs_row += rule.scaled_weights[i] * std::abs(v);
    }
    sum += rule.scaled_weights[j] * row;
    abs_sum += rule.scaled_weights[j] * abs_row;
  }
  return {scale * scale * sum, scale * scale * abs_sum};
}

}  // namespace detail

/// Quadrature order used for a triple product of the given fields.
inline std::size_t overlap_order(const Field& f, const Field& g, const Field& h,
                                 const OverlapOptions& opt = {}) {
  const int degree =
      f.degree_x + f.degree_y + g.degree_x + g.degree_y + h.degree_x + h.degree_y;
  return std::max<std::size_t>(opt.min_order, 4 * static_cast<std::size_t>(degree) + 32);
}

/// ∫∫ f(x,y) g(x,y) conj(h(x,y)) dx dy.
///
/// Gauss–Hermite product rule in coordinates centered and scaled to the
/// combined Gaussian envelope of the three factors, which makes the rule
/// exact for polynomial-times-Gaussian integrands. The result is accepted
/// only if a refined rule agrees; otherwise ConvergenceError is thrown.
inline complex overlap2d(const Field& f, const Field& g, const Field& h,
                         const OverlapOptions& opt = {}) {
  double precision = 0.0;
  double wx = 0.0;
  double wy = 0.0;
  for (const Field* fld : {&f, &g, &h}) {
    const double p = fld->envelope.precision();
    precision += p;
    wx += p * fld->envelope.center_x;
    wy += p * fld->envelope.center_y;
  }
  detail::require(precision > 0.0, "overlap2d: integrand has no decaying Gaussian envelope");
  const double cx = wx / precision;
  const double cy = wy / precision;
  const double scale = 1.0 / std::sqrt(precision);

  const std::size_t order = overlap_order(f, g, h, opt);
  const auto coarse = detail::overlap_at_order(f, g, h, order, cx, cy, scale);
  const auto fine = detail::overlap_at_order(f, g, h, order + opt.refinement_step, cx, cy, scale);
  const double diff = std::abs(fine.value - coarse.value);
  if (!(diff <= opt.rtol * std::abs(fine.value) + opt.atol * fine.abs_sum)) {
    throw ConvergenceError("overlap2d: quadrature did not stabilize (|delta| = " +
                           std::to_string(diff) + ")");
  }
  return fine.value;
}

}  // namespace sfclass
