#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "sfclass/error.hpp"
#include "sfclass/modes.hpp"

// Sum-frequency count model. The detected rate for one signal component is
// proportional to |∫∫ pump * signal * conj(collection)|^2, normalized to the
// aligned all-Gaussian configuration. Components of an incoherent mixture add
// in probability.

namespace sfclass {

/// Collection-mode width matched to the Gaussian x Gaussian product.
inline double matched_collection_width(double sigma_p, double sigma_s) {
  return sigma_p * sigma_s / std::sqrt(sigma_p * sigma_p + sigma_s * sigma_s);
}

struct Geometry {
  double sigma_s = 20.5;
  double sigma_p = 22.5;
  double sigma_f = matched_collection_width(22.5, 20.5);

  static Geometry with_matched_collection(double sigma_s, double sigma_p) {
    return {sigma_s, sigma_p, matched_collection_width(sigma_p, sigma_s)};
  }

  void validate() const {
    detail::require(sigma_s > 0.0 && sigma_p > 0.0 && sigma_f > 0.0,
                    "Geometry: all widths must be > 0");
  }
};

/// Pump mode: unit-norm coefficient vector over an HG basis.
class PumpProfile {
 public:
  PumpProfile(ModeBasis basis, std::vector<complex> coeffs, bool optimized = false)
      : basis_(std::move(basis)), coeffs_(std::move(coeffs)), optimized_(optimized) {
    detail::require(coeffs_.size() == basis_.size(), "PumpProfile: coefficient count does not match basis");
    detail::require(std::abs(norm() - 1.0) < 1e-12, "PumpProfile: coefficients must have unit norm");
  }

  /// Rescales `coeffs` to unit norm.
  static PumpProfile normalized(ModeBasis basis, std::vector<complex> coeffs, bool optimized = false) {
    double n = 0.0;
    for (const auto& c : coeffs) n += std::norm(c);
    if (!(n > 0.0)) throw DegenerateInput("PumpProfile: zero coefficient vector");
    n = std::sqrt(n);
    for (auto& c : coeffs) c /= n;
    return PumpProfile(std::move(basis), std::move(coeffs), optimized);
  }

  /// Fundamental Gaussian pump of width sigma_p.
  static PumpProfile gaussian(double sigma_p) {
    return PumpProfile(ModeBasis(sigma_p, {{0, 0}}), {complex(1.0)}, false);
  }

  const ModeBasis& basis() const { return basis_; }
  const std::vector<complex>& coeffs() const { return coeffs_; }
  bool optimized() const { return optimized_; }

  double norm() const {
    double n = 0.0;
    for (const auto& c : coeffs_) n += std::norm(c);
    return std::sqrt(n);
  }

 private:
  ModeBasis basis_;
  std::vector<complex> coeffs_;
  bool optimized_ = false;
};

/// Conversion, detection and imperfection parameters.
struct CountModel {
  double sigma_f = matched_collection_width(22.5, 20.5);
  double eta0 = 1e-3;             // detections per pulse, aligned Gaussian reference
  double gain_opt = 1.0;          // applied to optimized-pump rates
  double dark_per_pulse = 6e-8;   // 3 Hz dark counts at 50 MHz
  double misalign_x = 0.0;        // pump centroid error
  double leak_even = 0.0;         // spurious HG(0,0) amplitude in the pump

  void validate() const {
    detail::require(sigma_f > 0.0, "CountModel: sigma_f must be > 0");
    detail::require(eta0 >= 0.0, "CountModel: eta0 must be >= 0");
    detail::require(gain_opt > 0.0, "CountModel: gain_opt must be > 0");
    detail::require(dark_per_pulse >= 0.0, "CountModel: dark_per_pulse must be >= 0");
    detail::require(std::isfinite(misalign_x) && std::isfinite(leak_even),
                    "CountModel: imperfections must be finite");
  }
};

struct RateReport {
  double rate_signal = 0.0;
  double rate_total = 0.0;
  double eta_rel = 0.0;
};

/// Overlap of the centered Gaussian pump, centered Gaussian signal and
/// collection mode; the normalization of every efficiency.
inline double reference_amplitude(double sigma_p, double sigma_s, double sigma_f) {
  const complex v = overlap2d(hg_field(sigma_p, {0, 0}), gaussian_field(sigma_s), gaussian_field(sigma_f));
  if (!(std::abs(v) > 0.0)) throw DegenerateInput("reference overlap is zero");
  return std::abs(v);
}

/// Pump after imperfections: leak_even added to HG(0,0), renormalized.
/// Returns the mode list and coefficients; the shift is model.misalign_x.
inline std::pair<std::vector<ModeIndex>, std::vector<complex>> effective_pump_modes(
    const PumpProfile& pump, const CountModel& model) {
  std::vector<ModeIndex> idx = pump.basis().indices();
  std::vector<complex> c = pump.coeffs();
  if (model.leak_even != 0.0) {
    if (auto pos = pump.basis().position({0, 0})) {
      c[*pos] += model.leak_even;
    } else {
      idx.push_back({0, 0});
      c.push_back(model.leak_even);
    }
  }
  double n = 0.0;
  for (const auto& v : c) n += std::norm(v);
  if (!(n > 0.0)) throw DegenerateInput("effective pump vanishes");
  n = std::sqrt(n);
  for (auto& v : c) v /= n;
  return {std::move(idx), std::move(c)};
}

/// Field of a superposition of HG modes of width sigma_p shifted by shift_x.
inline Field superposition_field(double sigma_p, std::vector<ModeIndex> idx, std::vector<complex> c,
                                 double shift_x) {
  int max_l = 0;
  int max_m = 0;
  for (const auto& i : idx) {
    max_l = std::max(max_l, i.l);
    max_m = std::max(max_m, i.m);
  }
  auto eval = [=](double x, double y) {
    const double s = std::numbers::sqrt2 * sigma_p;
    const double xs = x - shift_x;
    std::vector<double> hx(static_cast<std::size_t>(max_l) + 1);
    std::vector<double> hy(static_cast<std::size_t>(max_m) + 1);
    detail::normalized_hermite_all(xs / s, hx);
    detail::normalized_hermite_all(y / s, hy);
    complex sum = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      sum += c[k] * (hx[static_cast<std::size_t>(idx[k].l)] * hy[static_cast<std::size_t>(idx[k].m)]);
    }
    const double env = std::exp(-(xs * xs + y * y) / (4.0 * sigma_p * sigma_p)) /
                       (std::sqrt(2.0 * std::numbers::pi) * sigma_p);
    return env * sum;
  };
  return {eval, {shift_x, 0.0, sigma_p}, max_l, max_m};
}

inline Field effective_pump_field(const PumpProfile& pump, const CountModel& model) {
  auto [idx, c] = effective_pump_modes(pump, model);
  return superposition_field(pump.basis().sigma_p(), std::move(idx), std::move(c), model.misalign_x);
}

/// Conversion efficiency relative to the aligned all-Gaussian reference.
/// The reference signal width is that of the state's first component.
inline double eta_rel(const PumpProfile& pump, const SignalState& state, const CountModel& model) {
  model.validate();
  const double sigma_p = pump.basis().sigma_p();
  const double sigma_s = state.components().front().psf.sigma_s;
  const double ref = reference_amplitude(sigma_p, sigma_s, model.sigma_f);
  const Field pump_f = effective_pump_field(pump, model);
  const Field coll = gaussian_field(model.sigma_f);
  double eta = 0.0;
  for (const auto& comp : state.components()) {
    eta += comp.weight * std::norm(overlap2d(pump_f, psf_field(comp.psf), coll));
  }
  return eta / (ref * ref);
}

inline RateReport rate_from_eta(double eta, bool optimized, const CountModel& model) {
  RateReport r;
  r.eta_rel = eta;
  r.rate_signal = model.eta0 * (optimized ? model.gain_opt : 1.0) * eta;
  r.rate_total = r.rate_signal + model.dark_per_pulse;
  return r;
}

inline RateReport expected_rate(const PumpProfile& pump, const SignalState& state, const CountModel& model) {
  return rate_from_eta(eta_rel(pump, state, model), pump.optimized(), model);
}

/// S = O_A / O_B for the symmetric two-source state at +/- theta_x.
inline double selectivity(const PumpProfile& pump, const CountModel& model, double theta_x, double sigma_s) {
  detail::require(theta_x > 0.0, "selectivity: theta_x must be > 0");
  const double oa = expected_rate(pump, SignalState::single(sigma_s), model).rate_total;
  const double ob = expected_rate(pump, SignalState::symmetric_pair(sigma_s, theta_x), model).rate_total;
  if (!(ob > 0.0)) throw DegenerateInput("selectivity: expected O_B is zero");
  return oa / ob;
}

/// Gain that makes the optimized-pump signal rate on `state_b` equal to the
/// Gaussian-pump signal rate.
inline double balanced_gain(const PumpProfile& optimized, const SignalState& state_b, const CountModel& model) {
  const double eg = eta_rel(PumpProfile::gaussian(optimized.basis().sigma_p()), state_b, model);
  const double eo = eta_rel(optimized, state_b, model);
  if (!(eo > 0.0)) throw DegenerateInput("balanced_gain: optimized pump does not convert the state");
  return eg / eo;
}

/// Per-mode conversion amplitudes for one basis and state, precomputed so
/// that the efficiency of any coefficient vector is a small dot product.
/// Imperfections of `model` are folded in.
class LinearResponse {
 public:
  LinearResponse(const ModeBasis& basis, const SignalState& state, const CountModel& model)
      : leak_(model.leak_even), leak_pos_(basis.position({0, 0})) {
    model.validate();
    const double sigma_p = basis.sigma_p();
    const double ref = reference_amplitude(sigma_p, state.components().front().psf.sigma_s, model.sigma_f);
    const Field coll = gaussian_field(model.sigma_f);
    for (const auto& comp : state.components()) {
      const Field sig = psf_field(comp.psf);
      std::vector<complex> amp;
      amp.reserve(basis.size());
      for (const auto& idx : basis.indices()) {
        amp.push_back(overlap2d(hg_field(sigma_p, idx, model.misalign_x), sig, coll) / ref);
      }
      weights_.push_back(comp.weight);
      amplitudes_.push_back(std::move(amp));
      leak_amplitudes_.push_back(overlap2d(hg_field(sigma_p, {0, 0}, model.misalign_x), sig, coll) / ref);
    }
  }

  /// Efficiency of the (not necessarily normalized) coefficient vector after
  /// adding the leak and renormalizing.
  double eta(std::span<const complex> coeffs) const { return eta(coeffs, leak_); }

  /// Same with the leak amplitude overridden.
  double eta(std::span<const complex> coeffs, double leak) const {
    detail::require(coeffs.size() == amplitudes_.front().size(), "LinearResponse: coefficient count mismatch");
    double norm2 = 0.0;
    for (const auto& c : coeffs) norm2 += std::norm(c);
    complex extra = 0.0;  // leak on a mode outside the basis
    if (leak != 0.0) {
      if (leak_pos_) {
        const complex c0 = coeffs[*leak_pos_];
        norm2 += std::norm(c0 + leak) - std::norm(c0);
      } else {
        extra = leak;
        norm2 += leak * leak;
      }
    }
    if (!(norm2 > 0.0)) return 0.0;
    double eta = 0.0;
    for (std::size_t k = 0; k < amplitudes_.size(); ++k) {
      complex a = 0.0;
      for (std::size_t j = 0; j < coeffs.size(); ++j) a += coeffs[j] * amplitudes_[k][j];
      if (leak_pos_ && leak != 0.0) a += leak * amplitudes_[k][*leak_pos_];
      a += extra * leak_amplitudes_[k];
      eta += weights_[k] * std::norm(a);
    }
    return eta / norm2;
  }

  const std::vector<std::vector<complex>>& amplitudes() const { return amplitudes_; }

 private:
  double leak_;
  std::optional<std::size_t> leak_pos_;
  std::vector<double> weights_;
  std::vector<std::vector<complex>> amplitudes_;
  std::vector<complex> leak_amplitudes_;
};

}  // namespace sfclass
