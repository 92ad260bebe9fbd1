#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfclass/config.hpp"
#include "sfclass/pipeline.hpp"

namespace sfclass {

inline constexpr const char* kRunSchema = "sfclass.run/1";
inline constexpr const char* kSweepSchema = "sfclass.sweep/1";
inline constexpr const char* kBenchmarkSchema = "sfclass.benchmark/1";
inline constexpr const char* kOptimizeSchema = "sfclass.optimize/1";
inline constexpr const char* kReproduceSchema = "sfclass.reproduce/1";

/// Shortest round-trippable decimal for CSV cells; "nan" for NaN.
inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "# schema: " << kSweepSchema << "\n";
  out << "theta_x_um,n_ave,fidelity,ci_lo,ci_hi,R_A,R_B,R_t\n";
  for (const auto& r : rows) {
    out << fmt_num(r.theta_x) << ',' << fmt_num(r.n_ave) << ',' << fmt_num(r.result.fidelity) << ','
        << fmt_num(r.result.ci.lo) << ',' << fmt_num(r.result.ci.hi) << ',' << fmt_num(r.R_A) << ','
        << fmt_num(r.R_B) << ',' << fmt_num(r.R_t) << '\n';
  }
}

inline void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << "# schema: " << kBenchmarkSchema << "\n";
  out << "theta_x_um,n_direct_68,n_direct_95,n_simulated_68,n_simulated_95,gain_68,gain_95,status\n";
  for (const auto& r : rows) {
    std::string status = "ok";
    if (r.simulated_68.flagged) status = "68:" + r.simulated_68.status;
    if (r.simulated_95.flagged) status = (status == "ok" ? "" : status + ";") + "95:" + r.simulated_95.status;
    out << fmt_num(r.theta_x) << ',' << fmt_num(r.n_direct_68) << ',' << fmt_num(r.n_direct_95) << ','
        << fmt_num(r.simulated_68.n) << ',' << fmt_num(r.simulated_95.n) << ',' << fmt_num(r.gain_68) << ','
        << fmt_num(r.gain_95) << ',' << status << '\n';
  }
}

inline void write_optimize_csv(std::ostream& out, const std::vector<ThetaOutcome>& setups) {
  out << "# schema: " << kOptimizeSchema << "\n";
  out << "theta_x_um,l,m,coeff_re,coeff_im,objective,eigen_objective\n";
  for (const auto& o : setups) {
    if (!o.setup) continue;
    const auto& opt = o.setup->optimization;
    const auto& idx = opt.pump.basis().indices();
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out << fmt_num(o.theta_x) << ',' << idx[j].l << ',' << idx[j].m << ',' << fmt_num(opt.pump.coeffs()[j].real())
          << ',' << fmt_num(opt.pump.coeffs()[j].imag()) << ',' << fmt_num(opt.objective) << ','
          << fmt_num(o.setup->eigen_objective) << '\n';
    }
  }
}

inline void write_reproduce_csv(std::ostream& out, const std::vector<ReproduceRow>& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt_num(*v) : std::string("nan"); };
  out << "# schema: " << kReproduceSchema << "\n";
  out << "theta_x_um,n_min_target,R_A_solved,n_min_roundtrip,leak_even,R_t,R_t_ref,fidelity,ci_lo,ci_hi,"
         "fidelity_ref\n";
  for (const auto& r : rows) {
    out << fmt_num(r.theta_x) << ',' << fmt_num(r.n_min_target) << ',' << fmt_num(r.R_A_solved) << ','
        << fmt_num(r.n_min_roundtrip) << ',' << fmt_num(r.leak_even) << ',' << fmt_num(r.R_t) << ','
        << opt(r.reference_threshold) << ',' << fmt_num(r.at_n_min.result.fidelity) << ','
        << fmt_num(r.at_n_min.result.ci.lo) << ',' << fmt_num(r.at_n_min.result.ci.hi) << ','
        << opt(r.reference_fidelity) << '\n';
  }
}

// --- run.json ------------------------------------------------------------

namespace detail {

inline nlohmann::json num_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json theta_json(const ThetaOutcome& o) {
  using nlohmann::json;
  json j{{"theta_x_um", o.theta_x}};
  if (!o.setup) {
    j["status"] = "error";
    j["error"] = o.error;
    return j;
  }
  const auto& t = *o.setup;
  json coeffs = json::array();
  const auto& idx = t.optimization.pump.basis().indices();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    coeffs.push_back({{"l", idx[k].l},
                      {"m", idx[k].m},
                      {"re", t.optimization.pump.coeffs()[k].real()},
                      {"im", t.optimization.pump.coeffs()[k].imag()}});
  }
  j["status"] = "ok";
  j["optimizer"] = {{"objective", t.optimization.objective},
                    {"eigen_objective", t.eigen_objective},
                    {"converged", t.optimization.converged},
                    {"iterations", t.optimization.iterations},
                    {"coefficients", coeffs}};
  j["count_model"] = {{"sigma_f_um", t.model.sigma_f},         {"eta0", t.model.eta0},
                      {"gain_opt", t.model.gain_opt},          {"dark_per_pulse", t.model.dark_per_pulse},
                      {"leak_even", t.model.leak_even},        {"misalign_x_um", t.model.misalign_x}};
  j["rates_per_pulse"] = {{"G_A", t.rate_g_a}, {"O_A", t.rate_o_a}, {"G_B", t.rate_g_b}, {"O_B", t.rate_o_b}};
  j["S"] = t.selectivity;
  j["R_A"] = t.R_A;
  j["R_B"] = t.R_B;
  j["N_min"] = num_or_null(t.N_min);
  j["target_n_min"] = t.target_n_min ? json(*t.target_n_min) : json(nullptr);
  return j;
}

inline nlohmann::json fidelity_point(const SweepRow& r) {
  return {{"n_ave_target", r.n_ave_target}, {"n_ave", r.n_ave},         {"fidelity", r.result.fidelity},
          {"ci_lo", r.result.ci.lo},        {"ci_hi", r.result.ci.hi},  {"R_t", r.R_t},
          {"inconclusive", r.result.inconclusive}};
}

}  // namespace detail

/// RunRecord. Everything except "metadata" is a deterministic function of
/// the config.
struct RunRecord {
  std::string command;
  ScenarioConfig config;
  std::vector<ThetaOutcome> setups;
  std::vector<SweepRow> sweep;
  std::vector<BenchmarkRow> benchmark;
  std::vector<ReproduceRow> reproduce;
  double wall_clock_seconds = 0.0;

  nlohmann::json payload() const {
    using nlohmann::json;
    json results = json::array();
    for (const auto& o : setups) {
      json j = detail::theta_json(o);
      json curve = json::array();
      for (const auto& r : sweep) {
        if (r.theta_x == o.theta_x) curve.push_back(detail::fidelity_point(r));
      }
      if (!curve.empty()) j["fidelity_curve"] = curve;
      for (const auto& b : benchmark) {
        if (b.theta_x != o.theta_x) continue;
        j["benchmark"] = {{"n_direct_68", b.n_direct_68},
                          {"n_direct_95", b.n_direct_95},
                          {"n_simulated_68", detail::num_or_null(b.simulated_68.n)},
                          {"n_simulated_95", detail::num_or_null(b.simulated_95.n)},
                          {"status_68", b.simulated_68.status},
                          {"status_95", b.simulated_95.status}};
      }
      for (const auto& r : reproduce) {
        if (r.theta_x != o.theta_x) continue;
        j["reproduce"] = {{"n_min_target", r.n_min_target},
                          {"R_A_solved", r.R_A_solved},
                          {"n_min_roundtrip", r.n_min_roundtrip},
                          {"R_t", r.R_t},
                          {"R_t_ref", r.reference_threshold ? json(*r.reference_threshold) : json(nullptr)},
                          {"fidelity_at_n_min", detail::fidelity_point(r.at_n_min)},
                          {"fidelity_ref", r.reference_fidelity ? json(*r.reference_fidelity) : json(nullptr)}};
      }
      results.push_back(std::move(j));
    }
    return {{"schema", kRunSchema}, {"command", command}, {"config", config_to_json(config)}, {"results", results}};
  }

  nlohmann::json to_json() const {
    auto j = payload();
    j["metadata"] = {{"wall_clock_seconds", wall_clock_seconds}};
    return j;
  }
};

// --- SVG -----------------------------------------------------------------

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool markers_only = false;
};

/// Minimal line chart. Axes can be logarithmic.
inline std::string svg_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                             const std::vector<Series>& series, bool log_x, bool log_y) {
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 55;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y) || (log_x && x <= 0) || (log_y && y <= 0)) continue;
      xmin = std::min(xmin, tx(x));
      xmax = std::max(xmax, tx(x));
      ymin = std::min(ymin, ty(y));
      ymax = std::max(ymax, ty(y));
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) { return L + (tx(x) - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (ty(y) - ymin) / (ymax - ymin) * (H - T - B); };
  static const char* colors[] = {"#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xmin + (xmax - xmin) * k / 4.0;
    const double fy = ymin + (ymax - ymin) * k / 4.0;
    const double vx = log_x ? std::pow(10.0, fx) : fx;
    const double vy = log_y ? std::pow(10.0, fy) : fy;
    o << "<text x=\"" << px(vx) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << fmt_num(std::round(vx * 1000) / 1000) << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(vy) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
      << fmt_num(std::round(vy * 1000) / 1000) << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << xlabel << "</text>\n";
  o << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\" "
    << "font-size=\"12\">" << ylabel << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* col = colors[i % std::size(colors)];
    const auto& s = series[i];
    std::ostringstream path;
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y) || (log_x && x <= 0) || (log_y && y <= 0)) continue;
      path << px(x) << ',' << py(y) << ' ';
      o << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    }
    if (!s.markers_only) {
      o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"" << path.str()
        << "\"/>\n";
    }
    o << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (i + 1) << "\" font-size=\"12\" fill=\"" << col
      << "\">" << s.label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

inline std::string sweep_svg(const std::vector<SweepRow>& rows) {
  std::map<double, Series> by_theta;
  for (const auto& r : rows) {
    auto& s = by_theta[r.theta_x];
    s.label = "theta_x = " + fmt_num(r.theta_x) + " um";
    s.points.emplace_back(r.n_ave, r.result.fidelity);
  }
  std::vector<Series> series;
  for (auto& [_, s] : by_theta) series.push_back(std::move(s));
  return svg_chart("Fidelity vs detected photons", "N_ave", "fidelity", series, true, false);
}

inline std::string benchmark_svg(const std::vector<BenchmarkRow>& rows, bool f95) {
  Series direct{"direct detection", {}, false};
  Series sim{"mode-selective (MC)", {}, true};
  for (const auto& r : rows) {
    direct.points.emplace_back(r.theta_x, f95 ? r.n_direct_95 : r.n_direct_68);
    sim.points.emplace_back(r.theta_x, f95 ? r.simulated_95.n : r.simulated_68.n);
  }
  return svg_chart(std::string("Required photons for ") + (f95 ? "95%" : "68%") + " fidelity", "theta_x (um)",
                   "photons", {direct, sim}, false, true);
}

}  // namespace sfclass
