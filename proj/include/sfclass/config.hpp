#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfclass/error.hpp"
#include "sfclass/pump_opt.hpp"
#include "sfclass/upconv.hpp"

namespace sfclass {

/// Invalid configuration; `path` is the dotted key path of the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& msg)
      : Error(path.empty() ? msg : path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Target N_min for one separation; the even-mode leak is solved so that the
/// model's R_A reproduces it.
struct CalibrationPoint {
  double theta_x = 0.0;
  double n_min = 0.0;

  friend bool operator==(const CalibrationPoint&, const CalibrationPoint&) = default;
};

enum class ThresholdMode { planning, calibration };

struct ScenarioConfig {
  double sigma_s = 20.5;
  double sigma_p = 22.5;
  std::optional<double> sigma_f;  // empty: matched to sigma_p, sigma_s
  std::vector<double> theta_x{3.0, 5.0, 10.0};
  std::vector<int> l_list{1, 3, 5, 7};
  std::vector<int> m_list{0, 1, 2, 3, 4};

  double eta0 = 1e-3;
  double dark_per_pulse = 6e-8;
  std::optional<double> gain_opt;  // empty: balanced so E[O_B] = E[G_B]
  double leak_even = 0.0;
  double misalign_x = 0.0;

  std::vector<CalibrationPoint> selectivity_calibration{{3.0, 95.0}, {5.0, 36.0}, {10.0, 22.0}};

  OptimizerMethod method = OptimizerMethod::eigen;
  FeedbackParams feedback{};

  std::vector<double> n_ave_budgets{20, 40, 60, 110, 170, 300, 534};
  ThresholdMode threshold_mode = ThresholdMode::planning;
  std::uint64_t calibration_sessions = 100;

  double benchmark_sigma = 20.0;
  double benchmark_max_n = 1e5;
  int benchmark_max_bisections = 40;

  std::uint64_t trials = 10000;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  double collection_width() const { return sigma_f ? *sigma_f : matched_collection_width(sigma_p, sigma_s); }
  Geometry geometry() const { return {sigma_s, sigma_p, collection_width()}; }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

namespace detail {

using json = nlohmann::json;

inline std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    out = convert<T>(at(key), path(key));
  }

  template <class T>
  void read_optional(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (v.is_null()) {
      out.reset();
    } else {
      out = convert<T>(v, path(key));
    }
  }

  template <class T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(path, "expected a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      return v.get<int>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw ConfigError(path, "expected a non-negative integer");
      }
      return v.get<std::uint64_t>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
      return v.get<std::string>();
    } else {
      if (!v.is_array()) throw ConfigError(path, "expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
      }
      return out;
    }
  }

  /// Rejects keys that were never asked for.
  void done() const {
    for (const auto& [k, _] : obj_.items()) {
      if (!seen_.contains(k)) throw ConfigError(join(path_, k), "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void check(bool cond, const std::string& path, const std::string& msg) {
  if (!cond) throw ConfigError(path, msg);
}

}  // namespace detail

inline void validate(const ScenarioConfig& c) {
  using detail::check;
  check(c.sigma_s > 0.0, "geometry.sigma_s_um", "must be > 0");
  check(c.sigma_p > 0.0, "geometry.sigma_p_um", "must be > 0");
  check(!c.sigma_f || *c.sigma_f > 0.0, "geometry.sigma_f_um", "must be > 0");
  check(!c.theta_x.empty(), "theta_x_um", "must be nonempty");
  for (std::size_t i = 0; i < c.theta_x.size(); ++i) {
    check(c.theta_x[i] >= 0.0 && std::isfinite(c.theta_x[i]), "theta_x_um[" + std::to_string(i) + "]",
          "must be finite and >= 0");
  }
  check(!c.l_list.empty(), "modes.l", "must be nonempty");
  check(!c.m_list.empty(), "modes.m", "must be nonempty");
  for (std::size_t i = 0; i < c.l_list.size(); ++i) {
    check(c.l_list[i] > 0 && c.l_list[i] % 2 == 1, "modes.l[" + std::to_string(i) + "]", "must be odd");
  }
  for (std::size_t i = 0; i < c.m_list.size(); ++i) {
    check(c.m_list[i] >= 0, "modes.m[" + std::to_string(i) + "]", "must be >= 0");
  }
  check(c.eta0 > 0.0 && c.eta0 <= 1.0, "count_model.eta0", "must be in (0, 1]");
  check(c.dark_per_pulse >= 0.0 && c.dark_per_pulse < 1.0, "count_model.dark_per_pulse", "must be in [0, 1)");
  check(!c.gain_opt || *c.gain_opt > 0.0, "count_model.gain_opt", "must be > 0");
  check(c.leak_even >= 0.0 && std::isfinite(c.leak_even), "count_model.leak_even", "must be >= 0");
  check(std::isfinite(c.misalign_x), "count_model.misalign_x_um", "must be finite");
  for (std::size_t i = 0; i < c.selectivity_calibration.size(); ++i) {
    const auto p = "selectivity_calibration[" + std::to_string(i) + "]";
    check(c.selectivity_calibration[i].theta_x > 0.0, p + ".theta_x_um", "must be > 0");
    check(c.selectivity_calibration[i].n_min > 4.0, p + ".n_min", "must be > 4");
  }
  check(c.feedback.iterations >= 0, "optimizer.iterations", "must be >= 0");
  check(!c.feedback.shots || *c.feedback.shots >= 1.0, "optimizer.shots", "must be >= 1");
  check(c.feedback.a > 0.0 && c.feedback.c > 0.0 && c.feedback.A >= 0.0, "optimizer", "gains must be positive");
  check(!c.n_ave_budgets.empty(), "budgets.n_ave", "must be nonempty");
  for (std::size_t i = 0; i < c.n_ave_budgets.size(); ++i) {
    check(c.n_ave_budgets[i] > 0.0, "budgets.n_ave[" + std::to_string(i) + "]", "must be > 0");
  }
  check(c.calibration_sessions >= 1, "threshold.calibration_sessions", "must be >= 1");
  check(c.benchmark_sigma > 0.0, "benchmark.sigma_um", "must be > 0");
  check(c.benchmark_max_n > 1.0, "benchmark.max_n", "must be > 1");
  check(c.benchmark_max_bisections >= 1, "benchmark.max_bisections", "must be >= 1");
  check(c.trials >= 1, "trials", "must be >= 1");
}

inline ScenarioConfig config_from_json(const nlohmann::json& doc) {
  using detail::ObjectReader;
  ScenarioConfig c;
  {
    ObjectReader root(doc, "");
    if (root.has("geometry")) {
      ObjectReader g(root.at("geometry"), "geometry");
      g.read("sigma_s_um", c.sigma_s);
      g.read("sigma_p_um", c.sigma_p);
      g.read_optional("sigma_f_um", c.sigma_f);
      g.done();
    }
    root.read("theta_x_um", c.theta_x);
    if (root.has("modes")) {
      ObjectReader m(root.at("modes"), "modes");
      m.read("l", c.l_list);
      m.read("m", c.m_list);
      m.done();
    }
    if (root.has("count_model")) {
      ObjectReader m(root.at("count_model"), "count_model");
      m.read("eta0", c.eta0);
      m.read("dark_per_pulse", c.dark_per_pulse);
      m.read_optional("gain_opt", c.gain_opt);
      m.read("leak_even", c.leak_even);
      m.read("misalign_x_um", c.misalign_x);
      m.done();
    }
    if (root.has("selectivity_calibration")) {
      const auto& arr = root.at("selectivity_calibration");
      if (!arr.is_array()) throw ConfigError("selectivity_calibration", "expected an array");
      c.selectivity_calibration.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        ObjectReader p(arr[i], "selectivity_calibration[" + std::to_string(i) + "]");
        CalibrationPoint cp;
        p.read("theta_x_um", cp.theta_x);
        p.read("n_min", cp.n_min);
        p.done();
        c.selectivity_calibration.push_back(cp);
      }
    }
    if (root.has("optimizer")) {
      ObjectReader o(root.at("optimizer"), "optimizer");
      if (o.has("method")) {
        const auto m = ObjectReader::convert<std::string>(o.at("method"), o.path("method"));
        if (m == "eigen") {
          c.method = OptimizerMethod::eigen;
        } else if (m == "feedback") {
          c.method = OptimizerMethod::feedback;
        } else {
          throw ConfigError(o.path("method"), "expected \"eigen\" or \"feedback\"");
        }
      }
      o.read("iterations", c.feedback.iterations);
      o.read_optional("shots", c.feedback.shots);
      o.read("a", c.feedback.a);
      o.read("A", c.feedback.A);
      o.read("c", c.feedback.c);
      o.read("tolerance", c.feedback.tolerance);
      o.done();
    }
    if (root.has("budgets")) {
      ObjectReader b(root.at("budgets"), "budgets");
      b.read("n_ave", c.n_ave_budgets);
      b.done();
    }
    if (root.has("threshold")) {
      ObjectReader t(root.at("threshold"), "threshold");
      if (t.has("mode")) {
        const auto m = ObjectReader::convert<std::string>(t.at("mode"), t.path("mode"));
        if (m == "planning") {
          c.threshold_mode = ThresholdMode::planning;
        } else if (m == "calibration") {
          c.threshold_mode = ThresholdMode::calibration;
        } else {
          throw ConfigError(t.path("mode"), "expected \"planning\" or \"calibration\"");
        }
      }
      t.read("calibration_sessions", c.calibration_sessions);
      t.done();
    }
    if (root.has("benchmark")) {
      ObjectReader b(root.at("benchmark"), "benchmark");
      b.read("sigma_um", c.benchmark_sigma);
      b.read("max_n", c.benchmark_max_n);
      b.read("max_bisections", c.benchmark_max_bisections);
      b.done();
    }
    root.read("trials", c.trials);
    root.read("seed", c.seed);
    root.read("output_dir", c.output_dir);
    root.done();
  }
  validate(c);
  return c;
}

inline nlohmann::json config_to_json(const ScenarioConfig& c) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json cal = json::array();
  for (const auto& p : c.selectivity_calibration) cal.push_back({{"theta_x_um", p.theta_x}, {"n_min", p.n_min}});
  return {
      {"geometry", {{"sigma_s_um", c.sigma_s}, {"sigma_p_um", c.sigma_p}, {"sigma_f_um", opt(c.sigma_f)}}},
      {"theta_x_um", c.theta_x},
      {"modes", {{"l", c.l_list}, {"m", c.m_list}}},
      {"count_model",
       {{"eta0", c.eta0},
        {"dark_per_pulse", c.dark_per_pulse},
        {"gain_opt", opt(c.gain_opt)},
        {"leak_even", c.leak_even},
        {"misalign_x_um", c.misalign_x}}},
      {"selectivity_calibration", cal},
      {"optimizer",
       {{"method", c.method == OptimizerMethod::eigen ? "eigen" : "feedback"},
        {"iterations", c.feedback.iterations},
        {"shots", opt(c.feedback.shots)},
        {"a", c.feedback.a},
        {"A", c.feedback.A},
        {"c", c.feedback.c},
        {"tolerance", c.feedback.tolerance}}},
      {"budgets", {{"n_ave", c.n_ave_budgets}}},
      {"threshold",
       {{"mode", c.threshold_mode == ThresholdMode::planning ? "planning" : "calibration"},
        {"calibration_sessions", c.calibration_sessions}}},
      {"benchmark",
       {{"sigma_um", c.benchmark_sigma},
        {"max_n", c.benchmark_max_n},
        {"max_bisections", c.benchmark_max_bisections}}},
      {"trials", c.trials},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
  };
}

/// Applies `key.path=value` to a config document. The value is parsed as
/// JSON when possible and taken as a string otherwise.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must be key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  nlohmann::json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) throw ConfigError(key, "empty path component");
    if (!node->is_object()) throw ConfigError(key, "cannot descend into a non-object");
    if (i + 1 == parts.size()) {
      (*node)[parts[i]] = value;
    } else {
      node = &(*node)[parts[i]];
      if (node->is_null()) *node = nlohmann::json::object();
    }
  }
}

inline ScenarioConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {}) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("", "config is not valid JSON");
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

inline ScenarioConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

}  // namespace sfclass
