// Command-line front-end: optimize, sweep, benchmark, reproduce.
//
// Exit codes: 0 success, 2 config error, 3 numerical non-convergence,
// 4 partial results.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "sfclass/config.hpp"
#include "sfclass/pipeline.hpp"
#include "sfclass/report.hpp"

namespace {

using namespace sfclass;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitPartial = 4;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  unsigned jobs = 1;
  bool svg = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--config", o.config_path, "JSON scenario config (defaults apply when omitted)");
  cmd.add_option("--seed", o.seed, "Master seed (overrides config)");
  cmd.add_option("--out", o.out, "Output directory (overrides config)");
  cmd.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
  cmd.add_flag("--svg", o.svg, "Also write SVG charts");
  cmd.add_option("--set", o.overrides, "Config override key.path=value (repeatable)");
}

ScenarioConfig resolve_config(const CommonOptions& o) {
  std::vector<std::string> overrides = o.overrides;
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  if (o.out) overrides.push_back("output_dir=" + nlohmann::json(*o.out).dump());
  if (o.config_path.empty()) return parse_config("{}", overrides);
  return load_config(o.config_path, overrides);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

template <class Fn>
void write_with(const std::filesystem::path& p, Fn&& fn) {
  std::ostringstream s;
  fn(s);
  write_file(p, s.str());
}

int setup_status(const std::vector<ThetaOutcome>& setups) {
  bool any_ok = false;
  bool any_fail = false;
  bool any_convergence = false;
  for (const auto& s : setups) {
    if (s.setup) {
      any_ok = true;
    } else {
      any_fail = true;
      any_convergence = any_convergence || s.failure == FailureKind::convergence;
      std::cerr << "theta_x = " << fmt_num(s.theta_x) << " um: " << s.error << "\n";
    }
  }
  if (!any_ok && any_convergence) return kExitConvergence;
  return any_fail ? kExitPartial : kExitOk;
}

void print_setups(const std::vector<ThetaOutcome>& setups) {
  std::printf("%8s %12s %12s %10s %10s %10s %10s %9s\n", "theta_um", "objective", "eigen_obj", "S", "R_A", "R_B",
              "N_min", "converged");
  for (const auto& o : setups) {
    if (!o.setup) continue;
    const auto& t = *o.setup;
    std::printf("%8s %12.6g %12.6g %10.4g %10.4g %10.4g %10.4g %9s\n", fmt_num(t.theta_x).c_str(),
                t.optimization.objective, t.eigen_objective, t.selectivity, t.R_A, t.R_B, t.N_min,
                t.optimization.converged ? "yes" : "no");
  }
}

int run(const std::string& command, const CommonOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  ScenarioConfig config = resolve_config(opts);
  const std::filesystem::path out_dir = config.output_dir;
  std::filesystem::create_directories(out_dir);

  RunRecord record;
  record.command = command;
  record.config = config;
  record.setups = prepare_all(config);
  int status = setup_status(record.setups);

  if (command == "optimize") {
    print_setups(record.setups);
    write_with(out_dir / "optimize.csv", [&](std::ostream& s) { write_optimize_csv(s, record.setups); });
  } else if (command == "sweep") {
    record.sweep = run_sweep(config, record.setups, opts.jobs);
    write_with(out_dir / "sweep.csv", [&](std::ostream& s) { write_sweep_csv(s, record.sweep); });
    if (opts.svg) write_file(out_dir / "sweep.svg", sweep_svg(record.sweep));
  } else if (command == "benchmark") {
    record.benchmark = run_benchmark(config, record.setups, opts.jobs);
    write_with(out_dir / "benchmark.csv", [&](std::ostream& s) { write_benchmark_csv(s, record.benchmark); });
    if (opts.svg) {
      write_file(out_dir / "benchmark_68.svg", benchmark_svg(record.benchmark, false));
      write_file(out_dir / "benchmark_95.svg", benchmark_svg(record.benchmark, true));
    }
    for (const auto& r : record.benchmark) {
      if (r.flagged()) {
        std::cerr << "theta_x = " << fmt_num(r.theta_x) << " um: budget search flagged\n";
        if (status == kExitOk) status = kExitPartial;
      }
    }
  } else if (command == "reproduce") {
    record.reproduce = run_reproduce(config, record.setups, opts.jobs);
    record.sweep = run_sweep(config, record.setups, opts.jobs);
    write_with(out_dir / "reproduce.csv", [&](std::ostream& s) { write_reproduce_csv(s, record.reproduce); });
    write_with(out_dir / "sweep.csv", [&](std::ostream& s) { write_sweep_csv(s, record.sweep); });
    if (opts.svg) write_file(out_dir / "sweep.svg", sweep_svg(record.sweep));
    std::printf("Monte Carlo: %llu sessions per point. R_A solved so that n_min(R_A) equals the target.\n",
                static_cast<unsigned long long>(config.trials));
    std::printf("%8s %8s %10s %12s %8s %10s %10s %18s %10s\n", "theta_um", "N_min", "R_A", "n_min(R_A)", "R_t",
                "R_t(ref)", "fidelity", "95% CI", "fid(ref)");
    for (const auto& r : record.reproduce) {
      char ci[64];
      std::snprintf(ci, sizeof ci, "[%.3f, %.3f]", r.at_n_min.result.ci.lo, r.at_n_min.result.ci.hi);
      std::printf("%8s %8s %10.6f %12.9f %8.3f %10s %10.3f %18s %10s\n", fmt_num(r.theta_x).c_str(),
                  fmt_num(r.n_min_target).c_str(), r.R_A_solved, r.n_min_roundtrip, r.R_t,
                  r.reference_threshold ? fmt_num(*r.reference_threshold).c_str() : "-", r.at_n_min.result.fidelity, ci,
                  r.reference_fidelity ? fmt_num(*r.reference_fidelity).c_str() : "-");
    }
    std::printf("Reference saturation budgets (N_ave): ");
    for (std::size_t k = 0; k < std::size(reference::theta_x); ++k) {
      std::printf("%s%s um -> %s", k ? ", " : "", fmt_num(reference::theta_x[k]).c_str(),
                  fmt_num(reference::saturation_n_ave[k]).c_str());
    }
    std::printf("\n");
  }

  record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(out_dir / "run.json", record.to_json().dump(2) + "\n");
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mode-selective classification of sub-Rayleigh sources"};
  app.require_subcommand(1);
  CommonOptions opts;
  std::string command;
  for (const char* name : {"optimize", "sweep", "benchmark", "reproduce"}) {
    auto* cmd = app.add_subcommand(name);
    add_common(*cmd, opts);
    cmd->callback([&command, name] { command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  try {
    return run(command, opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConvergenceError& e) {
    std::cerr << "numerical non-convergence: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
