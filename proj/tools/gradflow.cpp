// gradflow: analyze, simulate and verify n-species interaction gradient flows.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gradflow/config.hpp"
#include "gradflow/convexity.hpp"
#include "gradflow/diagnostics.hpp"
#include "gradflow/errors.hpp"
#include "gradflow/io.hpp"
#include "gradflow/particle_solver.hpp"
#include "gradflow/quantile_solver.hpp"
#include "gradflow/verify.hpp"

namespace {

using namespace gradflow;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kNumeric = 1;
constexpr int kConfig = 2;
constexpr int kVerification = 3;

struct Options {
  std::string config;
  std::string out;
  std::string traj;
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<std::uint64_t> seed;
};

ConfigOverrides overrides(const Options& o) { return {o.dt, o.t_end, o.seed}; }

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  return os;
}

// "<dir>/traj.csv" -> "<dir>/traj.diag.csv" style sibling names.
std::string sibling(const std::string& path, const std::string& suffix) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  const std::string stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash))
                               ? path.substr(0, dot)
                               : path;
  return stem + suffix;
}

void write_manifest(const std::string& out, const ExperimentConfig& cfg, const std::string& command,
                    double dt) {
  auto os = open_output(out + ".manifest.json");
  os << manifest(cfg, command, dt).dump(2) << '\n';
}

int cmd_analyze(const Options& o) {
  const ExperimentConfig cfg = parse_config(o.config, overrides(o));
  std::cout << analysis_json(cfg).dump(2) << '\n';
  return kOk;
}

int cmd_simulate(const Options& o) {
  const ExperimentConfig cfg = parse_config(o.config, overrides(o));
  const Trajectory traj = run(initial_quantiles(cfg), cfg.potential, cfg.solver);
  {
    auto os = open_output(o.out);
    write_quantile_csv(os, traj);
  }
  {
    auto os = open_output(sibling(o.out, ".diag.csv"));
    write_diagnostics_csv(os, traj);
  }
  write_manifest(o.out, cfg, "simulate", traj.dt);
  if (traj.error) {
    std::cerr << "gradflow: numeric failure: " << *traj.error << '\n';
    return kNumeric;
  }
  return kOk;
}

int cmd_particles(const Options& o) {
  const ExperimentConfig cfg = parse_config(o.config, overrides(o));
  const ParticleTrajectory traj = run_particles(initial_particles(cfg), cfg.potential, cfg.solver);
  {
    auto os = open_output(o.out);
    write_particle_csv(os, traj);
  }
  {
    auto os = open_output(sibling(o.out, ".diag.csv"));
    write_particle_diagnostics_csv(os, traj);
  }
  write_manifest(o.out, cfg, "particles", traj.dt);
  if (traj.error) {
    std::cerr << "gradflow: numeric failure: " << *traj.error << '\n';
    return kNumeric;
  }
  return kOk;
}

int cmd_diagnose(const Options& o) {
  const ExperimentConfig cfg = parse_config(o.config, overrides(o));
  std::ifstream in(o.traj);
  if (!in) throw IoError("cannot open trajectory " + o.traj);
  const auto snapshots = read_quantile_csv(in, cfg.params);

  json records = json::array();
  std::vector<double> t, w2;
  std::vector<std::vector<double>> diam(cfg.params.n());
  for (const auto& snap : snapshots) {
    const DiagnosticsRecord r = diagnose(snap.state, cfg.potential, snap.t);
    records.push_back(r);
    t.push_back(r.t);
    w2.push_back(r.w2_to_ground);
    for (std::size_t i = 0; i < r.diam.size(); ++i) diam[i].push_back(r.diam[i]);
  }

  json fits = json::array();
  if (t.size() >= 3) {
    const TimeWindow window{t.back() / 5.0, t.back()};
    const ConvexityReport conv = analyze(cfg.potential, cfg.params);
    auto try_fit = [&](const std::vector<double>& values, const std::string& name, double predicted) {
      try {
        fits.push_back(fit_decay_rate(t, values, window, name, predicted));
      } catch (const UsageError& e) {
        fits.push_back({{"quantity", name}, {"skipped", e.what()}});
      }
    };
    try_fit(w2, "w2_to_ground", conv.lambda0);
    for (std::size_t i = 0; i < cfg.params.n(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cfg.params.n(); ++j) s += cfg.potential.kappa()(i, j) * cfg.params.p[j];
      try_fit(diam[i], "diam_" + std::to_string(i + 1), cfg.params.m[i] * s);
    }
  }
  json doc = {{"records", records}, {"rate_fits", fits}, {"manifest", manifest(cfg, "diagnose", 0.0)}};
  if (o.out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    auto os = open_output(o.out);
    os << doc.dump(2) << '\n';
  }
  return kOk;
}

int cmd_verify(const Options& o) {
  const ExperimentConfig cfg = parse_config(o.config, overrides(o));
  const VerifyReport report = verify(cfg);
  json doc = report;
  doc["manifest"] = manifest(cfg, "verify", cfg.solver.dt);
  if (o.out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    auto os = open_output(o.out);
    os << doc.dump(2) << '\n';
  }
  return report.passed() ? kOk : kVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate and verify n-species nonlocal interaction gradient flows"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Seed for randomized presets");
    sub->add_option("--dt", o.dt, "Time step")->check(CLI::PositiveNumber);
    sub->add_option("--t-end", o.t_end, "Final time")->check(CLI::NonNegativeNumber);
  };

  auto* analyze_cmd = app.add_subcommand("analyze", "Print the convexity report as JSON");
  add_common(analyze_cmd);
  auto* simulate_cmd = app.add_subcommand("simulate", "Integrate the quantile ODE");
  add_common(simulate_cmd);
  simulate_cmd->add_option("--out", o.out, "Trajectory CSV")->required();
  auto* particles_cmd = app.add_subcommand("particles", "Integrate the particle ODE");
  add_common(particles_cmd);
  particles_cmd->add_option("--out", o.out, "Trajectory CSV")->required();
  auto* diagnose_cmd = app.add_subcommand("diagnose", "Diagnostics and rate fits for a trajectory CSV");
  add_common(diagnose_cmd);
  diagnose_cmd->add_option("--traj", o.traj, "Quantile trajectory CSV")->required()->check(CLI::ExistingFile);
  diagnose_cmd->add_option("--out", o.out, "Output JSON (stdout when absent)");
  auto* verify_cmd = app.add_subcommand("verify", "Run the property checks applicable to a config");
  add_common(verify_cmd);
  verify_cmd->add_option("--out", o.out, "Output JSON (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*analyze_cmd) return cmd_analyze(o);
    if (*simulate_cmd) return cmd_simulate(o);
    if (*particles_cmd) return cmd_particles(o);
    if (*diagnose_cmd) return cmd_diagnose(o);
    return cmd_verify(o);
  } catch (const ConfigError& e) {
    std::cerr << "gradflow: config error\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "gradflow: " << e.what() << '\n';
    return kConfig;
  } catch (const NumericError& e) {
    std::cerr << "gradflow: numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const UsageError& e) {
    std::cerr << "gradflow: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainError& e) {
    std::cerr << "gradflow: " << e.what() << '\n';
    return kConfig;
  }
}
