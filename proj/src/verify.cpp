#include "gradflow/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <type_traits>

#include "gradflow/convexity.hpp"
#include "gradflow/diagnostics.hpp"
#include "gradflow/errors.hpp"
#include "gradflow/io.hpp"

namespace gradflow {

namespace {

using nlohmann::json;

CheckResult passed(std::string name, json metrics = json::object()) {
  return {std::move(name), CheckStatus::pass, {}, std::move(metrics)};
}

CheckResult failed(std::string name, std::string detail, json metrics = json::object()) {
  return {std::move(name), CheckStatus::fail, std::move(detail), std::move(metrics)};
}

CheckResult skipped(std::string name, std::string reason) {
  return {std::move(name), CheckStatus::skipped, std::move(reason), json::object()};
}

std::string fmt(double v) { return format_double(v); }

bool kernel_lipschitz(const ScalarPotential& w) {
  return w.visit([](const auto& k) -> bool {
    using K = std::decay_t<decltype(k)>;
    if constexpr (std::is_same_v<K, Power>) return k.a == 0.0 || k.q == 2.0;
    else if constexpr (std::is_same_v<K, DoubleWell>) return k.a == 0.0;
    else if constexpr (std::is_same_v<K, Sum>) {
      return std::all_of(k.terms.begin(), k.terms.end(), kernel_lipschitz);
    } else {
      return true;
    }
  });
}

double hull_width(const QuantileState& qs) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& row : qs.u) {
    lo = std::min(lo, *std::min_element(row.begin(), row.end()));
    hi = std::max(hi, *std::max_element(row.begin(), row.end()));
  }
  return hi - lo;
}

// Uniform convexity modulus of the declared kappa (scalar formula for n = 1).
double modulus(const ExperimentConfig& cfg) {
  if (cfg.params.n() == 1) return lambda0_scalar(cfg.potential.kappa()(0, 0), cfg.params);
  return lambda0(cfg.potential.kappa(), cfg.params).lambda0;
}

CheckResult check_validation(const ExperimentConfig& cfg) {
  const ValidationReport report = validate(cfg.potential, {-10.0, 10.0}, 2001);
  json metrics = {{"issues", report.issues.size()}};
  if (report.has_errors()) {
    const auto& first = *std::find_if(report.issues.begin(), report.issues.end(),
                                      [](const ValidationIssue& v) { return v.severity == Severity::error; });
    return failed("validation", first.assumption + " (" + std::to_string(first.i) + "," +
                                    std::to_string(first.j) + "): " + first.message,
                  metrics);
  }
  return passed("validation", metrics);
}

CheckResult check_necessary(const ExperimentConfig& cfg) {
  const double lam = modulus(cfg);
  const auto ok = necessary_condition(cfg.potential.kappa(), cfg.params);
  const bool all_ok = std::all_of(ok.begin(), ok.end(), [](bool b) { return b; });
  json metrics = {{"lambda0", lam}, {"necessary_ok", ok}};
  if (lam > 0.0 && !all_ok) {
    return failed("lambda0_necessary_condition", "lambda0 > 0 but some sum_j kappa_ij p_j <= 0", metrics);
  }
  return passed("lambda0_necessary_condition", metrics);
}

CheckResult check_conservation(const Trajectory& traj) {
  const QuantileState& first = traj.states.front();
  double scale = 0.0;
  for (std::size_t j = 0; j < first.n(); ++j) {
    double mean_abs = 0.0;
    for (double v : first.u[j]) mean_abs += std::abs(v);
    scale += first.params.p[j] / first.params.m[j] * mean_abs / static_cast<double>(first.M);
  }
  scale = std::max(scale, 1e-300);
  const double e0 = weighted_center_of_mass(first)[0];
  double drift = 0.0;
  for (const auto& s : traj.states) drift = std::max(drift, std::abs(weighted_center_of_mass(s)[0] - e0));
  const double rel = drift / scale;
  json metrics = {{"E", e0}, {"max_drift", drift}, {"relative_drift", rel}};
  if (rel > 1e-10) return failed("center_of_mass_conservation", "relative drift " + fmt(rel), metrics);
  return passed("center_of_mass_conservation", metrics);
}

CheckResult check_dissipation_sign(const Trajectory& traj) {
  double worst = -INFINITY;
  for (const auto& r : traj.records) worst = std::max(worst, r.dissipation);
  json metrics = {{"max_dissipation", worst}};
  if (worst > 0.0) return failed("dissipation_sign", "positive dissipation " + fmt(worst), metrics);
  return passed("dissipation_sign", metrics);
}

CheckResult check_energy_decay(const Trajectory& traj) {
  double worst_rise = 0.0;
  double at = 0.0;
  for (std::size_t k = 1; k < traj.records.size(); ++k) {
    const double rise = traj.records[k].energy - traj.records[k - 1].energy;
    const double slack = 1e-10 * (1.0 + std::abs(traj.records[k - 1].energy));
    if (rise - slack > worst_rise) {
      worst_rise = rise - slack;
      at = traj.records[k].t;
    }
  }
  json metrics = {{"initial_energy", traj.records.front().energy},
                  {"final_energy", traj.records.back().energy}};
  if (worst_rise > 0.0) {
    return failed("energy_decay", "energy rose by " + fmt(worst_rise) + " at t = " + fmt(at), metrics);
  }
  return passed("energy_decay", metrics);
}

CheckResult check_finite_propagation(const Trajectory& traj) {
  double widest = 0.0;
  for (const auto& r : traj.records) {
    for (std::size_t i = 0; i < r.supp_lo.size(); ++i) {
      if (!std::isfinite(r.supp_lo[i]) || !std::isfinite(r.supp_hi[i])) {
        return failed("finite_propagation", "support bound became non-finite at t = " + fmt(r.t));
      }
      widest = std::max({widest, std::abs(r.supp_lo[i]), std::abs(r.supp_hi[i])});
    }
  }
  const auto& first = traj.records.front();
  const auto& last = traj.records.back();
  return passed("finite_propagation", {{"max_abs_support", widest},
                                       {"initial_diam", first.diam},
                                       {"final_diam", last.diam},
                                       {"t_end", last.t}});
}

CheckResult check_delta_separation(const ExperimentConfig& cfg, const Trajectory& traj) {
  const std::size_t n = cfg.params.n();
  std::vector<double> rate(n, 0.0);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += cfg.potential.kappa()(i, j) * cfg.params.p[j];
    rate[i] = cfg.params.m[i] * s;
    any = any || rate[i] > 0.0;
  }
  if (!any) return skipped("delta_separation", "no species with sum_j kappa_ij p_j > 0");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(rate[i] > 0.0)) continue;
    const double tol = 10.0 * traj.dt * rate[i];
    const double d0 = traj.records.front().diam[i];
    for (const auto& r : traj.records) {
      const double bound = std::exp(-rate[i] * r.t) * d0 * (1.0 + tol) + 1e-12 * (1.0 + d0);
      if (r.diam[i] > bound) {
        return failed("delta_separation", "species " + std::to_string(i) + " diameter " + fmt(r.diam[i]) +
                                              " exceeds bound " + fmt(bound) + " at t = " + fmt(r.t),
                      {{"rates", rate}});
      }
    }
  }
  return passed("delta_separation", {{"rates", rate}});
}

CheckResult check_ground_state(const ExperimentConfig& cfg, const Trajectory& traj, double lam) {
  if (!(lam > 0.0)) return skipped("ground_state_convergence", "lambda0 <= 0");
  const double w0 = traj.records.front().w2_to_ground;
  for (const auto& r : traj.records) {
    const double bound = std::exp(-lam * r.t) * w0 * 1.05 + 1e-12;
    if (r.w2_to_ground > bound) {
      return failed("ground_state_convergence",
                    "distance to ground state " + fmt(r.w2_to_ground) + " exceeds " + fmt(bound) +
                        " at t = " + fmt(r.t));
    }
  }
  double weight = 0.0;
  for (std::size_t j = 0; j < cfg.params.n(); ++j) weight += cfg.params.p[j] / cfg.params.m[j];
  return passed("ground_state_convergence", {{"x_inf", cfg.params.E[0] / weight},
                                             {"initial_distance", w0},
                                             {"final_distance", traj.records.back().w2_to_ground}});
}

CheckResult check_contraction(const ExperimentConfig& cfg, const Trajectory& traj, double lam) {
  if (!(lam > 0.0)) return skipped("contraction", "lambda0 <= 0, no uniform contraction predicted");
  const QuantileState alt = alternate_quantiles(cfg);
  SolverConfig sc = cfg.solver;
  sc.diagnostics = false;
  const Trajectory other = run(alt, cfg.potential, sc);
  if (other.error) return failed("contraction", "second run stopped: " + *other.error);
  const std::size_t count = std::min(other.states.size(), traj.states.size());
  const double d0 = compound_distance(traj.states.front(), other.states.front());
  double worst_ratio = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double d = compound_distance(traj.states[k], other.states[k]);
    const double bound = std::exp(-lam * traj.times[k]) * d0;
    worst_ratio = std::max(worst_ratio, d / (bound + 1e-300));
    if (d > 1.05 * bound + 1e-12) {
      return failed("contraction", "distance " + fmt(d) + " exceeds " + fmt(1.05 * bound) + " at t = " +
                                       fmt(traj.times[k]),
                    {{"initial_distance", d0}});
    }
  }
  return passed("contraction", {{"initial_distance", d0}, {"max_ratio_to_bound", worst_ratio}});
}

CheckResult check_confinement(const ExperimentConfig& cfg, const Trajectory& traj) {
  if (!cfg.potential.confining()) return skipped("confinement", "no confining spec declared");
  const ConfiningReport rep = confining_check(cfg.potential, cfg.params);
  if (!rep.verdict) return skipped("confinement", "confining_check does not certify the potential");
  const double half = 0.5 * traj.records.back().t;
  double early = 0.0, late = 0.0;
  for (const auto& r : traj.records) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.supp_lo.size(); ++i) s = std::max({s, std::abs(r.supp_lo[i]), std::abs(r.supp_hi[i])});
    (r.t <= half ? early : late) = std::max(r.t <= half ? early : late, s);
  }
  json metrics = {{"lambda0_tilde", rep.lambda0_tilde}, {"sup_first_half", early}, {"sup_second_half", late}};
  if (late > early + 1e-3 * (1.0 + early)) {
    return failed("confinement", "support still growing in the second half of the run", metrics);
  }
  return passed("confinement", metrics);
}

CheckResult check_no_blowup(const ExperimentConfig& cfg, const QuantileState& q0) {
  if (!lipschitz_kernels(cfg.potential)) return skipped("no_blowup", "some kernel derivative is not Lipschitz");
  const auto gap0 = min_monotonicity_gap(q0);
  for (double g : gap0)
    if (!(g > 0.0)) return skipped("no_blowup", "initial quantiles are not strictly increasing");
  const std::size_t n = cfg.params.n();
  const double reach = hull_width(q0) + 10.0;
  std::vector<double> rate(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      rate[i] += cfg.params.m[i] * cfg.params.p[j] *
                 estimate_lipschitz(cfg.potential.entry(i, j), {-reach, reach}, 4001);
    }
  SolverConfig sc = cfg.solver;
  sc.repair = Repair::none;
  const Trajectory traj = run(q0, cfg.potential, sc);
  if (traj.error) return failed("no_blowup", "unrepaired run stopped: " + *traj.error);
  for (const auto& r : traj.records) {
    for (std::size_t i = 0; i < n; ++i) {
      // Gaps below a few ulps of the positions cannot be resolved.
      const double ulps = 64.0 * std::numeric_limits<double>::epsilon() *
                          std::max({1.0, std::abs(r.supp_lo[i]), std::abs(r.supp_hi[i])});
      const double bound = std::exp(-rate[i] * r.t) * gap0[i] * 0.9 - ulps;
      if (r.min_gap[i] < bound) {
        return failed("no_blowup", "species " + std::to_string(i) + " gap " + fmt(r.min_gap[i]) +
                                       " below " + fmt(bound) + " at t = " + fmt(r.t),
                      {{"rates", rate}});
      }
    }
  }
  json metrics = {{"rates", rate}, {"repair_events", traj.repair_events}};
  if (traj.repair_events != 0) return failed("no_blowup", "monotonicity crossing occurred", metrics);
  return passed("no_blowup", metrics);
}

VerifyReport verify_particles(const ExperimentConfig& cfg) {
  VerifyReport report;
  const std::string reason = "requires d = 1";
  for (const char* name : {"confinement", "contraction", "delta_separation", "dissipation_sign",
                           "finite_propagation", "ground_state_convergence", "no_blowup"}) {
    report.checks.push_back(skipped(name, reason));
  }
  report.checks.push_back(check_validation(cfg));
  report.checks.push_back(check_necessary(cfg));

  const ParticleTrajectory traj = run_particles(initial_particles(cfg), cfg.potential, cfg.solver);
  if (traj.error) {
    report.checks.push_back(failed("center_of_mass_conservation", "run stopped: " + *traj.error));
    report.checks.push_back(failed("energy_decay", "run stopped: " + *traj.error));
    return report;
  }
  const auto e0 = weighted_center_of_mass(traj.states.front());
  double drift = 0.0, scale = 1e-300;
  for (std::size_t c = 0; c < e0.size(); ++c) scale += std::abs(e0[c]);
  for (const auto& s : traj.states) {
    const auto e = weighted_center_of_mass(s);
    for (std::size_t c = 0; c < e.size(); ++c) drift = std::max(drift, std::abs(e[c] - e0[c]));
  }
  const ParticleState& first = traj.states.front();
  for (std::size_t i = 0; i < first.n(); ++i)
    for (std::size_t k = 0; k < first.species[i].count(); ++k)
      for (double x : first.position(i, k))
        scale += first.species[i].mass[k] / first.params.m[i] * std::abs(x);
  if (drift / scale > 1e-10) {
    report.checks.push_back(failed("center_of_mass_conservation", "relative drift " + fmt(drift / scale)));
  } else {
    report.checks.push_back(passed("center_of_mass_conservation", {{"relative_drift", drift / scale}}));
  }
  bool rose = false;
  for (std::size_t k = 1; k < traj.energies.size(); ++k) {
    if (traj.energies[k] - traj.energies[k - 1] > 1e-10 * (1.0 + std::abs(traj.energies[k - 1]))) rose = true;
  }
  if (rose) report.checks.push_back(failed("energy_decay", "discrete energy increased"));
  else report.checks.push_back(passed("energy_decay", {{"final_energy", traj.energies.back()}}));
  return report;
}

}  // namespace

bool lipschitz_kernels(const PotentialMatrix& pm) {
  for (std::size_t i = 0; i < pm.size(); ++i)
    for (std::size_t j = 0; j < pm.size(); ++j)
      if (!kernel_lipschitz(pm.entry(i, j))) return false;
  return true;
}

bool VerifyReport::passed() const noexcept {
  return std::none_of(checks.begin(), checks.end(),
                      [](const CheckResult& c) { return c.status == CheckStatus::fail; });
}

VerifyReport verify(const ExperimentConfig& cfg) {
  VerifyReport report;
  if (cfg.params.d != 1) {
    report = verify_particles(cfg);
  } else {
    report.checks.push_back(check_validation(cfg));
    report.checks.push_back(check_necessary(cfg));
    const double lam = modulus(cfg);
    const QuantileState q0 = initial_quantiles(cfg);
    const Trajectory traj = run(q0, cfg.potential, cfg.solver);
    if (traj.error || traj.records.empty()) {
      const std::string why = traj.error ? "run stopped: " + *traj.error : "no samples recorded";
      for (const char* name : {"center_of_mass_conservation", "confinement", "contraction", "delta_separation",
                               "dissipation_sign", "energy_decay", "finite_propagation",
                               "ground_state_convergence"}) {
        report.checks.push_back(failed(name, why));
      }
    } else {
      report.checks.push_back(check_conservation(traj));
      report.checks.push_back(check_dissipation_sign(traj));
      report.checks.push_back(check_energy_decay(traj));
      report.checks.push_back(check_finite_propagation(traj));
      report.checks.push_back(check_delta_separation(cfg, traj));
      report.checks.push_back(check_ground_state(cfg, traj, lam));
      report.checks.push_back(check_contraction(cfg, traj, lam));
      report.checks.push_back(check_confinement(cfg, traj));
    }
    report.checks.push_back(check_no_blowup(cfg, q0));
  }
  std::sort(report.checks.begin(), report.checks.end(),
            [](const CheckResult& a, const CheckResult& b) { return a.name < b.name; });
  return report;
}

void to_json(nlohmann::json& j, const CheckResult& r) {
  static const char* names[] = {"pass", "fail", "skipped"};
  j = {{"name", r.name}, {"status", names[static_cast<int>(r.status)]}, {"metrics", r.metrics}};
  if (!r.detail.empty()) j[r.status == CheckStatus::skipped ? "reason" : "detail"] = r.detail;
}

void to_json(nlohmann::json& j, const VerifyReport& r) {
  j = {{"passed", r.passed()}, {"checks", r.checks}};
}

}  // namespace gradflow
