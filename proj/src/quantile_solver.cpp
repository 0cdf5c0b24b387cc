#include "gradflow/quantile_solver.hpp"

#include <algorithm>
#include <cmath>

#include "gradflow/errors.hpp"

namespace gradflow {

void SolverConfig::check() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw UsageError("t_end must be nonnegative");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw UsageError("cfl_safety must lie in (0, 1]");
  if (record_every == 0) throw UsageError("record_every must be at least 1");
}

StepPlan plan_steps(double t_end, double dt) {
  if (t_end <= 0.0) return {0, 0.0};
  const double ratio = t_end / dt;
  auto steps = static_cast<std::size_t>(std::ceil(ratio - 1e-9));
  steps = std::max<std::size_t>(steps, 1);
  const double last = t_end - dt * static_cast<double>(steps - 1);
  return {steps, last};
}

Field rhs(const QuantileState& qs, const PotentialMatrix& pm) {
  Field v = interaction_field(qs, pm);
  for (std::size_t i = 0; i < qs.n(); ++i) {
    const double m = qs.params.m[i];
    for (double& x : v[i]) x = -m * x;
  }
  return v;
}

namespace {

QuantileState advanced(const QuantileState& base, const Field& v, double h) {
  QuantileState out = base;
  for (std::size_t i = 0; i < out.n(); ++i)
    for (std::size_t k = 0; k < out.M; ++k) out.u[i][k] += h * v[i][k];
  return out;
}

void check_finite(const QuantileState& qs) {
  for (std::size_t i = 0; i < qs.n(); ++i)
    for (std::size_t k = 0; k < qs.M; ++k)
      if (!std::isfinite(qs.u[i][k])) {
        throw NumericError("non-finite quantile value after step (species " + std::to_string(i) +
                           ", cell " + std::to_string(k) + ")");
      }
}

}  // namespace

QuantileState step(const QuantileState& qs, const PotentialMatrix& pm, const SolverConfig& cfg,
                   double dt, StepReport* report) {
  QuantileState next;
  if (cfg.scheme == Scheme::euler) {
    next = advanced(qs, rhs(qs, pm), dt);
  } else {
    const Field k1 = rhs(qs, pm);
    const Field k2 = rhs(advanced(qs, k1, 0.5 * dt), pm);
    const Field k3 = rhs(advanced(qs, k2, 0.5 * dt), pm);
    const Field k4 = rhs(advanced(qs, k3, dt), pm);
    next = qs;
    const double sixth = dt / 6.0;
    for (std::size_t i = 0; i < next.n(); ++i)
      for (std::size_t k = 0; k < next.M; ++k)
        next.u[i][k] += sixth * (k1[i][k] + 2.0 * k2[i][k] + 2.0 * k3[i][k] + k4[i][k]);
  }
  check_finite(next);

  StepReport local;
  for (auto& row : next.u) {
    std::size_t crossings = 0;
    for (std::size_t k = 1; k < row.size(); ++k)
      if (row[k] < row[k - 1]) ++crossings;
    local.monotonicity_violations += crossings;
    if (crossings > 0 && cfg.repair == Repair::sort) {
      std::sort(row.begin(), row.end());
      local.repaired = true;
    }
  }
  if (report) *report = local;
  return next;
}

QuantileState step(const QuantileState& qs, const PotentialMatrix& pm, const SolverConfig& cfg,
                   StepReport* report) {
  return step(qs, pm, cfg, cfg.dt, report);
}

Trajectory run(const QuantileState& initial, const PotentialMatrix& pm, const SolverConfig& cfg) {
  cfg.check();
  initial.check();
  if (pm.size() != initial.n()) throw UsageError("potential and state differ in species count");

  Trajectory traj;
  traj.dt = cfg.dt;
  auto sample = [&](const QuantileState& qs, double t) {
    traj.times.push_back(t);
    traj.states.push_back(qs);
    if (cfg.diagnostics) traj.records.push_back(diagnose(qs, pm, t));
  };

  const StepPlan plan = plan_steps(cfg.t_end, cfg.dt);
  QuantileState current = initial;
  try {
    sample(current, 0.0);
    for (std::size_t s = 1; s <= plan.steps; ++s) {
      const bool last = s == plan.steps;
      StepReport report;
      current = step(current, pm, cfg, last ? plan.last_dt : cfg.dt, &report);
      traj.steps = s;
      if (report.monotonicity_violations > 0) ++traj.monotonicity_events;
      if (report.repaired) ++traj.repair_events;
      if (last || s % cfg.record_every == 0) {
        sample(current, last ? cfg.t_end : cfg.dt * static_cast<double>(s));
      }
    }
  } catch (const NumericError& e) {
    traj.error = e.what();
  }
  return traj;
}

double stable_time_step(const QuantileState& qs, const PotentialMatrix& pm, double cfl_safety) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& row : qs.u) {
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double width = std::max(hi - lo, 1e-6);
  const Interval displacements{-width, width};
  double worst = 0.0;
  for (std::size_t i = 0; i < qs.n(); ++i) {
    double rate = 0.0;
    for (std::size_t j = 0; j < qs.n(); ++j) {
      rate += estimate_growth_bound(pm.entry(i, j), displacements, 201) * qs.params.p[j];
    }
    worst = std::max(worst, qs.params.m[i] * rate * (1.0 + width));
  }
  return worst > 0.0 ? cfl_safety / worst : INFINITY;
}

}  // namespace gradflow
