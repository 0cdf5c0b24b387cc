#pragma once

#include <cstddef>

#include "gradflow/diagnostics.hpp"
#include "gradflow/measures.hpp"
#include "gradflow/potentials.hpp"

namespace gradflow {

enum class Scheme { euler, rk4 };
enum class Repair { none, sort };

struct SolverConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  Scheme scheme = Scheme::rk4;
  Repair repair = Repair::sort;
  double cfl_safety = 0.2;
  std::size_t record_every = 1;
  bool diagnostics = true;  // compute a DiagnosticsRecord for every sample

  /// Throws UsageError unless dt > 0, t_end >= 0, 0 < cfl_safety <= 1 and
  /// record_every >= 1.
  void check() const;
};

/// du_i/dt at the cell midpoints: m_i sum_j p_j (1/M) sum_l W_ij'(u_j[l] - u_i[k]).
Field rhs(const QuantileState& qs, const PotentialMatrix& pm);

struct StepReport {
  std::size_t monotonicity_violations = 0;
  bool repaired = false;
};

/// One explicit Euler or RK4 step of size `dt`, followed by the per-species
/// sort when cfg.repair == Repair::sort. Throws NumericError on a
/// non-finite update.
QuantileState step(const QuantileState& qs, const PotentialMatrix& pm, const SolverConfig& cfg,
                   double dt, StepReport* report = nullptr);
QuantileState step(const QuantileState& qs, const PotentialMatrix& pm, const SolverConfig& cfg,
                   StepReport* report = nullptr);

/// Integrate to cfg.t_end, sampling every cfg.record_every steps and at the
/// final time. A NumericError stops the run and is recorded in
/// Trajectory::error; the samples taken so far are kept.
Trajectory run(const QuantileState& initial, const PotentialMatrix& pm, const SolverConfig& cfg);

/// cfl_safety / max_i (m_i sum_j Cbar_ij p_j (1 + D)), with Cbar from
/// estimate_growth_bound over displacements up to the support hull width D.
/// Returns +inf when every kernel is flat on that range.
double stable_time_step(const QuantileState& qs, const PotentialMatrix& pm, double cfl_safety);

/// Number of steps and the size of the last one for a horizon.
struct StepPlan {
  std::size_t steps = 0;
  double last_dt = 0.0;
};
StepPlan plan_steps(double t_end, double dt);

}  // namespace gradflow
