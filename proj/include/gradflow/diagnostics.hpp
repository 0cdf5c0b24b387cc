#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradflow/measures.hpp"
#include "gradflow/potentials.hpp"

namespace gradflow {

using Field = std::vector<std::vector<double>>;

/// inner_i[k] = sum_j (p_j / M) sum_l W_ij'(u_i[k] - u_j[l]).
///
/// This is the midpoint quadrature of sum_j p_j (W_ij' * mu_j)(u_i(z_k)); the
/// quantile velocity is -m_i inner_i and the dissipation is its weighted
/// square norm. Throws NumericError naming (i, j, k, l) on a non-finite term.
Field interaction_field(const QuantileState& qs, const PotentialMatrix& pm);

struct DiagnosticsRecord {
  double t = 0.0;
  double energy = 0.0;
  double dissipation = 0.0;  // <= 0
  double E_invariant = 0.0;
  std::vector<double> supp_lo;
  std::vector<double> supp_hi;
  std::vector<double> diam;
  std::vector<double> min_gap;
  double w2_to_ground = 0.0;  // compound distance to the Dirac vector at x_inf
  std::size_t monotonicity_violations = 0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<QuantileState> states;
  std::vector<DiagnosticsRecord> records;  // empty when diagnostics are off
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t monotonicity_events = 0;  // steps that produced a crossing
  std::size_t repair_events = 0;        // steps where sorting changed a row
  std::optional<std::string> error;     // set when integration stopped early
};

/// 1/2 sum_ij (p_i p_j / M^2) sum_kl W_ij(u_i[k] - u_j[l]).
double energy(const QuantileState& qs, const PotentialMatrix& pm);

/// -sum_i (m_i p_i / M) sum_k inner_i[k]^2; never positive.
double dissipation(const QuantileState& qs, const PotentialMatrix& pm);
double dissipation(const QuantileState& qs, const Field& inner);

/// Every species concentrated at x_inf = E / sum_j (p_j / m_j).
QuantileState ground_state(const SystemParams& params, std::size_t M);

struct Support {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> diam;
};

/// lo = u_i[0], hi = u_i[M-1], diam = hi - lo.
Support support_and_diameter(const QuantileState& qs);

/// Smallest neighbouring difference u_i[k+1] - u_i[k] per species (0 for M = 1).
std::vector<double> min_monotonicity_gap(const QuantileState& qs);

DiagnosticsRecord diagnose(const QuantileState& qs, const PotentialMatrix& pm, double t);

struct RateFit {
  std::string quantity;
  double fitted_rate = 0.0;
  double predicted_rate = 0.0;
  double rel_err = 0.0;
  double r_squared = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t points = 0;
};

struct TimeWindow {
  double lo = 0.0;
  double hi = 0.0;
};

/// Least-squares slope of ln(value) against t over the window; the fitted
/// rate is minus the slope. Throws UsageError for fewer than 3 points or a
/// nonpositive value in the window.
RateFit fit_decay_rate(std::span<const double> t, std::span<const double> values,
                       TimeWindow window, std::string quantity = {},
                       double predicted_rate = 0.0);

struct SteadyStateVerdict {
  bool steady = false;
  double dissipation = 0.0;
  double energy = 0.0;
  std::vector<double> residual;  // max_k |inner_i[k]| per species
};

/// Steady when |dissipation| < tol (1 + |energy|) at the final state.
SteadyStateVerdict steady_state_check(const QuantileState& final_state, const PotentialMatrix& pm,
                                      double tol = 1e-8);
SteadyStateVerdict steady_state_check(const Trajectory& traj, const PotentialMatrix& pm,
                                      double tol = 1e-8);

}  // namespace gradflow
