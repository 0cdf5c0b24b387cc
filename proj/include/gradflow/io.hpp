#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradflow/convexity.hpp"
#include "gradflow/diagnostics.hpp"
#include "gradflow/particle_solver.hpp"
#include "gradflow/potentials.hpp"

namespace gradflow {

/// Shortest decimal representation that round-trips, '.' separator.
std::string format_double(double v);

// CSV files. Species, cell and particle indices are 0-based; column-name
// suffixes (diam_1, x_1, ...) count from 1.

/// Columns: t,species,cell,u
void write_quantile_csv(std::ostream& os, const Trajectory& traj);
/// Columns: t,energy,dissipation,E_invariant,diam_1..diam_n,supp_lo_1..supp_lo_n,supp_hi_1..supp_hi_n
void write_diagnostics_csv(std::ostream& os, const Trajectory& traj);
/// Columns: t,species,k,mass,x_1..x_d
void write_particle_csv(std::ostream& os, const ParticleTrajectory& traj);
/// Columns: t,energy
void write_particle_diagnostics_csv(std::ostream& os, const ParticleTrajectory& traj);

struct QuantileSnapshot {
  double t = 0.0;
  QuantileState state;
};

/// Parse a quantile trajectory CSV; `params` supplies m, p and E.
/// Throws UsageError on malformed input.
std::vector<QuantileSnapshot> read_quantile_csv(std::istream& is, const SystemParams& params);

void to_json(nlohmann::json& j, const ConvexityReport& r);
void to_json(nlohmann::json& j, const ValidationReport& r);
void to_json(nlohmann::json& j, const DiagnosticsRecord& r);
void to_json(nlohmann::json& j, const RateFit& r);

}  // namespace gradflow
