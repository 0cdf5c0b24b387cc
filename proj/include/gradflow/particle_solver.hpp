#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gradflow/measures.hpp"
#include "gradflow/potentials.hpp"
#include "gradflow/quantile_solver.hpp"

namespace gradflow {

/// Per species, count() * d velocity components (particle-major).
using ParticleField = std::vector<std::vector<double>>;

struct ParticleTrajectory {
  std::vector<double> times;
  std::vector<ParticleState> states;
  std::vector<double> energies;
  double dt = 0.0;
  std::size_t steps = 0;
  std::optional<std::string> error;
};

/// Radial force profile: W'(|z|) z / |z|, and the zero vector at z = 0.
void radial_gradient(const ScalarPotential& w, std::span<const double> z, std::span<double> out);

/// dx_i^k/dt = -m_i sum_j sum_l p_j^l gradW_ij(x_i^k - x_j^l).
ParticleField particle_rhs(const ParticleState& ps, const PotentialMatrix& pm);

/// 1/2 sum_ij sum_kl p_i^k p_j^l W_ij(|x_i^k - x_j^l|).
double discrete_energy(const ParticleState& ps, const PotentialMatrix& pm);

/// Labelled weighted Euclidean distance
/// sqrt( sum_i (1/m_i) sum_k p_i^k |x_i^k - y_i^k|^2 ).
/// Two labellings of the same measure are generally at positive distance.
double discrete_metric(const ParticleState& a, const ParticleState& b);

ParticleState particle_step(const ParticleState& ps, const PotentialMatrix& pm,
                            const SolverConfig& cfg, double dt);

/// Integrate the particle system; cfg.repair is ignored.
ParticleTrajectory run_particles(const ParticleState& initial, const PotentialMatrix& pm,
                                 const SolverConfig& cfg);

/// Same policy as the quantile solver, with D the largest pairwise distance.
double stable_time_step(const ParticleState& ps, const PotentialMatrix& pm, double cfl_safety);

}  // namespace gradflow
