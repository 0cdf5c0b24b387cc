#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gradflow/convexity.hpp"

namespace gradflow {

/// d = 1 species measures through their pseudo-inverse distribution
/// functions, sampled at the cell midpoints z_k = (k + 1/2) / M of [0, 1).
/// All species share the resolution M.
struct QuantileState {
  SystemParams params;
  std::size_t M = 0;
  std::vector<std::vector<double>> u;  // n rows of M non-decreasing values

  std::size_t n() const noexcept { return u.size(); }
  static double midpoint(std::size_t k, std::size_t M) noexcept {
    return (static_cast<double>(k) + 0.5) / static_cast<double>(M);
  }

  /// Shapes, parameter consistency and finiteness. Monotonicity is checked
  /// separately because unrepaired integration may break it.
  void check() const;
  bool monotone() const noexcept;
};

/// Build a state and set params.E from the data.
QuantileState make_quantile_state(std::vector<double> m, std::vector<double> p,
                                  std::vector<std::vector<double>> u);

struct ParticleSpecies {
  std::vector<double> x;     // count() * d coordinates, particle-major
  std::vector<double> mass;  // per-particle masses, all > 0

  std::size_t count() const noexcept { return mass.size(); }
};

/// Finitely many weighted particles per species in R^d.
struct ParticleState {
  SystemParams params;
  std::vector<ParticleSpecies> species;

  std::size_t n() const noexcept { return species.size(); }
  std::size_t d() const noexcept { return params.d; }
  std::span<const double> position(std::size_t i, std::size_t k) const {
    return {species[i].x.data() + k * params.d, params.d};
  }
  /// Shapes, finiteness and sum_k p_i^k == p_i to 1e-12 relative.
  void check() const;
};

/// Build a state with p and E taken from the particle data.
ParticleState make_particle_state(std::vector<double> m, std::size_t d,
                                  std::vector<ParticleSpecies> species);

/// Quantiles of d = 1 particle data. u_i[k] is the position of the particle
/// whose normalized cumulative mass first exceeds z_k (the right-continuous
/// pseudo-inverse); ties are resolved by a stable sort.
QuantileState quantile_from_particles(const ParticleState& ps, std::size_t M);

/// One particle of mass p_i / M per cell.
ParticleState particles_from_quantile(const QuantileState& qs);

/// sqrt( sum_j (1/m_j) (p_j/M) sum_k (u_j^a[k] - u_j^b[k])^2 ).
double compound_distance(const QuantileState& a, const QuantileState& b);
/// (p_i / M) sum_k |u_i^a[k] - u_i^b[k]|.
double w1_distance(const QuantileState& a, const QuantileState& b, std::size_t i);
/// max_k |u_i^a[k] - u_i^b[k]|.
double winf_distance(const QuantileState& a, const QuantileState& b, std::size_t i);

/// sum_j (p_j / m_j) mean(u_j), as a one-component vector.
std::vector<double> weighted_center_of_mass(const QuantileState& qs);
/// sum_i (1/m_i) sum_k p_i^k x_i^k.
std::vector<double> weighted_center_of_mass(const ParticleState& ps);
/// (p_i / M) sum_k u_i[k]^2 per species.
std::vector<double> second_moments(const QuantileState& qs);

}  // namespace gradflow
