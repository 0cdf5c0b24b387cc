#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "gradflow/matrix.hpp"
#include "gradflow/potentials.hpp"

namespace gradflow {

/// Mobilities, total masses and weighted center of mass of an n-species system.
struct SystemParams {
  std::vector<double> m;  // mobilities, all > 0
  std::vector<double> p;  // total masses, all > 0
  std::vector<double> E;  // sum_j (1/m_j) * first moment of species j; length d
  std::size_t d = 1;

  std::size_t n() const noexcept { return m.size(); }
  /// Throws DomainError / UsageError when an invariant is broken.
  void check() const;
  bool operator==(const SystemParams&) const = default;
};

struct ModulusResult {
  std::vector<double> eta;
  double lambda0 = 0.0;
};

struct ConfiningReport {
  double lambda0_tilde = 0.0;
  std::vector<double> eta_tilde;
  bool irreducible_at_distance = false;
  bool verdict = false;
};

struct ConvexityReport {
  std::vector<double> eta;
  double lambda0 = 0.0;
  std::vector<bool> necessary_ok;
  bool irreducible = false;
  std::optional<ConfiningReport> confining;
};

/// Geodesic-convexity modulus of a genuine system (n >= 2):
///
///   eta_i   = min_{j != i} kappa_ij m_j
///   lambda0 = min_i [ p_i min(0, m_i kappa_ii - eta_i)
///                     + 1/2 sum_j p_j (eta_j + eta_i m_i / m_j) ]
///
/// Throws UsageError for n < 2 and DomainError for asymmetric kappa.
ModulusResult lambda0(const SquareMatrix& kappa, const SystemParams& params);

/// Single-species modulus m * kappa * p. Throws UsageError unless n == 1.
double lambda0_scalar(double kappa, const SystemParams& params);

/// Entry i is (sum_j kappa_ij p_j > 0); all entries hold whenever lambda0 > 0.
std::vector<bool> necessary_condition(const SquareMatrix& kappa, const SystemParams& params);

/// Connectivity of the graph with an edge (i,j) whenever W_ij' is not
/// identically zero.
bool irreducible(const PotentialMatrix& pm);

/// Same graph restricted to the tail (radius, infinity).
bool irreducible_at_distance(const PotentialMatrix& pm, double radius);

/// Tail-convexity modulus and confining verdict. Note that the off-diagonal
/// weights use masses here: eta~_i = min_{j != i} C_ij p_j.
/// Throws UsageError when the potential carries no confining spec.
ConfiningReport confining_check(const PotentialMatrix& pm, const SystemParams& params);

/// Full report from the declared kappa (and confining spec, if present).
ConvexityReport analyze(const PotentialMatrix& pm, const SystemParams& params);

}  // namespace gradflow
