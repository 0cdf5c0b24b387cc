#include "gradflow/convexity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gradflow/errors.hpp"

namespace gradflow {

void SystemParams::check() const {
  if (m.empty()) throw UsageError("system needs at least one species");
  if (p.size() != m.size()) throw UsageError("mobilities and masses differ in length");
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (!(m[j] > 0.0) || !std::isfinite(m[j])) throw DomainError("mobilities must be positive");
    if (!(p[j] > 0.0) || !std::isfinite(p[j])) throw DomainError("masses must be positive");
  }
  if (d == 0) throw UsageError("spatial dimension must be at least 1");
  if (E.size() != d) throw UsageError("center of mass must have d components");
  for (double e : E)
    if (!std::isfinite(e)) throw DomainError("center of mass must be finite");
}

namespace {

// The min-formula shared by lambda0 and lambda0_tilde.
double modulus_from_eta(const SquareMatrix& k, const std::vector<double>& eta,
                        const SystemParams& params) {
  const std::size_t n = params.n();
  double best = INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    double coupling = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      coupling += params.p[j] * (eta[j] + eta[i] * params.m[i] / params.m[j]);
    }
    const double term =
        params.p[i] * std::min(0.0, params.m[i] * k(i, i) - eta[i]) + 0.5 * coupling;
    best = std::min(best, term);
  }
  return best;
}

void check_shapes(const SquareMatrix& k, const SystemParams& params) {
  params.check();
  if (k.size() != params.n()) throw UsageError("matrix size does not match species count");
  if (!k.is_symmetric()) throw DomainError("kappa must be symmetric");
}

bool connected(std::size_t n, const std::vector<std::vector<bool>>& adjacent) {
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t visited = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < n; ++j) {
      if (!seen[j] && adjacent[i][j]) {
        seen[j] = true;
        ++visited;
        stack.push_back(j);
      }
    }
  }
  return visited == n;
}

template <class EdgeTest>
bool graph_connected(const PotentialMatrix& pm, EdgeTest&& has_edge) {
  const std::size_t n = pm.size();
  std::vector<std::vector<bool>> adjacent(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && (has_edge(pm.entry(i, j)) || has_edge(pm.entry(j, i)))) adjacent[i][j] = true;
  return connected(n, adjacent);
}

}  // namespace

ModulusResult lambda0(const SquareMatrix& kappa, const SystemParams& params) {
  if (params.n() < 2) throw UsageError("lambda0 needs n >= 2; use lambda0_scalar for n = 1");
  check_shapes(kappa, params);
  const std::size_t n = params.n();
  ModulusResult out;
  out.eta.assign(n, INFINITY);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) out.eta[i] = std::min(out.eta[i], kappa(i, j) * params.m[j]);
  out.lambda0 = modulus_from_eta(kappa, out.eta, params);
  return out;
}

double lambda0_scalar(double kappa, const SystemParams& params) {
  if (params.n() != 1) throw UsageError("lambda0_scalar needs exactly one species");
  params.check();
  return params.m[0] * kappa * params.p[0];
}

std::vector<bool> necessary_condition(const SquareMatrix& kappa, const SystemParams& params) {
  check_shapes(kappa, params);
  std::vector<bool> ok(params.n());
  for (std::size_t i = 0; i < params.n(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < params.n(); ++j) s += kappa(i, j) * params.p[j];
    ok[i] = s > 0.0;
  }
  return ok;
}

bool irreducible(const PotentialMatrix& pm) {
  return graph_connected(pm, [](const ScalarPotential& w) { return !w.gradient_identically_zero(); });
}

bool irreducible_at_distance(const PotentialMatrix& pm, double radius) {
  return graph_connected(
      pm, [radius](const ScalarPotential& w) { return !w.gradient_zero_beyond(radius); });
}

ConfiningReport confining_check(const PotentialMatrix& pm, const SystemParams& params) {
  if (!pm.confining()) throw UsageError("potential has no confining spec (radius, C)");
  const auto& spec = *pm.confining();
  const SquareMatrix& c = spec.tail_convexity;
  check_shapes(c, params);
  const std::size_t n = params.n();

  ConfiningReport out;
  if (n == 1) {
    out.lambda0_tilde = params.m[0] * c(0, 0) * params.p[0];
    out.irreducible_at_distance = true;
    out.verdict = c(0, 0) > 0.0;
    return out;
  }
  out.eta_tilde.assign(n, INFINITY);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) out.eta_tilde[i] = std::min(out.eta_tilde[i], c(i, j) * params.p[j]);
  out.lambda0_tilde = modulus_from_eta(c, out.eta_tilde, params);
  out.irreducible_at_distance = irreducible_at_distance(pm, spec.radius);
  out.verdict = out.lambda0_tilde > 0.0 && out.irreducible_at_distance;
  return out;
}

ConvexityReport analyze(const PotentialMatrix& pm, const SystemParams& params) {
  params.check();
  if (pm.size() != params.n()) throw UsageError("potential and parameters differ in species count");
  ConvexityReport report;
  if (params.n() == 1) {
    report.lambda0 = lambda0_scalar(pm.kappa()(0, 0), params);
  } else {
    auto modulus = lambda0(pm.kappa(), params);
    report.eta = std::move(modulus.eta);
    report.lambda0 = modulus.lambda0;
  }
  report.necessary_ok = necessary_condition(pm.kappa(), params);
  report.irreducible = irreducible(pm);
  if (pm.confining()) report.confining = confining_check(pm, params);
  return report;
}

}  // namespace gradflow
