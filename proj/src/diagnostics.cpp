#include "gradflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gradflow/errors.hpp"

namespace gradflow {

namespace {

// sum_l kern'(x - ys[l]) with four independent partial sums; the summation
// order is fixed, so results are reproducible.
template <class Kernel>
double sum_derivatives(const Kernel& kern, double x, const std::vector<double>& ys) {
  const std::size_t m = ys.size();
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t l = 0;
  for (; l + 4 <= m; l += 4) {
    a0 += kern.derivative(x - ys[l]);
    a1 += kern.derivative(x - ys[l + 1]);
    a2 += kern.derivative(x - ys[l + 2]);
    a3 += kern.derivative(x - ys[l + 3]);
  }
  for (; l < m; ++l) a0 += kern.derivative(x - ys[l]);
  return (a0 + a1) + (a2 + a3);
}

template <class Kernel>
double sum_values(const Kernel& kern, double x, const std::vector<double>& ys) {
  const std::size_t m = ys.size();
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t l = 0;
  for (; l + 4 <= m; l += 4) {
    a0 += kern.value(x - ys[l]);
    a1 += kern.value(x - ys[l + 1]);
    a2 += kern.value(x - ys[l + 2]);
    a3 += kern.value(x - ys[l + 3]);
  }
  for (; l < m; ++l) a0 += kern.value(x - ys[l]);
  return (a0 + a1) + (a2 + a3);
}

[[noreturn]] void report_non_finite(const QuantileState& qs, const PotentialMatrix& pm,
                                    std::size_t i, std::size_t k) {
  for (std::size_t j = 0; j < qs.n(); ++j) {
    for (std::size_t l = 0; l < qs.M; ++l) {
      if (!std::isfinite(pm.entry(i, j).derivative(qs.u[i][k] - qs.u[j][l]))) {
        std::ostringstream os;
        os << "non-finite interaction W'_" << i << j << " between cell " << k << " of species "
           << i << " and cell " << l << " of species " << j;
        throw NumericError(os.str());
      }
    }
  }
  std::ostringstream os;
  os << "interaction field overflowed at cell " << k << " of species " << i;
  throw NumericError(os.str());
}

}  // namespace

Field interaction_field(const QuantileState& qs, const PotentialMatrix& pm) {
  const std::size_t n = qs.n();
  if (pm.size() != n) throw UsageError("potential and state differ in species count");
  const double inv_m = 1.0 / static_cast<double>(qs.M);
  Field inner(n, std::vector<double>(qs.M, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    auto& out = inner[i];
    const auto& ui = qs.u[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double weight = qs.params.p[j] * inv_m;
      const auto& uj = qs.u[j];
      pm.entry(i, j).visit([&](const auto& kern) {
        for (std::size_t k = 0; k < qs.M; ++k) out[k] += weight * sum_derivatives(kern, ui[k], uj);
      });
    }
    for (std::size_t k = 0; k < qs.M; ++k)
      if (!std::isfinite(out[k])) report_non_finite(qs, pm, i, k);
  }
  return inner;
}

double energy(const QuantileState& qs, const PotentialMatrix& pm) {
  const std::size_t n = qs.n();
  if (pm.size() != n) throw UsageError("potential and state differ in species count");
  const double inv_m = 1.0 / static_cast<double>(qs.M);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double pair = 0.0;
      pm.entry(i, j).visit([&](const auto& kern) {
        for (double x : qs.u[i]) pair += sum_values(kern, x, qs.u[j]);
      });
      total += qs.params.p[i] * qs.params.p[j] * inv_m * inv_m * pair;
    }
  }
  return 0.5 * total;
}

double dissipation(const QuantileState& qs, const Field& inner) {
  double total = 0.0;
  for (std::size_t i = 0; i < qs.n(); ++i) {
    double sq = 0.0;
    for (double v : inner[i]) sq += v * v;
    total += qs.params.m[i] * qs.params.p[i] / static_cast<double>(qs.M) * sq;
  }
  return -total;
}

double dissipation(const QuantileState& qs, const PotentialMatrix& pm) {
  return dissipation(qs, interaction_field(qs, pm));
}

QuantileState ground_state(const SystemParams& params, std::size_t M) {
  params.check();
  if (params.d != 1) throw UsageError("quantile ground state is one-dimensional");
  double weight = 0.0;
  for (std::size_t j = 0; j < params.n(); ++j) weight += params.p[j] / params.m[j];
  const double x_inf = params.E[0] / weight;
  QuantileState qs;
  qs.params = params;
  qs.M = M;
  qs.u.assign(params.n(), std::vector<double>(M, x_inf));
  return qs;
}

Support support_and_diameter(const QuantileState& qs) {
  Support s;
  for (const auto& row : qs.u) {
    s.lo.push_back(row.front());
    s.hi.push_back(row.back());
    s.diam.push_back(row.back() - row.front());
  }
  return s;
}

std::vector<double> min_monotonicity_gap(const QuantileState& qs) {
  std::vector<double> gaps;
  for (const auto& row : qs.u) {
    double g = row.size() > 1 ? INFINITY : 0.0;
    for (std::size_t k = 1; k < row.size(); ++k) g = std::min(g, row[k] - row[k - 1]);
    gaps.push_back(g);
  }
  return gaps;
}

DiagnosticsRecord diagnose(const QuantileState& qs, const PotentialMatrix& pm, double t) {
  DiagnosticsRecord r;
  r.t = t;
  r.energy = energy(qs, pm);
  r.dissipation = dissipation(qs, pm);
  r.E_invariant = weighted_center_of_mass(qs)[0];
  auto support = support_and_diameter(qs);
  r.supp_lo = std::move(support.lo);
  r.supp_hi = std::move(support.hi);
  r.diam = std::move(support.diam);
  r.min_gap = min_monotonicity_gap(qs);
  r.w2_to_ground = compound_distance(qs, ground_state(qs.params, qs.M));
  for (const auto& row : qs.u)
    for (std::size_t k = 1; k < row.size(); ++k)
      if (row[k] < row[k - 1]) ++r.monotonicity_violations;
  return r;
}

RateFit fit_decay_rate(std::span<const double> t, std::span<const double> values,
                       TimeWindow window, std::string quantity, double predicted_rate) {
  if (t.size() != values.size()) throw UsageError("fit_decay_rate: series lengths differ");
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < window.lo || t[k] > window.hi) continue;
    if (!(values[k] > 0.0)) {
      throw UsageError("fit_decay_rate: nonpositive value in window (decayed to roundoff?)");
    }
    xs.push_back(t[k]);
    ys.push_back(std::log(values[k]));
  }
  if (xs.size() < 3) throw UsageError("fit_decay_rate: fewer than 3 points in window");

  const double count = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  if (sxx == 0.0) throw UsageError("fit_decay_rate: window contains a single time");
  const double slope = sxy / sxx;

  RateFit fit;
  fit.quantity = std::move(quantity);
  fit.fitted_rate = -slope;
  fit.predicted_rate = predicted_rate;
  fit.rel_err = predicted_rate != 0.0 ? std::abs(fit.fitted_rate - predicted_rate) / std::abs(predicted_rate)
                                      : std::abs(fit.fitted_rate);
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.t_lo = xs.front();
  fit.t_hi = xs.back();
  fit.points = xs.size();
  return fit;
}

SteadyStateVerdict steady_state_check(const QuantileState& final_state, const PotentialMatrix& pm,
                                      double tol) {
  const Field inner = interaction_field(final_state, pm);
  SteadyStateVerdict v;
  v.dissipation = dissipation(final_state, inner);
  v.energy = energy(final_state, pm);
  for (const auto& row : inner) {
    double worst = 0.0;
    for (double x : row) worst = std::max(worst, std::abs(x));
    v.residual.push_back(worst);
  }
  v.steady = std::abs(v.dissipation) < tol * (1.0 + std::abs(v.energy));
  return v;
}

SteadyStateVerdict steady_state_check(const Trajectory& traj, const PotentialMatrix& pm,
                                      double tol) {
  if (traj.states.empty()) throw UsageError("steady_state_check: empty trajectory");
  return steady_state_check(traj.states.back(), pm, tol);
}

}  // namespace gradflow
