#include "gradflow/particle_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gradflow/errors.hpp"

namespace gradflow {

namespace {

double norm(std::span<const double> z) {
  if (z.size() == 1) return std::abs(z[0]);
  double s = 0.0;
  for (double c : z) s += c * c;
  return std::sqrt(s);
}

}  // namespace

void radial_gradient(const ScalarPotential& w, std::span<const double> z, std::span<double> out) {
  const double r = norm(z);
  if (r == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double g = w.derivative(r);
  for (std::size_t c = 0; c < z.size(); ++c) out[c] = g * (z[c] / r);
}

ParticleField particle_rhs(const ParticleState& ps, const PotentialMatrix& pm) {
  const std::size_t n = ps.n();
  const std::size_t d = ps.d();
  if (pm.size() != n) throw UsageError("potential and state differ in species count");
  ParticleField v(n);
  std::vector<double> diff(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& si = ps.species[i];
    v[i].assign(si.count() * d, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& sj = ps.species[j];
      pm.entry(i, j).visit([&](const auto& kern) {
        for (std::size_t k = 0; k < si.count(); ++k) {
          double* out = v[i].data() + k * d;
          const double* xi = si.x.data() + k * d;
          for (std::size_t l = 0; l < sj.count(); ++l) {
            const double* xj = sj.x.data() + l * d;
            double r2 = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
              diff[c] = xi[c] - xj[c];
              r2 += diff[c] * diff[c];
            }
            const double r = d == 1 ? std::abs(diff[0]) : std::sqrt(r2);
            if (r == 0.0) continue;
            const double g = sj.mass[l] * kern.derivative(r);
            for (std::size_t c = 0; c < d; ++c) out[c] += g * (diff[c] / r);
          }
        }
      });
    }
    const double m = ps.params.m[i];
    for (std::size_t q = 0; q < v[i].size(); ++q) {
      v[i][q] *= -m;
      if (!std::isfinite(v[i][q])) {
        std::ostringstream os;
        os << "non-finite force on particle " << q / d << " of species " << i;
        throw NumericError(os.str());
      }
    }
  }
  return v;
}

double discrete_energy(const ParticleState& ps, const PotentialMatrix& pm) {
  const std::size_t n = ps.n();
  const std::size_t d = ps.d();
  if (pm.size() != n) throw UsageError("potential and state differ in species count");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& si = ps.species[i];
    for (std::size_t j = 0; j < n; ++j) {
      const auto& sj = ps.species[j];
      pm.entry(i, j).visit([&](const auto& kern) {
        for (std::size_t k = 0; k < si.count(); ++k) {
          double row = 0.0;
          for (std::size_t l = 0; l < sj.count(); ++l) {
            double r2 = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
              const double z = si.x[k * d + c] - sj.x[l * d + c];
              r2 += z * z;
            }
            row += sj.mass[l] * kern.value(std::sqrt(r2));
          }
          total += si.mass[k] * row;
        }
      });
    }
  }
  return 0.5 * total;
}

double discrete_metric(const ParticleState& a, const ParticleState& b) {
  if (a.n() != b.n() || a.d() != b.d() || a.params.m != b.params.m) {
    throw UsageError("discrete_metric: states differ in shape");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.n(); ++i) {
    const auto& sa = a.species[i];
    const auto& sb = b.species[i];
    if (sa.count() != sb.count() || sa.mass != sb.mass) {
      throw UsageError("discrete_metric: particle counts or masses differ");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < sa.count(); ++k) {
      double sq = 0.0;
      for (std::size_t c = 0; c < a.d(); ++c) {
        const double z = sa.x[k * a.d() + c] - sb.x[k * a.d() + c];
        sq += z * z;
      }
      s += sa.mass[k] * sq;
    }
    total += s / a.params.m[i];
  }
  return std::sqrt(total);
}

namespace {

ParticleState advanced(const ParticleState& base, const ParticleField& v, double h) {
  ParticleState out = base;
  for (std::size_t i = 0; i < out.n(); ++i)
    for (std::size_t q = 0; q < out.species[i].x.size(); ++q) out.species[i].x[q] += h * v[i][q];
  return out;
}

}  // namespace

ParticleState particle_step(const ParticleState& ps, const PotentialMatrix& pm,
                            const SolverConfig& cfg, double dt) {
  ParticleState next;
  if (cfg.scheme == Scheme::euler) {
    next = advanced(ps, particle_rhs(ps, pm), dt);
  } else {
    const ParticleField k1 = particle_rhs(ps, pm);
    const ParticleField k2 = particle_rhs(advanced(ps, k1, 0.5 * dt), pm);
    const ParticleField k3 = particle_rhs(advanced(ps, k2, 0.5 * dt), pm);
    const ParticleField k4 = particle_rhs(advanced(ps, k3, dt), pm);
    next = ps;
    const double sixth = dt / 6.0;
    for (std::size_t i = 0; i < next.n(); ++i)
      for (std::size_t q = 0; q < next.species[i].x.size(); ++q)
        next.species[i].x[q] += sixth * (k1[i][q] + 2.0 * k2[i][q] + 2.0 * k3[i][q] + k4[i][q]);
  }
  for (const auto& s : next.species)
    for (double x : s.x)
      if (!std::isfinite(x)) throw NumericError("non-finite particle position after step");
  return next;
}

ParticleTrajectory run_particles(const ParticleState& initial, const PotentialMatrix& pm,
                                 const SolverConfig& cfg) {
  cfg.check();
  initial.check();
  if (pm.size() != initial.n()) throw UsageError("potential and state differ in species count");

  ParticleTrajectory traj;
  traj.dt = cfg.dt;
  auto sample = [&](const ParticleState& ps, double t) {
    traj.times.push_back(t);
    traj.states.push_back(ps);
    traj.energies.push_back(discrete_energy(ps, pm));
  };

  const StepPlan plan = plan_steps(cfg.t_end, cfg.dt);
  ParticleState current = initial;
  try {
    sample(current, 0.0);
    for (std::size_t s = 1; s <= plan.steps; ++s) {
      const bool last = s == plan.steps;
      current = particle_step(current, pm, cfg, last ? plan.last_dt : cfg.dt);
      traj.steps = s;
      if (last || s % cfg.record_every == 0) {
        sample(current, last ? cfg.t_end : cfg.dt * static_cast<double>(s));
      }
    }
  } catch (const NumericError& e) {
    traj.error = e.what();
  }
  return traj;
}

double stable_time_step(const ParticleState& ps, const PotentialMatrix& pm, double cfl_safety) {
  const std::size_t d = ps.d();
  std::vector<double> lo(d, INFINITY), hi(d, -INFINITY);
  for (const auto& s : ps.species)
    for (std::size_t q = 0; q < s.x.size(); ++q) {
      lo[q % d] = std::min(lo[q % d], s.x[q]);
      hi[q % d] = std::max(hi[q % d], s.x[q]);
    }
  double diag = 0.0;
  for (std::size_t c = 0; c < d; ++c) diag += (hi[c] - lo[c]) * (hi[c] - lo[c]);
  const double width = std::max(std::sqrt(diag), 1e-6);
  double worst = 0.0;
  for (std::size_t i = 0; i < ps.n(); ++i) {
    double rate = 0.0;
    for (std::size_t j = 0; j < ps.n(); ++j) {
      rate += estimate_growth_bound(pm.entry(i, j), {-width, width}, 201) * ps.params.p[j];
    }
    worst = std::max(worst, ps.params.m[i] * rate * (1.0 + width));
  }
  return worst > 0.0 ? cfl_safety / worst : INFINITY;
}

}  // namespace gradflow
