// Acceptance battery: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gradflow/config.hpp"
#include "gradflow/convexity.hpp"
#include "gradflow/diagnostics.hpp"
#include "gradflow/measures.hpp"
#include "gradflow/particle_solver.hpp"
#include "gradflow/quantile_solver.hpp"

#ifndef GRADFLOW_CONFIG_DIR
#error "GRADFLOW_CONFIG_DIR must point at the bundled configs"
#endif

using namespace gradflow;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::filesystem::path config_path(const char* name) { return std::filesystem::path(GRADFLOW_CONFIG_DIR) / name; }

QuantileState sorted_normal(std::mt19937_64& rng, const std::vector<double>& m, const std::vector<double>& p,
                            std::size_t M, double spread) {
  std::normal_distribution<double> g(0.0, spread);
  std::vector<std::vector<double>> u(m.size(), std::vector<double>(M));
  for (auto& row : u) {
    for (double& x : row) x = g(rng);
    std::sort(row.begin(), row.end());
  }
  return make_quantile_state(m, p, u);
}

double center_scale(const QuantileState& qs) {
  double s = 0.0;
  for (std::size_t i = 0; i < qs.n(); ++i) {
    double mean_abs = 0.0;
    for (double x : qs.u[i]) mean_abs += std::abs(x);
    s += qs.params.p[i] / qs.params.m[i] * mean_abs / static_cast<double>(qs.M);
  }
  return s;
}

Outcome lambda0_examples() {
  SystemParams unit;
  unit.m = {1.0, 1.0};
  unit.p = {1.0, 1.0};
  unit.E = {0.0};
  const SquareMatrix ks[] = {SquareMatrix{{2.0, 1.0}, {1.0, 2.0}}, SquareMatrix{{-1.0, 2.0}, {2.0, -1.0}},
                             SquareMatrix{{2.0, -1.0}, {-1.0, 2.0}}};
  const double expected[] = {2.0, 1.0, -2.0};
  double got[3];
  const auto start = Clock::now();
  for (int c = 0; c < 3; ++c) got[c] = analyze(PotentialMatrix::quadratic(ks[c]), unit).lambda0;
  const double elapsed = seconds_since(start);
  bool ok = elapsed < 1e-3;
  for (int c = 0; c < 3; ++c) ok = ok && got[c] == expected[c];
  return {ok, "lambda0 = " + num(got[0]) + ", " + num(got[1]) + ", " + num(got[2]) + " in " +
                  num(elapsed * 1e3) + " ms"};
}

Outcome contraction() {
  const auto cfg = parse_config(config_path("convex_pair.json"));
  const double lam = analyze(cfg.potential, cfg.params).lambda0;
  SolverConfig sc = cfg.solver;
  sc.diagnostics = false;
  const auto start = Clock::now();
  const auto a = run(initial_quantiles(cfg), cfg.potential, sc);
  const auto b = run(alternate_quantiles(cfg), cfg.potential, sc);
  const double elapsed = seconds_since(start);
  if (a.error || b.error || a.states.size() != b.states.size()) return {false, "runs did not complete"};
  const double d0 = compound_distance(a.states[0], b.states[0]);
  if (!(d0 > 0.0)) return {false, "initial data coincide"};
  double worst = 0.0;
  for (std::size_t s = 0; s < a.states.size(); ++s) {
    const double d = compound_distance(a.states[s], b.states[s]);
    worst = std::max(worst, d / (std::exp(-lam * a.times[s]) * d0));
  }
  const bool ok = worst <= 1.05 && elapsed < 30.0 && cfg.M == 256 && sc.dt == 1e-3 && sc.t_end == 3.0;
  return {ok, "max dist(t) / (e^{-" + num(lam) + "t} dist(0)) = " + num(worst) + " over " +
                  std::to_string(a.states.size()) + " samples, dist(0) = " + num(d0) + ", both runs " +
                  num(elapsed) + " s"};
}

Outcome ground_state_convergence() {
  ConfigOverrides o;
  o.t_end = 10.0;
  const auto cfg = parse_config(config_path("convex_pair.json"), o);
  const double lam = analyze(cfg.potential, cfg.params).lambda0;
  const auto traj = run(initial_quantiles(cfg), cfg.potential, cfg.solver);
  if (traj.error) return {false, *traj.error};
  const auto& final_state = traj.states.back();
  const auto ground = ground_state(final_state.params, final_state.M);
  double winf = 0.0;
  for (std::size_t i = 0; i < final_state.n(); ++i) winf = std::max(winf, winf_distance(final_state, ground, i));
  std::vector<double> t, w;
  for (const auto& r : traj.records) {
    t.push_back(r.t);
    w.push_back(r.w2_to_ground);
  }
  const auto fit = fit_decay_rate(t, w, {1.0, 10.0}, "w2_to_ground", lam);
  const bool ok = traj.times.back() == 10.0 && winf < 1e-3 && fit.rel_err <= 0.05;
  return {ok, "W_inf(t=10) = " + num(winf) + ", fitted rate " + num(fit.fitted_rate) + " vs " + num(lam) +
                  " (rel err " + num(fit.rel_err) + ")"};
}

Outcome delta_separation() {
  const auto pm = PotentialMatrix::quadratic(SquareMatrix(1, 1.0));
  const std::size_t M = 256;
  std::vector<double> u(M);
  for (std::size_t k = 0; k < M; ++k) {
    const double z = 2.0 * QuantileState::midpoint(k, M) - 1.0;
    u[k] = z * z * z + 0.5 * z;
  }
  const auto q0 = make_quantile_state({1.0}, {2.0}, {u});
  SolverConfig sc;
  sc.dt = 1e-3;
  sc.t_end = 3.0;
  sc.record_every = 10;
  const auto traj = run(q0, pm, sc);
  if (traj.error) return {false, *traj.error};
  std::vector<double> t, diam;
  double worst = 0.0;
  for (const auto& r : traj.records) {
    t.push_back(r.t);
    diam.push_back(r.diam[0]);
    worst = std::max(worst, r.diam[0] / (std::exp(-2.0 * r.t) * traj.records.front().diam[0]));
  }
  const auto fit = fit_decay_rate(t, diam, {0.0, 3.0}, "diam", 2.0);
  const bool ok = fit.rel_err <= 0.02 && worst <= 1.01;
  return {ok, "fitted diameter rate " + num(fit.fitted_rate) + " (rel err " + num(fit.rel_err) +
                  "), max diam / bound = " + num(worst)};
}

ScalarPotential random_kernel(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(0.2, 1.5);
  switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
    case 0: return ScalarPotential::quadratic(c(rng));
    case 1: return ScalarPotential::gaussian_ar(c(rng), c(rng), c(rng), c(rng));
    case 2: return ScalarPotential::morse(c(rng), c(rng), c(rng), c(rng), 0.3);
    case 3: return ScalarPotential::double_well(0.1 * c(rng), c(rng));
    default: return ScalarPotential::sum({ScalarPotential::quadratic(c(rng)), ScalarPotential::power(1.5, c(rng))});
  }
}

Outcome conservation() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  double worst = 0.0;
  for (int sys = 0; sys < 10; ++sys) {
    const std::size_t n = 1 + static_cast<std::size_t>(sys % 3);
    std::vector<ScalarPotential> entries(n * n);
    SquareMatrix kappa(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        entries[i * n + j] = entries[j * n + i] = random_kernel(rng);
        kappa(i, j) = kappa(j, i) = estimate_semiconvexity(entries[i * n + j], {-10.0, 10.0}, 2001);
      }
    const PotentialMatrix pm(n, std::move(entries), kappa);
    std::vector<double> m(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = pos(rng);
      p[i] = pos(rng);
    }
    const auto q0 = sorted_normal(rng, m, p, 64, 1.0);
    SolverConfig sc;
    sc.dt = std::min(1e-2, stable_time_step(q0, pm, 0.2));
    sc.t_end = 1000.0 * sc.dt;
    sc.record_every = 100;
    sc.diagnostics = false;
    const auto traj = run(q0, pm, sc);
    if (traj.error) return {false, "system " + std::to_string(sys) + ": " + *traj.error};
    if (traj.steps != 1000) return {false, "system " + std::to_string(sys) + " took " + std::to_string(traj.steps) + " steps"};
    const double e0 = weighted_center_of_mass(q0)[0];
    const double scale = center_scale(q0);
    for (const auto& s : traj.states) worst = std::max(worst, std::abs(weighted_center_of_mass(s)[0] - e0) / scale);
  }
  return {worst <= 1e-12, "max relative drift " + num(worst) + " over 10 systems x 1000 RK4 steps"};
}

Outcome dissipation_identity() {
  ConfigOverrides o;
  o.dt = 1e-4;
  o.t_end = 0.5;
  const auto cfg = parse_config(config_path("convex_pair.json"), o);
  SolverConfig sc = cfg.solver;
  sc.record_every = 1;
  sc.diagnostics = false;
  const auto traj = run(initial_quantiles(cfg), cfg.potential, sc);
  if (traj.error) return {false, *traj.error};
  const double dt = sc.dt;
  const double tol = std::max(1e-6, 5.0 * dt * dt);
  double worst = 0.0;
  for (std::size_t s = 1; s <= 50; ++s) {
    const std::size_t k = 100 * s - 50;
    const double fd = (energy(traj.states[k + 1], cfg.potential) - energy(traj.states[k - 1], cfg.potential)) / (2.0 * dt);
    const double d = dissipation(traj.states[k], cfg.potential);
    worst = std::max(worst, std::abs(fd - d) / std::abs(d));
  }
  return {worst <= tol, "max relative mismatch " + num(worst) + " at 50 times (dt = " + num(dt) + ", tol " + num(tol) + ")"};
}

Outcome gradient_consistency() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> w(0.2, 1.5);
  const auto cross = ScalarPotential::gaussian_ar(1.0, 1.0, 0.6, 0.4);
  const PotentialMatrix pm(2,
                           {ScalarPotential::morse(1.0, 1.0, 0.8, 0.5, 0.2), cross, cross,
                            ScalarPotential::sum({ScalarPotential::quadratic(0.3), ScalarPotential::double_well(0.05, 0.5)})},
                           SquareMatrix{{-3.0, -1.0}, {-1.0, -1.0}});
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 2);
    std::vector<ParticleSpecies> species(2);
    for (auto& s : species)
      for (std::size_t k = 0; k < 8; ++k) {
        for (std::size_t c = 0; c < d; ++c) s.x.push_back(g(rng));
        s.mass.push_back(w(rng));
      }
    auto ps = make_particle_state({w(rng), w(rng)}, d, species);
    const auto v = particle_rhs(ps, pm);
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t k = 0; k < 8; ++k)
        for (std::size_t c = 0; c < d; ++c) {
          double& x = ps.species[i].x[k * d + c];
          const double saved = x;
          const double h = 1e-5;
          x = saved + h;
          const double up = discrete_energy(ps, pm);
          x = saved - h;
          const double down = discrete_energy(ps, pm);
          x = saved;
          const double fd = -ps.params.m[i] / ps.species[i].mass[k] * (up - down) / (2.0 * h);
          err = std::max(err, std::abs(v[i][k * d + c] - fd));
          norm = std::max(norm, std::abs(fd));
        }
    worst = std::max(worst, err / norm);
  }
  return {worst <= 1e-5, "max relative error " + num(worst) + " over 20 configurations"};
}

Outcome cross_solver() {
  std::mt19937_64 rng(8);
  const auto q0 = sorted_normal(rng, {1.0, 0.5}, {1.0, 2.0}, 64, 1.0);
  const auto cross = ScalarPotential::gaussian_ar(1.0, 1.0, 0.5, 0.5);
  const PotentialMatrix pm(2, {ScalarPotential::morse(1.0, 2.0, 1.5, 0.5, 0.2), cross, cross, ScalarPotential::quadratic(1.0)},
                           SquareMatrix{{-6.0, -1.0}, {-1.0, 1.0}});
  SolverConfig sc;
  sc.dt = 1e-2;
  sc.t_end = 1.0;
  sc.record_every = 1;
  sc.diagnostics = false;
  const auto qt = run(q0, pm, sc);
  const auto pt = run_particles(particles_from_quantile(q0), pm, sc);
  if (qt.error || pt.error || qt.states.size() != pt.states.size()) return {false, "runs did not complete"};
  double worst = 0.0;
  for (std::size_t s = 0; s < qt.states.size(); ++s)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t k = 0; k < 64; ++k)
        worst = std::max(worst, std::abs(qt.states[s].u[i][k] - pt.states[s].species[i].x[k]));
  return {worst <= 1e-10, "max discrepancy " + num(worst) + " over " + std::to_string(qt.states.size()) +
                              " samples, repair events " + std::to_string(qt.repair_events)};
}

Outcome finite_propagation() {
  const auto cfg = parse_config(config_path("confining.json"));
  const auto rep = confining_check(cfg.potential, cfg.params);
  if (!rep.verdict) return {false, "confining_check rejects the confining config"};
  SolverConfig sc = cfg.solver;
  const auto traj = run(initial_quantiles(cfg), cfg.potential, sc);
  if (traj.error) return {false, *traj.error};
  const DiagnosticsRecord* mid = nullptr;
  for (const auto& r : traj.records)
    if (std::abs(r.t - 25.0) < 1e-9) mid = &r;
  const auto& last = traj.records.back();
  if (!mid || std::abs(last.t - 50.0) > 1e-9) return {false, "no samples at t = 25 and t = 50"};
  double shift = 0.0, sup = 0.0;
  for (std::size_t i = 0; i < cfg.params.n(); ++i) {
    shift = std::max({shift, std::abs(last.supp_lo[i] - mid->supp_lo[i]), std::abs(last.supp_hi[i] - mid->supp_hi[i])});
    for (const auto& r : traj.records) sup = std::max({sup, std::abs(r.supp_lo[i]), std::abs(r.supp_hi[i])});
  }

  const auto rcfg = parse_config(config_path("repulsive.json"));
  const auto rtraj = run(initial_quantiles(rcfg), rcfg.potential, rcfg.solver);
  if (rtraj.error) return {false, "repulsive run: " + *rtraj.error};
  bool finite = true, growing = true;
  for (std::size_t s = 0; s < rtraj.records.size(); ++s) {
    finite = finite && std::isfinite(rtraj.records[s].diam[0]);
    if (s > 0) growing = growing && rtraj.records[s].diam[0] >= rtraj.records[s - 1].diam[0];
  }
  const double d0 = rtraj.records.front().diam[0], d5 = rtraj.records.back().diam[0];
  const bool ok = shift < 1e-3 && finite && growing && d5 > d0 && rcfg.params.n() == 1 && rcfg.potential.kappa()(0, 0) < 0.0 && rtraj.times.back() == 5.0;
  return {ok, "confining: supp shift between t = 25 and 50 is " + num(shift) + ", sup |supp| = " + num(sup) +
                  "; repulsive: diam " + num(d0) + " -> " + num(d5) + " on [0, 5]"};
}

Outcome no_blowup() {
  const auto cross = ScalarPotential::quadratic(0.5);
  const auto self1 = ScalarPotential::gaussian_ar(2.0, 1.0, 0.5, 0.5);
  const auto self2 = ScalarPotential::morse(1.5, 1.0, 0.5, 0.5, 0.2);
  SquareMatrix kappa{{0.0, 0.5}, {0.5, 0.0}};
  kappa(0, 0) = estimate_semiconvexity(self1, {-12.0, 12.0}, 4001);
  kappa(1, 1) = estimate_semiconvexity(self2, {-12.0, 12.0}, 4001);
  const PotentialMatrix pm(2, {self1, cross, cross, self2}, kappa);
  const std::size_t M = 128;
  std::vector<std::vector<double>> u(2, std::vector<double>(M));
  for (std::size_t k = 0; k < M; ++k) {
    const double z = 2.0 * QuantileState::midpoint(k, M) - 1.0;
    u[0][k] = 0.3 * z + 0.2 * z * z * z;
    u[1][k] = 1.0 + 0.5 * z;
  }
  const auto q0 = make_quantile_state({1.0, 2.0}, {1.5, 1.0}, u);
  const auto gap0 = min_monotonicity_gap(q0);
  const double reach = 12.0;
  std::vector<double> rate(2, 0.0);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      rate[i] += q0.params.m[i] * q0.params.p[j] * estimate_lipschitz(pm.entry(i, j), {-reach, reach}, 4001);
  SolverConfig sc;
  sc.dt = 1e-3;
  sc.t_end = 2.0;
  sc.record_every = 10;
  sc.repair = Repair::none;
  const auto traj = run(q0, pm, sc);
  if (traj.error) return {false, *traj.error};
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : traj.records)
    for (std::size_t i = 0; i < 2; ++i) worst = std::min(worst, r.min_gap[i] / (std::exp(-rate[i] * r.t) * gap0[i]));
  const auto& last = traj.records.back();
  const bool ok = worst >= 0.9 && traj.repair_events == 0 && traj.monotonicity_events == 0;
  return {ok, "min gap / (e^{-Ct} gap(0)) = " + num(worst) + " with C = (" + num(rate[0]) + ", " + num(rate[1]) +
                  "), gap(2) / gap(0) = (" + num(last.min_gap[0] / gap0[0]) + ", " + num(last.min_gap[1] / gap0[1]) +
                  "), repair events " + std::to_string(traj.repair_events)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> body;
  };
  const Criterion criteria[] = {
      {"lambda0 worked examples", lambda0_examples},
      {"contraction", contraction},
      {"ground-state convergence", ground_state_convergence},
      {"delta-separation", delta_separation},
      {"center-of-mass conservation", conservation},
      {"dissipation identity", dissipation_identity},
      {"gradient-flow consistency", gradient_consistency},
      {"cross-solver agreement", cross_solver},
      {"finite propagation and confinement", finite_propagation},
      {"no blow-up", no_blowup},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    const auto start = Clock::now();
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(start);
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(), elapsed);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
