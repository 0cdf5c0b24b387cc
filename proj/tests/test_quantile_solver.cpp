#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gradflow/errors.hpp"
#include "gradflow/quantile_solver.hpp"

using namespace gradflow;

namespace {

QuantileState random_state(std::mt19937_64& rng, const std::vector<double>& m, const std::vector<double>& p,
                           std::size_t M) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> u(m.size(), std::vector<double>(M));
  for (auto& row : u) {
    for (double& v : row) v = g(rng);
    std::sort(row.begin(), row.end());
  }
  return make_quantile_state(m, p, u);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

TEST_CASE("right-hand side examples") {
  SUBCASE("single quadratic species relaxes to its mean") {
    const double kappa = 1.7, m = 0.8, p = 2.5;
    const auto qs = make_quantile_state({m}, {p}, {{-2.0, -0.3, 0.1, 1.4, 3.0}});
    const auto v = rhs(qs, PotentialMatrix::quadratic(SquareMatrix(1, kappa)));
    const double mu = mean(qs.u[0]);
    for (std::size_t k = 0; k < 5; ++k) {
      // Direct summation of m p (1/M) sum_l kappa (u_l - u_k).
      double direct = 0.0;
      for (double ul : qs.u[0]) direct += m * p / 5.0 * kappa * (ul - qs.u[0][k]);
      CHECK(v[0][k] == doctest::Approx(direct).epsilon(1e-14));
      CHECK(v[0][k] == doctest::Approx(m * kappa * p * (mu - qs.u[0][k])).epsilon(1e-13));
    }
  }
  SUBCASE("Dirac is stationary") {
    const auto qs = make_quantile_state({1.0}, {1.0}, {{0.3, 0.3, 0.3}});
    const auto pm = PotentialMatrix(1, {ScalarPotential::gaussian_ar(1.0, 1.0, 2.0, 0.5)}, SquareMatrix(1, -3.0));
    const auto v = rhs(qs, pm);
    for (double x : v[0]) CHECK(x == 0.0);
  }
  SUBCASE("cross interaction between two Diracs") {
    const double a = 1.3;
    const auto w = ScalarPotential::gaussian_ar(1.0, 1.0, 0.0, 1.0);
    const PotentialMatrix pm(2, {ScalarPotential::zero(), w, w, ScalarPotential::zero()}, SquareMatrix(2));
    const auto qs = make_quantile_state({0.5, 2.0}, {3.0, 0.25}, {{0.0, 0.0}, {a, a}});
    const auto v = rhs(qs, pm);
    for (double x : v[0]) CHECK(x == doctest::Approx(0.5 * 0.25 * w.grad(a)));
    for (double x : v[1]) CHECK(x == doctest::Approx(-2.0 * 3.0 * w.grad(a)));
  }
}

TEST_CASE("a stationary state is a fixed point of the step") {
  const auto qs = make_quantile_state({1.0, 1.0}, {1.0, 2.0}, {{0.5, 0.5}, {0.5, 0.5}});
  const auto pm = PotentialMatrix::quadratic(SquareMatrix{{1.0, 1.0}, {1.0, 1.0}});
  SolverConfig cfg;
  for (auto scheme : {Scheme::euler, Scheme::rk4}) {
    cfg.scheme = scheme;
    CHECK(step(qs, pm, cfg, 0.1).u == qs.u);
  }
}

TEST_CASE("Euler step is the linear contraction map") {
  const auto qs = make_quantile_state({1.0}, {1.0}, {{-1.0, 0.0, 0.5, 2.5}});
  const auto pm = PotentialMatrix::quadratic(SquareMatrix(1, 1.0));
  SolverConfig cfg;
  cfg.scheme = Scheme::euler;
  const double dt = 0.1;
  const auto next = step(qs, pm, cfg, dt);
  const double mu = mean(qs.u[0]);
  for (std::size_t k = 0; k < 4; ++k) CHECK(next.u[0][k] - mu == doctest::Approx((1.0 - dt) * (qs.u[0][k] - mu)));
}

TEST_CASE("RK4 is fourth order on the linear system") {
  const auto qs = make_quantile_state({1.0}, {1.0}, {{-1.0, 0.0, 0.5, 2.5}});
  const auto pm = PotentialMatrix::quadratic(SquareMatrix(1, 1.0));
  const double mu = mean(qs.u[0]);
  auto error_at = [&](double dt) {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 1.0;
    cfg.diagnostics = false;
    const auto traj = run(qs, pm, cfg);
    double worst = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double exact = mu + std::exp(-1.0) * (qs.u[0][k] - mu);
      worst = std::max(worst, std::abs(traj.states.back().u[0][k] - exact));
    }
    return worst;
  };
  const double e1 = error_at(0.1);
  const double e2 = error_at(0.05);
  CHECK(e1 < 1e-5);
  CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("run bookkeeping") {
  const auto qs = make_quantile_state({1.0}, {1.0}, {{-1.0, 1.0}});
  const auto pm = PotentialMatrix::quadratic(SquareMatrix(1, 1.0));
  SolverConfig cfg;
  cfg.t_end = 0.0;
  auto traj = run(qs, pm, cfg);
  REQUIRE(traj.states.size() == 1);
  CHECK(traj.states[0].u == qs.u);
  CHECK(traj.times == std::vector<double>{0.0});

  cfg.t_end = 1.0;
  cfg.dt = 0.3;
  cfg.record_every = 2;
  traj = run(qs, pm, cfg);
  CHECK(traj.steps == 4);
  CHECK(traj.times.back() == doctest::Approx(1.0));
  CHECK(traj.times == std::vector<double>{0.0, 0.6, traj.times.back()});
  CHECK(traj.records.size() == traj.states.size());

  const auto plan = plan_steps(1.0, 0.3);
  CHECK(plan.steps == 4);
  CHECK(plan.last_dt == doctest::Approx(0.1));
  CHECK(plan_steps(1.0, 0.25).steps == 4);
  CHECK(plan_steps(0.0, 0.1).steps == 0);

  cfg.dt = -1.0;
  CHECK_THROWS_AS(run(qs, pm, cfg), UsageError);
}

TEST_CASE("weighted center of mass is conserved") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> pos(0.3, 2.0);
  const PotentialMatrix pm(2,
                           {ScalarPotential::double_well(0.1, 0.5), ScalarPotential::gaussian_ar(1.0, 1.0, 0.5, 0.3),
                            ScalarPotential::gaussian_ar(1.0, 1.0, 0.5, 0.3), ScalarPotential::quadratic(1.0)},
                           SquareMatrix{{-1.0, -1.0}, {-1.0, 1.0}});
  for (int trial = 0; trial < 3; ++trial) {
    const auto qs = random_state(rng, {pos(rng), pos(rng)}, {pos(rng), pos(rng)}, 24);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 1.0;
    cfg.record_every = 100;
    const auto traj = run(qs, pm, cfg);
    REQUIRE_FALSE(traj.error);
    double scale = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (double v : qs.u[j]) s += std::abs(v);
      scale += qs.params.p[j] / qs.params.m[j] * s / 24.0;
    }
    const double e0 = weighted_center_of_mass(qs)[0];
    for (const auto& s : traj.states) {
      CHECK(std::abs(weighted_center_of_mass(s)[0] - e0) <= 1e-12 * scale);
      CHECK(s.params == qs.params);
    }
  }
}

TEST_CASE("Euler preserves strict monotonicity gaps") {
  std::mt19937_64 rng(52);
  const PotentialMatrix pm(2,
                           {ScalarPotential::gaussian_ar(1.0, 1.0, 2.0, 0.5), ScalarPotential::quadratic(0.5),
                            ScalarPotential::quadratic(0.5), ScalarPotential::gaussian_ar(0.0, 1.0, 1.0, 1.0)},
                           SquareMatrix{{-8.0, 0.5}, {0.5, -2.0}});
  auto qs = random_state(rng, {1.0, 0.5}, {1.0, 2.0}, 20);
  std::vector<double> rate(2, 0.0);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      rate[i] += qs.params.m[i] * qs.params.p[j] * estimate_lipschitz(pm.entry(i, j), {-15.0, 15.0}, 30001);
  SolverConfig cfg;
  cfg.scheme = Scheme::euler;
  cfg.repair = Repair::none;
  const double dt = 0.01;
  for (int k = 0; k < 200; ++k) {
    const auto gap = min_monotonicity_gap(qs);
    StepReport report;
    qs = step(qs, pm, cfg, dt, &report);
    CHECK(report.monotonicity_violations == 0);
    const auto next = min_monotonicity_gap(qs);
    for (std::size_t i = 0; i < 2; ++i) CHECK(next[i] >= (1.0 - dt * rate[i]) * gap[i] * (1.0 - 1e-9));
  }
}

TEST_CASE("sort repair fixes crossings") {
  // A huge step through a strongly repulsive kernel swaps neighbours.
  const auto qs = make_quantile_state({1.0}, {1.0}, {{-0.01, 0.0, 0.01}});
  const auto pm = PotentialMatrix::quadratic(SquareMatrix(1, 1.0));
  SolverConfig cfg;
  cfg.scheme = Scheme::euler;
  StepReport report;
  const auto next = step(qs, pm, cfg, 3.0, &report);
  CHECK(report.monotonicity_violations > 0);
  CHECK(report.repaired);
  CHECK(next.monotone());
  cfg.repair = Repair::none;
  CHECK_FALSE(step(qs, pm, cfg, 3.0).monotone());
}

TEST_CASE("energy decreases along RK4 trajectories of convex systems") {
  std::mt19937_64 rng(53);
  const auto pm = PotentialMatrix::quadratic(SquareMatrix{{2.0, 1.0}, {1.0, 2.0}});
  const auto qs = random_state(rng, {1.0, 1.0}, {1.0, 1.0}, 64);
  SolverConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 3.0;
  const auto traj = run(qs, pm, cfg);
  for (std::size_t k = 1; k < traj.records.size(); ++k) {
    CHECK(traj.records[k].energy <= traj.records[k - 1].energy + 1e-14);
  }
}

TEST_CASE("support diameter contracts at the predicted rate") {
  const double m = 1.0, kappa = 1.0, p = 2.0;
  std::vector<double> u(64);
  for (std::size_t k = 0; k < 64; ++k) u[k] = std::pow(QuantileState::midpoint(k, 64), 3) + QuantileState::midpoint(k, 64);
  const auto qs = make_quantile_state({m}, {p}, {u});
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 2.0;
  cfg.record_every = 20;
  const auto traj = run(qs, PotentialMatrix::quadratic(SquareMatrix(1, kappa)), cfg);
  const double rate = m * kappa * p;
  const double tol = 10.0 * cfg.dt * rate;
  std::vector<double> t, d;
  for (const auto& r : traj.records) {
    CHECK(r.diam[0] <= std::exp(-rate * r.t) * traj.records[0].diam[0] * (1.0 + tol));
    t.push_back(r.t);
    d.push_back(r.diam[0]);
  }
  CHECK(fit_decay_rate(t, d, {0.2, 2.0}, "diam", rate).rel_err < 0.02);
}

TEST_CASE("stable time step") {
  const auto qs = make_quantile_state({1.0}, {2.0}, {{-1.0, 1.0}});
  const double dt = stable_time_step(qs, PotentialMatrix::quadratic(SquareMatrix(1, 1.0)), 0.2);
  CHECK(std::isfinite(dt));
  CHECK(dt > 0.0);
  CHECK(std::isinf(stable_time_step(qs, PotentialMatrix(1, {ScalarPotential::zero()}, SquareMatrix(1)), 0.2)));
}

TEST_CASE("numeric failure stops the run") {
  const auto qs = make_quantile_state({1.0}, {1.0}, {{-10.0, 10.0}});
  const auto pm = PotentialMatrix(1, {ScalarPotential::power(4.0, -1.0)}, SquareMatrix(1, -1e9));
  SolverConfig cfg;
  cfg.scheme = Scheme::euler;
  cfg.dt = 0.1;
  cfg.t_end = 10.0;
  const auto traj = run(qs, pm, cfg);
  CHECK(traj.error.has_value());
  CHECK_FALSE(traj.states.empty());
}
