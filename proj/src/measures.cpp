#include "gradflow/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gradflow/errors.hpp"

namespace gradflow {

void QuantileState::check() const {
  params.check();
  if (params.d != 1) throw UsageError("quantile states are one-dimensional");
  if (u.size() != params.n()) throw UsageError("quantile state: species count mismatch");
  if (M == 0) throw UsageError("quantile state: resolution must be positive");
  for (const auto& row : u) {
    if (row.size() != M) throw UsageError("quantile state: every species needs M cells");
    for (double v : row)
      if (!std::isfinite(v)) throw NumericError("quantile state: non-finite value");
  }
}

bool QuantileState::monotone() const noexcept {
  return std::all_of(u.begin(), u.end(),
                     [](const std::vector<double>& row) { return std::is_sorted(row.begin(), row.end()); });
}

QuantileState make_quantile_state(std::vector<double> m, std::vector<double> p,
                                  std::vector<std::vector<double>> u) {
  QuantileState qs;
  qs.M = u.empty() ? 0 : u.front().size();
  qs.params.m = std::move(m);
  qs.params.p = std::move(p);
  qs.params.d = 1;
  qs.u = std::move(u);
  qs.params.E = {0.0};
  qs.params.E = weighted_center_of_mass(qs);
  qs.check();
  return qs;
}

void ParticleState::check() const {
  params.check();
  if (species.size() != params.n()) throw UsageError("particle state: species count mismatch");
  for (std::size_t i = 0; i < species.size(); ++i) {
    const auto& s = species[i];
    if (s.count() == 0) throw UsageError("particle state: every species needs a particle");
    if (s.x.size() != s.count() * params.d) {
      throw UsageError("particle state: positions must have count * d entries");
    }
    for (double v : s.x)
      if (!std::isfinite(v)) throw NumericError("particle state: non-finite position");
    double total = 0.0;
    for (double w : s.mass) {
      if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("particle masses must be positive");
      total += w;
    }
    if (std::abs(total - params.p[i]) > 1e-12 * params.p[i]) {
      throw DomainError("particle masses do not add up to the species mass");
    }
  }
}

ParticleState make_particle_state(std::vector<double> m, std::size_t d,
                                  std::vector<ParticleSpecies> species) {
  ParticleState ps;
  ps.params.m = std::move(m);
  ps.params.d = d;
  ps.params.p.resize(species.size());
  for (std::size_t i = 0; i < species.size(); ++i) {
    ps.params.p[i] = std::accumulate(species[i].mass.begin(), species[i].mass.end(), 0.0);
  }
  ps.species = std::move(species);
  ps.params.E.assign(d, 0.0);
  ps.params.E = weighted_center_of_mass(ps);
  ps.check();
  return ps;
}

QuantileState quantile_from_particles(const ParticleState& ps, std::size_t M) {
  if (ps.d() != 1) throw UsageError("quantile_from_particles requires d = 1");
  if (M == 0) throw UsageError("quantile resolution must be positive");
  ps.check();
  QuantileState qs;
  qs.params = ps.params;
  qs.M = M;
  qs.u.resize(ps.n());
  for (std::size_t i = 0; i < ps.n(); ++i) {
    const auto& s = ps.species[i];
    std::vector<std::size_t> order(s.count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
    const double total = std::accumulate(s.mass.begin(), s.mass.end(), 0.0);

    auto& row = qs.u[i];
    row.resize(M);
    std::size_t next = 0;
    double cumulative = s.mass[order[0]] / total;
    for (std::size_t k = 0; k < M; ++k) {
      const double z = QuantileState::midpoint(k, M);
      // inf{x : F(x) > z}
      while (!(cumulative > z) && next + 1 < order.size()) {
        ++next;
        cumulative += s.mass[order[next]] / total;
      }
      row[k] = s.x[order[next]];
    }
  }
  return qs;
}

ParticleState particles_from_quantile(const QuantileState& qs) {
  qs.check();
  ParticleState ps;
  ps.params = qs.params;
  ps.species.resize(qs.n());
  for (std::size_t i = 0; i < qs.n(); ++i) {
    ps.species[i].x = qs.u[i];
    ps.species[i].mass.assign(qs.M, qs.params.p[i] / static_cast<double>(qs.M));
  }
  return ps;
}

namespace {

void check_comparable(const QuantileState& a, const QuantileState& b) {
  if (a.n() != b.n() || a.M != b.M) throw UsageError("quantile states differ in shape");
  if (a.params.m != b.params.m || a.params.p != b.params.p) {
    throw UsageError("quantile states differ in mobilities or masses");
  }
  for (std::size_t i = 0; i < a.n(); ++i) {
    if (a.u[i].size() != a.M || b.u[i].size() != b.M) {
      throw UsageError("quantile state rows have the wrong length");
    }
  }
}

}  // namespace

double compound_distance(const QuantileState& a, const QuantileState& b) {
  check_comparable(a, b);
  double total = 0.0;
  for (std::size_t j = 0; j < a.n(); ++j) {
    double sq = 0.0;
    for (std::size_t k = 0; k < a.M; ++k) {
      const double d = a.u[j][k] - b.u[j][k];
      sq += d * d;
    }
    total += sq * a.params.p[j] / (a.params.m[j] * static_cast<double>(a.M));
  }
  return std::sqrt(total);
}

double w1_distance(const QuantileState& a, const QuantileState& b, std::size_t i) {
  check_comparable(a, b);
  if (i >= a.n()) throw UsageError("species index out of range");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.M; ++k) sum += std::abs(a.u[i][k] - b.u[i][k]);
  return a.params.p[i] / static_cast<double>(a.M) * sum;
}

double winf_distance(const QuantileState& a, const QuantileState& b, std::size_t i) {
  check_comparable(a, b);
  if (i >= a.n()) throw UsageError("species index out of range");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.M; ++k) worst = std::max(worst, std::abs(a.u[i][k] - b.u[i][k]));
  return worst;
}

std::vector<double> weighted_center_of_mass(const QuantileState& qs) {
  double e = 0.0;
  for (std::size_t j = 0; j < qs.n(); ++j) {
    const double mean =
        std::accumulate(qs.u[j].begin(), qs.u[j].end(), 0.0) / static_cast<double>(qs.u[j].size());
    e += qs.params.p[j] / qs.params.m[j] * mean;
  }
  return {e};
}

std::vector<double> weighted_center_of_mass(const ParticleState& ps) {
  std::vector<double> e(ps.d(), 0.0);
  for (std::size_t i = 0; i < ps.n(); ++i) {
    std::vector<double> moment(ps.d(), 0.0);
    for (std::size_t k = 0; k < ps.species[i].count(); ++k) {
      const auto x = ps.position(i, k);
      for (std::size_t c = 0; c < ps.d(); ++c) moment[c] += ps.species[i].mass[k] * x[c];
    }
    for (std::size_t c = 0; c < ps.d(); ++c) e[c] += moment[c] / ps.params.m[i];
  }
  return e;
}

std::vector<double> second_moments(const QuantileState& qs) {
  std::vector<double> out(qs.n());
  for (std::size_t i = 0; i < qs.n(); ++i) {
    double s = 0.0;
    for (double v : qs.u[i]) s += v * v;
    out[i] = qs.params.p[i] / static_cast<double>(qs.M) * s;
  }
  return out;
}

}  // namespace gradflow
