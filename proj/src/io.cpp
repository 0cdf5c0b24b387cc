#include "gradflow/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "gradflow/errors.hpp"

namespace gradflow {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_quantile_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,species,cell,u\n";
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    const std::string t = format_double(traj.times[s]);
    const auto& qs = traj.states[s];
    for (std::size_t i = 0; i < qs.n(); ++i)
      for (std::size_t k = 0; k < qs.M; ++k)
        os << t << ',' << i << ',' << k << ',' << format_double(qs.u[i][k]) << '\n';
  }
}

void write_diagnostics_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t n = traj.states.empty() ? 0 : traj.states.front().n();
  os << "t,energy,dissipation,E_invariant";
  for (const char* col : {"diam_", "supp_lo_", "supp_hi_"})
    for (std::size_t i = 1; i <= n; ++i) os << ',' << col << i;
  os << '\n';
  for (const auto& r : traj.records) {
    os << format_double(r.t) << ',' << format_double(r.energy) << ','
       << format_double(r.dissipation) << ',' << format_double(r.E_invariant);
    for (const auto* col : {&r.diam, &r.supp_lo, &r.supp_hi})
      for (double v : *col) os << ',' << format_double(v);
    os << '\n';
  }
}

void write_particle_csv(std::ostream& os, const ParticleTrajectory& traj) {
  const std::size_t d = traj.states.empty() ? 1 : traj.states.front().d();
  os << "t,species,k,mass";
  for (std::size_t c = 1; c <= d; ++c) os << ",x_" << c;
  os << '\n';
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    const std::string t = format_double(traj.times[s]);
    const auto& ps = traj.states[s];
    for (std::size_t i = 0; i < ps.n(); ++i) {
      for (std::size_t k = 0; k < ps.species[i].count(); ++k) {
        os << t << ',' << i << ',' << k << ',' << format_double(ps.species[i].mass[k]);
        for (double x : ps.position(i, k)) os << ',' << format_double(x);
        os << '\n';
      }
    }
  }
}

void write_particle_diagnostics_csv(std::ostream& os, const ParticleTrajectory& traj) {
  os << "t,energy\n";
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    os << format_double(traj.times[s]) << ',' << format_double(traj.energies[s]) << '\n';
  }
}

namespace {

double parse_number(const std::string& field, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw UsageError("trajectory CSV line " + std::to_string(line) + ": bad number '" + field + "'");
  }
  return v;
}

std::size_t parse_index(const std::string& field, std::size_t line) {
  std::size_t v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw UsageError("trajectory CSV line " + std::to_string(line) + ": bad index '" + field + "'");
  }
  return v;
}

}  // namespace

std::vector<QuantileSnapshot> read_quantile_csv(std::istream& is, const SystemParams& params) {
  std::string line;
  if (!std::getline(is, line) || line != "t,species,cell,u") {
    throw UsageError("trajectory CSV must start with header t,species,cell,u");
  }
  struct Row {
    std::size_t species, cell;
    double u;
  };
  std::vector<std::pair<double, std::vector<Row>>> groups;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 4) {
      throw UsageError("trajectory CSV line " + std::to_string(lineno) + ": expected 4 fields");
    }
    const double t = parse_number(fields[0], lineno);
    if (groups.empty() || groups.back().first != t) groups.push_back({t, {}});
    groups.back().second.push_back(
        {parse_index(fields[1], lineno), parse_index(fields[2], lineno), parse_number(fields[3], lineno)});
  }

  std::vector<QuantileSnapshot> out;
  for (auto& [t, rows] : groups) {
    std::size_t M = 0;
    for (const auto& r : rows) {
      if (r.species >= params.n()) throw UsageError("trajectory CSV: species index out of range");
      M = std::max(M, r.cell + 1);
    }
    QuantileSnapshot snap;
    snap.t = t;
    snap.state.params = params;
    snap.state.M = M;
    snap.state.u.assign(params.n(), std::vector<double>(M, NAN));
    for (const auto& r : rows) snap.state.u[r.species][r.cell] = r.u;
    for (const auto& row : snap.state.u)
      for (double v : row)
        if (std::isnan(v)) throw UsageError("trajectory CSV: missing cells at t = " + format_double(t));
    out.push_back(std::move(snap));
  }
  return out;
}

void to_json(nlohmann::json& j, const ConvexityReport& r) {
  j = nlohmann::json{{"eta", r.eta},
                     {"lambda0", r.lambda0},
                     {"necessary_ok", r.necessary_ok},
                     {"irreducible", r.irreducible}};
  if (r.confining) {
    j["confining"] = {{"lambda0_tilde", r.confining->lambda0_tilde},
                      {"eta_tilde", r.confining->eta_tilde},
                      {"irreducible_at_distance", r.confining->irreducible_at_distance},
                      {"verdict", r.confining->verdict}};
  } else {
    j["confining"] = nullptr;
  }
}

void to_json(nlohmann::json& j, const ValidationReport& r) {
  j = nlohmann::json{{"all_passed", r.all_passed()}, {"has_errors", r.has_errors()}};
  auto issues = nlohmann::json::array();
  for (const auto& v : r.issues) {
    issues.push_back({{"assumption", v.assumption},
                      {"i", v.i},
                      {"j", v.j},
                      {"witness_z", v.witness_z},
                      {"magnitude", v.magnitude},
                      {"severity", v.severity == Severity::error ? "error" : "warning"},
                      {"message", v.message}});
  }
  j["issues"] = std::move(issues);
  const std::size_t n = r.estimated_kappa.size();
  auto kappa = nlohmann::json::array();
  auto growth = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> krow(n), grow(n);
    for (std::size_t c = 0; c < n; ++c) {
      krow[c] = r.estimated_kappa(i, c);
      grow[c] = r.estimated_gradient_growth(i, c);
    }
    kappa.push_back(krow);
    growth.push_back(grow);
  }
  j["estimated_kappa"] = std::move(kappa);
  j["estimated_gradient_growth"] = std::move(growth);
}

void to_json(nlohmann::json& j, const DiagnosticsRecord& r) {
  j = nlohmann::json{{"t", r.t},
                     {"energy", r.energy},
                     {"dissipation", r.dissipation},
                     {"E_invariant", r.E_invariant},
                     {"supp_lo", r.supp_lo},
                     {"supp_hi", r.supp_hi},
                     {"diam", r.diam},
                     {"min_gap", r.min_gap},
                     {"w2_to_ground", r.w2_to_ground},
                     {"monotonicity_violations", r.monotonicity_violations}};
}

void to_json(nlohmann::json& j, const RateFit& r) {
  j = nlohmann::json{{"quantity", r.quantity},       {"fitted_rate", r.fitted_rate},
                     {"predicted_rate", r.predicted_rate}, {"rel_err", r.rel_err},
                     {"r_squared", r.r_squared},     {"t_lo", r.t_lo},
                     {"t_hi", r.t_hi},               {"points", r.points}};
}

}  // namespace gradflow
