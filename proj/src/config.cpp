#include "gradflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "gradflow/convexity.hpp"
#include "gradflow/errors.hpp"
#include "gradflow/io.hpp"

namespace gradflow {

namespace {

using nlohmann::json;

// Collects schema problems as "<path>: <expectation>" instead of failing on
// the first one.
class Schema {
 public:
  void problem(const std::string& path, const std::string& what) {
    problems_.push_back(path + ": " + what);
  }
  bool ok() const { return problems_.empty(); }
  void throw_if_failed() const {
    if (!problems_.empty()) throw ConfigError(problems_);
  }

  std::optional<double> number(const json& obj, const std::string& key, const std::string& path,
                               std::optional<double> fallback = std::nullopt) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!obj.is_object() || !obj.contains(key)) {
      if (!fallback) problem(where, "required number is missing");
      return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      problem(where, "expected a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      problem(where, "expected a finite number");
      return std::nullopt;
    }
    return x;
  }

  std::optional<std::vector<double>> vector(const json& v, const std::string& path,
                                            std::optional<std::size_t> length = std::nullopt) {
    if (!v.is_array()) {
      problem(path, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number()) {
        problem(path + "[" + std::to_string(k) + "]", "expected a number");
        return std::nullopt;
      }
      out.push_back(v[k].get<double>());
    }
    if (length && out.size() != *length) {
      problem(path, "expected " + std::to_string(*length) + " entries, got " + std::to_string(out.size()));
      return std::nullopt;
    }
    return out;
  }

  std::optional<SquareMatrix> matrix(const json& v, const std::string& path, std::size_t n) {
    if (n == 1 && v.is_number()) return SquareMatrix(1, v.get<double>());
    if (!v.is_array() || v.size() != n) {
      problem(path, "expected an " + std::to_string(n) + " x " + std::to_string(n) + " array");
      return std::nullopt;
    }
    SquareMatrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = vector(v[i], path + "[" + std::to_string(i) + "]", n);
      if (!row) return std::nullopt;
      for (std::size_t j = 0; j < n; ++j) out(i, j) = (*row)[j];
    }
    return out;
  }

 private:
  std::vector<std::string> problems_;
};

// Integers assigned in code are signed in the json model; text-parsed ones are unsigned.
bool is_count(const json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

std::optional<ScalarPotential> entry_from_json(const json& j, const std::string& path, Schema& schema) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    schema.problem(path, "expected an object with a string \"kind\"");
    return std::nullopt;
  }
  const std::string kind = j.at("kind").get<std::string>();
  auto num = [&](const char* key, std::optional<double> fallback = std::nullopt) {
    return schema.number(j, key, path, fallback);
  };
  try {
    if (kind == "zero") return ScalarPotential::zero();
    if (kind == "quadratic") {
      if (auto a = num("a")) return ScalarPotential::quadratic(*a);
      return std::nullopt;
    }
    if (kind == "power") {
      auto q = num("q");
      auto a = num("a");
      if (q && a) return ScalarPotential::power(*q, *a);
      return std::nullopt;
    }
    if (kind == "double_well") {
      auto a = num("a");
      auto b = num("b");
      if (a && b) return ScalarPotential::double_well(*a, *b);
      return std::nullopt;
    }
    if (kind == "gaussian_ar" || kind == "morse") {
      auto ca = num("ca", 0.0);
      auto la = num("la", 1.0);
      auto cr = num("cr", 0.0);
      auto lr = num("lr", 1.0);
      if (!(ca && la && cr && lr)) return std::nullopt;
      if (kind == "gaussian_ar") return ScalarPotential::gaussian_ar(*ca, *la, *cr, *lr);
      std::optional<double> eps;
      if (j.contains("eps")) eps = num("eps");
      if (!eps) {
        schema.problem(path + ".eps", "Morse kernel requires a positive smoothing length eps");
        return std::nullopt;
      }
      return ScalarPotential::morse(*ca, *la, *cr, *lr, eps);
    }
    if (kind == "tabulated") {
      auto knots = j.contains("knots") ? schema.vector(j.at("knots"), path + ".knots") : std::nullopt;
      auto values = j.contains("values") ? schema.vector(j.at("values"), path + ".values") : std::nullopt;
      auto derivs = j.contains("derivs") ? schema.vector(j.at("derivs"), path + ".derivs") : std::nullopt;
      if (!(knots && values && derivs)) {
        schema.problem(path, "tabulated kernel needs arrays knots, values and derivs");
        return std::nullopt;
      }
      return ScalarPotential::tabulated(*knots, *values, *derivs);
    }
    if (kind == "sum") {
      if (!j.contains("terms") || !j.at("terms").is_array()) {
        schema.problem(path + ".terms", "expected an array of kernels");
        return std::nullopt;
      }
      std::vector<ScalarPotential> terms;
      for (std::size_t k = 0; k < j.at("terms").size(); ++k) {
        auto t = entry_from_json(j.at("terms")[k], index_path(path + ".terms", k), schema);
        if (!t) return std::nullopt;
        terms.push_back(std::move(*t));
      }
      return ScalarPotential::sum(std::move(terms));
    }
    schema.problem(path + ".kind", "unknown kernel kind \"" + kind +
                                       "\" (expected zero, quadratic, power, morse, gaussian_ar, "
                                       "double_well, tabulated or sum)");
  } catch (const DomainError& e) {
    schema.problem(path, e.what());
  }
  return std::nullopt;
}

std::optional<PotentialMatrix> matrix_from_json(const json& j, const std::string& path,
                                                std::optional<std::size_t> expected_n, Schema& schema) {
  if (!j.is_object()) {
    schema.problem(path, "expected an object with entries and kappa");
    return std::nullopt;
  }
  std::size_t n = 0;
  if (j.contains("n")) {
    if (!is_count(j.at("n")) || j.at("n").get<std::size_t>() == 0) {
      schema.problem(path + ".n", "expected a positive integer");
      return std::nullopt;
    }
    n = j.at("n").get<std::size_t>();
  } else if (expected_n) {
    n = *expected_n;
  } else if (j.contains("entries") && j.at("entries").is_array()) {
    n = j.at("entries").size();
  }
  if (expected_n && n != *expected_n) {
    schema.problem(path + ".n", "potential has " + std::to_string(n) + " species but the system has " +
                                    std::to_string(*expected_n));
    return std::nullopt;
  }
  if (!j.contains("entries") || !j.at("entries").is_array() || j.at("entries").size() != n || n == 0) {
    schema.problem(path + ".entries", "expected an n x n array of kernels");
    return std::nullopt;
  }
  std::vector<ScalarPotential> entries;
  bool entries_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = j.at("entries")[i];
    const std::string rpath = index_path(path + ".entries", i);
    if (!row.is_array() || row.size() != n) {
      schema.problem(rpath, "expected " + std::to_string(n) + " kernels");
      entries_ok = false;
      continue;
    }
    for (std::size_t c = 0; c < n; ++c) {
      auto e = entry_from_json(row[c], index_path(rpath, c), schema);
      if (e) entries.push_back(std::move(*e));
      else entries_ok = false;
    }
  }

  std::optional<SquareMatrix> kappa;
  if (!j.contains("kappa")) {
    schema.problem(path + ".kappa", "required semiconvexity matrix is missing");
  } else {
    kappa = schema.matrix(j.at("kappa"), path + ".kappa", n);
    if (kappa && !kappa->is_symmetric()) {
      schema.problem(path + ".kappa", "kappa must be symmetric");
      kappa.reset();
    }
    if (kappa && !kappa->all_finite()) {
      schema.problem(path + ".kappa", "kappa must be finite");
      kappa.reset();
    }
  }

  std::optional<SquareMatrix> growth;
  if (j.contains("growth")) {
    growth = schema.matrix(j.at("growth"), path + ".growth", n);
  }

  std::optional<ConfiningSpec> confining;
  if (j.contains("confining")) {
    const auto& c = j.at("confining");
    const std::string cpath = path + ".confining";
    auto radius = schema.number(c, "R", cpath);
    std::optional<SquareMatrix> tail;
    if (c.is_object() && c.contains("C")) tail = schema.matrix(c.at("C"), cpath + ".C", n);
    else schema.problem(cpath + ".C", "required tail-convexity matrix is missing");
    if (radius && !(*radius > 0.0)) schema.problem(cpath + ".R", "radius must be positive");
    if (tail && !tail->is_symmetric()) schema.problem(cpath + ".C", "C must be symmetric");
    if (radius && tail && *radius > 0.0 && tail->is_symmetric()) {
      confining = ConfiningSpec{*radius, *tail};
    }
  }

  if (!entries_ok || !kappa || !schema.ok()) return std::nullopt;
  return PotentialMatrix(n, std::move(entries), *kappa, growth, confining);
}

// --- initial data ----------------------------------------------------------

std::optional<InitialSpec> initial_from_json(const json& j, const std::string& path, std::size_t n,
                                             std::size_t d, Schema& schema) {
  if (!j.is_object()) {
    schema.problem(path, "expected an object with one of preset, particles, quantiles");
    return std::nullopt;
  }
  if (j.contains("preset")) {
    if (!j.at("preset").is_string()) {
      schema.problem(path + ".preset", "expected a string");
      return std::nullopt;
    }
    PresetSpec spec{j.at("preset").get<std::string>(), j.value("args", json::object())};
    if (spec.name != "two_diracs" && spec.name != "uniform" && spec.name != "gauss_pair") {
      schema.problem(path + ".preset", "unknown preset \"" + spec.name +
                                           "\" (expected two_diracs, uniform or gauss_pair)");
      return std::nullopt;
    }
    if (d != 1) {
      schema.problem(path + ".preset", "presets are one-dimensional; give particles for d > 1");
      return std::nullopt;
    }
    if (!spec.args.is_object()) {
      schema.problem(path + ".args", "expected an object");
      return std::nullopt;
    }
    return spec;
  }
  if (j.contains("quantiles")) {
    const auto& q = j.at("quantiles");
    if (d != 1) {
      schema.problem(path + ".quantiles", "quantile data requires d = 1");
      return std::nullopt;
    }
    if (!q.is_array() || q.size() != n) {
      schema.problem(path + ".quantiles", "expected one array per species");
      return std::nullopt;
    }
    QuantileGridSpec spec;
    for (std::size_t i = 0; i < n; ++i) {
      auto row = schema.vector(q[i], index_path(path + ".quantiles", i));
      if (!row) return std::nullopt;
      if (row->empty()) {
        schema.problem(index_path(path + ".quantiles", i), "expected at least one cell");
        return std::nullopt;
      }
      if (!std::is_sorted(row->begin(), row->end())) {
        schema.problem(index_path(path + ".quantiles", i), "quantile values must be non-decreasing");
        return std::nullopt;
      }
      spec.u.push_back(std::move(*row));
    }
    for (const auto& row : spec.u) {
      if (row.size() != spec.u.front().size()) {
        schema.problem(path + ".quantiles", "all species must share the same number of cells");
        return std::nullopt;
      }
    }
    return spec;
  }
  if (j.contains("particles")) {
    const auto& list = j.at("particles");
    if (!list.is_array() || list.size() != n) {
      schema.problem(path + ".particles", "expected one object per species");
      return std::nullopt;
    }
    ParticleListSpec spec;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string spath = index_path(path + ".particles", i);
      const auto& s = list[i];
      if (!s.is_object() || !s.contains("x") || !s.contains("mass") || !s.at("x").is_array()) {
        schema.problem(spath, "expected an object with arrays x and mass");
        return std::nullopt;
      }
      ParticleSpecies species;
      const auto& xs = s.at("x");
      for (std::size_t k = 0; k < xs.size(); ++k) {
        if (d == 1 && xs[k].is_number()) {
          species.x.push_back(xs[k].get<double>());
        } else {
          auto pos = schema.vector(xs[k], index_path(spath + ".x", k), d);
          if (!pos) return std::nullopt;
          species.x.insert(species.x.end(), pos->begin(), pos->end());
        }
      }
      auto mass = schema.vector(s.at("mass"), spath + ".mass", xs.size());
      if (!mass) return std::nullopt;
      if (mass->empty()) {
        schema.problem(spath, "species needs at least one particle");
        return std::nullopt;
      }
      for (double w : *mass)
        if (!(w > 0.0)) {
          schema.problem(spath + ".mass", "particle masses must be positive");
          return std::nullopt;
        }
      species.mass = std::move(*mass);
      spec.species.push_back(std::move(species));
    }
    return spec;
  }
  schema.problem(path, "expected one of preset, particles, quantiles");
  return std::nullopt;
}

std::vector<double> broadcast(const json& args, const char* key, std::size_t n, double fallback) {
  if (!args.contains(key)) return std::vector<double>(n, fallback);
  const auto& v = args.at(key);
  if (v.is_number()) return std::vector<double>(n, v.get<double>());
  if (v.is_array() && v.size() == n) {
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError({std::string("initial.args.") + key + ": expected numbers"});
      out.push_back(x.get<double>());
    }
    return out;
  }
  throw ConfigError({std::string("initial.args.") + key + ": expected a number or " +
                     std::to_string(n) + " numbers"});
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::vector<std::vector<double>> preset_quantiles(const PresetSpec& spec, std::size_t n, std::size_t M,
                                                  std::uint64_t seed) {
  const json& args = spec.args;
  std::vector<std::vector<double>> u(n, std::vector<double>(M));
  if (spec.name == "uniform") {
    const auto lo = broadcast(args, "lo", n, -1.0);
    const auto hi = broadcast(args, "hi", n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(hi[i] >= lo[i])) throw ConfigError({"initial.args: uniform preset needs hi >= lo"});
      for (std::size_t k = 0; k < M; ++k) {
        u[i][k] = lo[i] + (hi[i] - lo[i]) * QuantileState::midpoint(k, M);
      }
    }
  } else if (spec.name == "two_diracs") {
    const auto centers = broadcast(args, "centers", n, 0.0);
    const auto separation = broadcast(args, "separation", n, 2.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < M; ++k) {
        const double half = 0.5 * separation[i];
        u[i][k] = QuantileState::midpoint(k, M) < 0.5 ? centers[i] - half : centers[i] + half;
      }
  } else {
    const auto centers = broadcast(args, "centers", n, 0.0);
    const auto offset = broadcast(args, "offset", n, 1.0);
    const auto sigma = broadcast(args, "sigma", n, 0.25);
    const auto trunc = broadcast(args, "truncation", n, 4.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(sigma[i] > 0.0) || !(trunc[i] > 0.0)) {
        throw ConfigError({"initial.args: gauss_pair needs positive sigma and truncation"});
      }
      const double a = centers[i] - offset[i] - trunc[i] * sigma[i];
      const double b = centers[i] + offset[i] + trunc[i] * sigma[i];
      auto cdf = [&](double x) {
        return 0.5 * normal_cdf((x - centers[i] + offset[i]) / sigma[i]) +
               0.5 * normal_cdf((x - centers[i] - offset[i]) / sigma[i]);
      };
      const double fa = cdf(a);
      const double fb = cdf(b);
      for (std::size_t k = 0; k < M; ++k) {
        const double target = fa + QuantileState::midpoint(k, M) * (fb - fa);
        double lo = a, hi = b;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
          const double mid = 0.5 * (lo + hi);
          (cdf(mid) < target ? lo : hi) = mid;
        }
        u[i][k] = 0.5 * (lo + hi);
      }
    }
  }
  const auto jitter = broadcast(args, "jitter", n, 0.0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    if (jitter[i] == 0.0) continue;
    std::uniform_real_distribution<double> shift(-jitter[i], jitter[i]);
    const double s = shift(rng);
    for (double& v : u[i]) v += s;
  }
  return u;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

ScalarPotential parse_potential_entry(const nlohmann::json& j) {
  Schema schema;
  auto e = entry_from_json(j, "entry", schema);
  schema.throw_if_failed();
  return *e;
}

PotentialMatrix parse_potential_matrix(const nlohmann::json& j) {
  Schema schema;
  auto pm = matrix_from_json(j, "potential", std::nullopt, schema);
  schema.throw_if_failed();
  return *pm;
}

ExperimentConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": malformed JSON (" + e.what() + ")"});
  }
  return parse_config_json(doc, overrides);
}

ExperimentConfig parse_config_json(const nlohmann::json& doc, const ConfigOverrides& overrides) {
  Schema schema;
  if (!doc.is_object()) {
    schema.problem("$", "expected a JSON object");
    schema.throw_if_failed();
  }

  SystemParams params;
  auto m = doc.contains("m") ? schema.vector(doc.at("m"), "m") : std::nullopt;
  if (!doc.contains("m")) schema.problem("m", "required mobility vector is missing");
  auto p = doc.contains("p") ? schema.vector(doc.at("p"), "p") : std::nullopt;
  if (!doc.contains("p")) schema.problem("p", "required mass vector is missing");
  std::size_t n = m ? m->size() : 0;
  if (doc.contains("n")) {
    if (!is_count(doc.at("n")) || doc.at("n").get<std::size_t>() == 0) schema.problem("n", "expected a positive integer");
    else if (m && doc.at("n").get<std::size_t>() != n) {
      schema.problem("n", "n = " + std::to_string(doc.at("n").get<std::size_t>()) + " but m has " +
                              std::to_string(n) + " entries");
    }
  }
  if (m && p && m->size() != p->size()) schema.problem("p", "m and p must have the same length");
  if (m && n == 0) schema.problem("m", "expected at least one species");
  if (m)
    for (double v : *m)
      if (!(v > 0.0)) schema.problem("m", "mobilities must be positive");
  if (p)
    for (double v : *p)
      if (!(v > 0.0)) schema.problem("p", "masses must be positive");
  std::size_t d = 1;
  if (doc.contains("d")) {
    if (!is_count(doc.at("d")) || doc.at("d").get<std::size_t>() == 0) {
      schema.problem("d", "expected a positive integer");
    } else {
      d = doc.at("d").get<std::size_t>();
    }
  }
  schema.throw_if_failed();
  params.m = *m;
  params.p = *p;
  params.d = d;
  params.E.assign(d, 0.0);

  std::optional<PotentialMatrix> pm;
  if (!doc.contains("potential")) schema.problem("potential", "required potential is missing");
  else pm = matrix_from_json(doc.at("potential"), "potential", n, schema);

  SolverConfig solver;
  std::size_t M = 256;
  bool dt_explicit = false;
  const json sj = doc.value("solver", json::object());
  if (!sj.is_object()) schema.problem("solver", "expected an object");
  else {
    if (sj.contains("dt")) {
      if (auto dt = schema.number(sj, "dt", "solver")) {
        solver.dt = *dt;
        dt_explicit = true;
      }
    }
    if (auto t = schema.number(sj, "t_end", "solver", 1.0)) solver.t_end = *t;
    if (auto c = schema.number(sj, "cfl_safety", "solver", 0.2)) solver.cfl_safety = *c;
    if (sj.contains("record_every")) {
      if (is_count(sj.at("record_every")) && sj.at("record_every").get<std::size_t>() > 0) {
        solver.record_every = sj.at("record_every").get<std::size_t>();
      } else {
        schema.problem("solver.record_every", "expected a positive integer");
      }
    } else {
      solver.record_every = 10;
    }
    if (sj.contains("M")) {
      if (is_count(sj.at("M")) && sj.at("M").get<std::size_t>() > 0) {
        M = sj.at("M").get<std::size_t>();
      } else {
        schema.problem("solver.M", "expected a positive integer");
      }
    }
    const std::string scheme = sj.value("scheme", "rk4");
    if (scheme == "rk4") solver.scheme = Scheme::rk4;
    else if (scheme == "euler") solver.scheme = Scheme::euler;
    else schema.problem("solver.scheme", "expected \"euler\" or \"rk4\"");
    const std::string repair = sj.value("repair", "sort");
    if (repair == "sort") solver.repair = Repair::sort;
    else if (repair == "none") solver.repair = Repair::none;
    else schema.problem("solver.repair", "expected \"none\" or \"sort\"");
  }

  std::uint64_t seed = 0;
  if (doc.contains("seed")) {
    if (is_count(doc.at("seed"))) seed = doc.at("seed").get<std::uint64_t>();
    else schema.problem("seed", "expected a nonnegative integer");
  }

  std::optional<InitialSpec> initial;
  if (!doc.contains("initial")) schema.problem("initial", "required initial datum is missing");
  else initial = initial_from_json(doc.at("initial"), "initial", n, d, schema);
  std::optional<InitialSpec> initial_alt;
  if (doc.contains("initial_alt")) {
    initial_alt = initial_from_json(doc.at("initial_alt"), "initial_alt", n, d, schema);
  }
  schema.throw_if_failed();

  if (overrides.dt) {
    solver.dt = *overrides.dt;
    dt_explicit = true;
  }
  if (overrides.t_end) solver.t_end = *overrides.t_end;
  if (overrides.seed) seed = *overrides.seed;
  if (!(solver.t_end >= 0.0)) schema.problem("solver.t_end", "must be nonnegative");
  if (dt_explicit && !(solver.dt > 0.0)) schema.problem("solver.dt", "must be positive");
  if (!(solver.cfl_safety > 0.0 && solver.cfl_safety <= 1.0)) {
    schema.problem("solver.cfl_safety", "must lie in (0, 1]");
  }

  // Mass bookkeeping for explicit particles; grids and presets carry p_i.
  auto check_masses = [&](const InitialSpec& spec, const std::string& path) {
    if (const auto* list = std::get_if<ParticleListSpec>(&spec)) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& mass = list->species[i].mass;
        const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
        if (std::abs(total - params.p[i]) > 1e-12 * params.p[i]) {
          std::ostringstream os;
          os.precision(17);
          os << "particle masses total " << total << " but p[" << i << "] = " << params.p[i];
          schema.problem(index_path(path + ".particles", i) + ".mass", os.str());
        }
      }
    }
  };
  check_masses(*initial, "initial");
  if (initial_alt) check_masses(*initial_alt, "initial_alt");
  schema.throw_if_failed();

  ExperimentConfig cfg{params, std::move(*pm), std::move(*initial), std::move(initial_alt),
                       solver,  !dt_explicit,   M,
                       seed,    hex(fnv1a(doc.dump()))};

  // Weighted center of mass from the primary datum.
  try {
    if (d == 1) {
      const QuantileState q0 = initial_quantiles(cfg);
      cfg.params.E = q0.params.E;
      if (const auto* grid = std::get_if<QuantileGridSpec>(&cfg.initial)) cfg.M = grid->u.front().size();
      if (!dt_explicit) {
        const double bound = stable_time_step(q0, cfg.potential, solver.cfl_safety);
        cfg.solver.dt = std::isfinite(bound) ? bound : (solver.t_end > 0.0 ? solver.t_end / 100.0 : 1e-2);
      }
    } else {
      const ParticleState p0 = initial_particles(cfg);
      cfg.params.E = p0.params.E;
      if (!dt_explicit) {
        const double bound = stable_time_step(p0, cfg.potential, solver.cfl_safety);
        cfg.solver.dt = std::isfinite(bound) ? bound : (solver.t_end > 0.0 ? solver.t_end / 100.0 : 1e-2);
      }
    }
  } catch (const DomainError& e) {
    throw ConfigError({std::string("initial: ") + e.what()});
  } catch (const UsageError& e) {
    throw ConfigError({std::string("initial: ") + e.what()});
  }
  return cfg;
}

QuantileState initial_quantiles(const ExperimentConfig& cfg, const InitialSpec& spec) {
  if (cfg.params.d != 1) throw UsageError("quantile runs require d = 1");
  const std::size_t n = cfg.params.n();
  if (const auto* preset = std::get_if<PresetSpec>(&spec)) {
    return make_quantile_state(cfg.params.m, cfg.params.p, preset_quantiles(*preset, n, cfg.M, cfg.seed));
  }
  if (const auto* grid = std::get_if<QuantileGridSpec>(&spec)) {
    return make_quantile_state(cfg.params.m, cfg.params.p, grid->u);
  }
  const auto& list = std::get<ParticleListSpec>(spec);
  return quantile_from_particles(make_particle_state(cfg.params.m, 1, list.species), cfg.M);
}

QuantileState initial_quantiles(const ExperimentConfig& cfg) { return initial_quantiles(cfg, cfg.initial); }

ParticleState initial_particles(const ExperimentConfig& cfg, const InitialSpec& spec) {
  if (const auto* list = std::get_if<ParticleListSpec>(&spec)) {
    return make_particle_state(cfg.params.m, cfg.params.d, list->species);
  }
  return particles_from_quantile(initial_quantiles(cfg, spec));
}

ParticleState initial_particles(const ExperimentConfig& cfg) { return initial_particles(cfg, cfg.initial); }

QuantileState alternate_quantiles(const ExperimentConfig& cfg) {
  const QuantileState primary = initial_quantiles(cfg);
  QuantileState alt;
  if (cfg.initial_alt) {
    alt = initial_quantiles(cfg, *cfg.initial_alt);
    if (alt.M != primary.M) throw UsageError("initial_alt must use the same resolution as initial");
  } else {
    alt = primary;
    for (std::size_t i = 0; i < alt.n(); ++i) {
      auto& row = alt.u[i];
      const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
      const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
      const double spread = (*hi - *lo) + 1.0;
      const double shift = (i % 2 == 0 ? 0.5 : -0.5) * spread;
      for (double& v : row) v = mean + 1.5 * (v - mean) + shift;
    }
  }
  double weight = 0.0;
  for (std::size_t j = 0; j < alt.n(); ++j) weight += alt.params.p[j] / alt.params.m[j];
  const double offset = (primary.params.E[0] - weighted_center_of_mass(alt)[0]) / weight;
  for (auto& row : alt.u)
    for (double& v : row) v += offset;
  alt.params = primary.params;
  return alt;
}

nlohmann::json manifest(const ExperimentConfig& cfg, const std::string& command, double dt_used) {
  return {{"tool", "gradflow"},
          {"version", kToolVersion},
          {"command", command},
          {"config_hash", cfg.config_hash},
          {"seed", cfg.seed},
          {"dt", dt_used},
          {"dt_from_stability_bound", cfg.dt_from_stability_bound},
          {"t_end", cfg.solver.t_end},
          {"M", cfg.M},
          {"scheme", cfg.solver.scheme == Scheme::rk4 ? "rk4" : "euler"},
          {"repair", cfg.solver.repair == Repair::sort ? "sort" : "none"}};
}

nlohmann::json analysis_json(const ExperimentConfig& cfg) {
  json out = analyze(cfg.potential, cfg.params);
  const ValidationReport validation = validate(cfg.potential, {-10.0, 10.0}, 2001);
  out["validation"] = validation;
  return out;
}

}  // namespace gradflow
