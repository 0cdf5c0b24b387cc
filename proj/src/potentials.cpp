#include "gradflow/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gradflow/errors.hpp"

namespace gradflow {

namespace {

void require_finite(double z) {
  if (!std::isfinite(z)) throw DomainError("potential evaluated at non-finite argument");
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be positive and finite");
  }
}

void require_finite_param(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

std::vector<double> sample_grid(Interval interval, std::size_t samples) {
  if (!(interval.lo < interval.hi)) throw UsageError("sample interval requires lo < hi");
  if (samples < 2) throw UsageError("sample grid needs at least 2 points");
  std::vector<double> z(samples);
  const double h = (interval.hi - interval.lo) / static_cast<double>(samples - 1);
  for (std::size_t k = 0; k < samples; ++k) z[k] = interval.lo + h * static_cast<double>(k);
  z.back() = interval.hi;
  return z;
}

struct Extremum {
  double value;
  double at;
};

Extremum semiconvexity_with_witness(const ScalarPotential& p, Interval interval,
                                    std::size_t samples) {
  if (samples < 3) throw UsageError("estimate_semiconvexity needs at least 3 samples");
  const auto z = sample_grid(interval, samples);
  const double h = (interval.hi - interval.lo) / static_cast<double>(samples - 1);
  std::vector<double> w(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) w[k] = p.eval(z[k]);
  Extremum best{INFINITY, z[1]};
  for (std::size_t k = 1; k + 1 < z.size(); ++k) {
    const double second = (w[k - 1] - 2.0 * w[k] + w[k + 1]) / (h * h);
    if (second < best.value) best = {second, z[k]};
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tabulated

double Tabulated::profile(double r, bool want_derivative) const noexcept {
  const std::size_t last = knots.size() - 1;
  if (r >= knots[last]) {
    return want_derivative ? derivs[last] : values[last] + derivs[last] * (r - knots[last]);
  }
  const auto it = std::upper_bound(knots.begin(), knots.end(), r);
  const std::size_t k = static_cast<std::size_t>(it - knots.begin()) - 1;
  const double h = knots[k + 1] - knots[k];
  const double t = (r - knots[k]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  if (want_derivative) {
    return ((6.0 * t2 - 6.0 * t) * values[k] + (3.0 * t2 - 4.0 * t + 1.0) * h * derivs[k] +
            (-6.0 * t2 + 6.0 * t) * values[k + 1] + (3.0 * t2 - 2.0 * t) * h * derivs[k + 1]) /
           h;
  }
  return (2.0 * t3 - 3.0 * t2 + 1.0) * values[k] + (t3 - 2.0 * t2 + t) * h * derivs[k] +
         (-2.0 * t3 + 3.0 * t2) * values[k + 1] + (t3 - t2) * h * derivs[k + 1];
}

double Tabulated::value(double z) const noexcept { return profile(std::abs(z), false); }

double Tabulated::derivative(double z) const noexcept {
  const double g = profile(std::abs(z), true);
  return z < 0.0 ? -g : g;
}

// ---------------------------------------------------------------------------
// Sum

double Sum::value(double z) const {
  double acc = 0.0;
  for (const auto& t : terms) acc += t.value(z);
  return acc;
}

double Sum::derivative(double z) const {
  double acc = 0.0;
  for (const auto& t : terms) acc += t.derivative(z);
  return acc;
}

bool Sum::operator==(const Sum& other) const { return terms == other.terms; }

// ---------------------------------------------------------------------------
// ScalarPotential

ScalarPotential ScalarPotential::zero() { return ScalarPotential(Zero{}); }

ScalarPotential ScalarPotential::quadratic(double a) {
  require_finite_param(a, "quadratic coefficient");
  return ScalarPotential(Quadratic{a});
}

ScalarPotential ScalarPotential::power(double q, double a) {
  require_finite_param(a, "power coefficient");
  if (!(q > 1.0) || !std::isfinite(q)) {
    throw DomainError("power exponent must exceed 1 for a C1 kernel");
  }
  return ScalarPotential(Power{q, a});
}

ScalarPotential ScalarPotential::morse(double ca, double la, double cr, double lr,
                                       std::optional<double> smoothing) {
  if (!smoothing) {
    throw DomainError("Morse kernel is not C1 at the origin; a smoothing length is required");
  }
  require_positive(*smoothing, "Morse smoothing length");
  require_finite_param(ca, "Morse attraction amplitude");
  require_finite_param(cr, "Morse repulsion amplitude");
  require_positive(la, "Morse attraction length");
  require_positive(lr, "Morse repulsion length");
  return ScalarPotential(Morse{ca, la, cr, lr, *smoothing});
}

ScalarPotential ScalarPotential::gaussian_ar(double ca, double la, double cr, double lr) {
  require_finite_param(ca, "Gaussian attraction amplitude");
  require_finite_param(cr, "Gaussian repulsion amplitude");
  require_positive(la, "Gaussian attraction length");
  require_positive(lr, "Gaussian repulsion length");
  return ScalarPotential(GaussianAR{ca, la, cr, lr});
}

ScalarPotential ScalarPotential::double_well(double a, double b) {
  require_finite_param(a, "double-well quartic coefficient");
  require_finite_param(b, "double-well quadratic coefficient");
  return ScalarPotential(DoubleWell{a, b});
}

ScalarPotential ScalarPotential::tabulated(std::vector<double> knots, std::vector<double> values,
                                           std::vector<double> derivs) {
  if (knots.size() < 2) throw DomainError("tabulated kernel needs at least 2 knots");
  if (values.size() != knots.size() || derivs.size() != knots.size()) {
    throw DomainError("tabulated kernel: knots, values and derivs must have equal length");
  }
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (!std::isfinite(knots[k]) || !std::isfinite(values[k]) || !std::isfinite(derivs[k])) {
      throw DomainError("tabulated kernel: non-finite table entry");
    }
    if (k > 0 && !(knots[k] > knots[k - 1])) {
      throw DomainError("tabulated kernel: knots must be strictly increasing");
    }
  }
  if (knots.front() != 0.0) throw DomainError("tabulated kernel: first knot must be 0");
  if (derivs.front() != 0.0) {
    throw DomainError("tabulated kernel: slope at 0 must vanish for an even C1 kernel");
  }
  return ScalarPotential(Tabulated{std::move(knots), std::move(values), std::move(derivs)});
}

ScalarPotential ScalarPotential::sum(std::vector<ScalarPotential> terms) {
  if (terms.empty()) return zero();
  return ScalarPotential(Sum{std::move(terms)});
}

double ScalarPotential::value(double z) const {
  return std::visit([z](const auto& k) { return k.value(z); }, kind_);
}

double ScalarPotential::derivative(double z) const {
  return std::visit([z](const auto& k) { return k.derivative(z); }, kind_);
}

double ScalarPotential::eval(double z) const {
  require_finite(z);
  return value(z);
}

double ScalarPotential::grad(double z) const {
  require_finite(z);
  return derivative(z);
}

namespace {

bool sampled_flat(const Tabulated& t, double from, double to) {
  constexpr std::size_t kSamples = 1001;
  const double h = (to - from) / static_cast<double>(kSamples - 1);
  for (std::size_t k = 0; k < kSamples; ++k) {
    if (t.derivative(from + h * static_cast<double>(k)) != 0.0) return false;
  }
  return true;
}

}  // namespace

bool ScalarPotential::gradient_identically_zero() const {
  return std::visit(
      [](const auto& k) -> bool {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Zero>) {
          return true;
        } else if constexpr (std::is_same_v<K, Quadratic> || std::is_same_v<K, Power>) {
          return k.a == 0.0;
        } else if constexpr (std::is_same_v<K, Morse> || std::is_same_v<K, GaussianAR>) {
          return k.ca == 0.0 && k.cr == 0.0;
        } else if constexpr (std::is_same_v<K, DoubleWell>) {
          return k.a == 0.0 && k.b == 0.0;
        } else if constexpr (std::is_same_v<K, Tabulated>) {
          return k.derivs.back() == 0.0 && sampled_flat(k, 0.0, k.knots.back());
        } else {
          return std::all_of(k.terms.begin(), k.terms.end(),
                             [](const ScalarPotential& t) { return t.gradient_identically_zero(); });
        }
      },
      kind_);
}

bool ScalarPotential::gradient_zero_beyond(double radius) const {
  return std::visit(
      [radius](const auto& k) -> bool {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Tabulated>) {
          if (k.derivs.back() != 0.0) return false;
          if (radius >= k.knots.back()) return true;
          return sampled_flat(k, radius, k.knots.back());
        } else if constexpr (std::is_same_v<K, Sum>) {
          return std::all_of(k.terms.begin(), k.terms.end(), [radius](const ScalarPotential& t) {
            return t.gradient_zero_beyond(radius);
          });
        } else {
          // Analytic kernels with a nonzero coefficient have isolated zeros of W'.
          return ScalarPotential(k).gradient_identically_zero();
        }
      },
      kind_);
}

std::string_view ScalarPotential::kind_name() const {
  return std::visit(
      [](const auto& k) -> std::string_view {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Zero>) return "zero";
        else if constexpr (std::is_same_v<K, Quadratic>) return "quadratic";
        else if constexpr (std::is_same_v<K, Power>) return "power";
        else if constexpr (std::is_same_v<K, Morse>) return "morse";
        else if constexpr (std::is_same_v<K, GaussianAR>) return "gaussian_ar";
        else if constexpr (std::is_same_v<K, DoubleWell>) return "double_well";
        else if constexpr (std::is_same_v<K, Tabulated>) return "tabulated";
        else return "sum";
      },
      kind_);
}

// ---------------------------------------------------------------------------
// PotentialMatrix

PotentialMatrix::PotentialMatrix(std::size_t n, std::vector<ScalarPotential> entries,
                                 SquareMatrix kappa, std::optional<SquareMatrix> growth,
                                 std::optional<ConfiningSpec> confining)
    : n_(n),
      entries_(std::move(entries)),
      kappa_(std::move(kappa)),
      growth_(std::move(growth)),
      confining_(std::move(confining)) {
  if (n_ == 0) throw UsageError("potential matrix needs at least one species");
  if (entries_.size() != n_ * n_) throw UsageError("potential matrix needs n*n entries");
  if (kappa_.size() != n_) throw UsageError("kappa must be n x n");
  if (!kappa_.all_finite()) throw DomainError("kappa must be finite");
  if (!kappa_.is_symmetric()) throw DomainError("kappa must be symmetric");
  if (growth_ && growth_->size() != n_) throw UsageError("growth matrix must be n x n");
  if (confining_) {
    if (!(confining_->radius > 0.0)) throw DomainError("confining radius must be positive");
    if (confining_->tail_convexity.size() != n_) {
      throw UsageError("confining tail-convexity matrix must be n x n");
    }
    if (!confining_->tail_convexity.is_symmetric()) {
      throw DomainError("confining tail-convexity matrix must be symmetric");
    }
  }
}

PotentialMatrix PotentialMatrix::quadratic(const SquareMatrix& kappa) {
  const std::size_t n = kappa.size();
  std::vector<ScalarPotential> entries;
  entries.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) entries.push_back(ScalarPotential::quadratic(kappa(i, j)));
  return PotentialMatrix(n, std::move(entries), kappa);
}

void PotentialMatrix::check_index(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw UsageError("species index out of range");
}

const ScalarPotential& PotentialMatrix::entry(std::size_t i, std::size_t j) const {
  check_index(i, j);
  return entries_[i * n_ + j];
}

double PotentialMatrix::eval(std::size_t i, std::size_t j, double z) const {
  return entry(i, j).eval(z);
}

double PotentialMatrix::grad(std::size_t i, std::size_t j, double z) const {
  return entry(i, j).grad(z);
}

// ---------------------------------------------------------------------------
// Estimates

double estimate_semiconvexity(const ScalarPotential& p, Interval interval, std::size_t samples) {
  return semiconvexity_with_witness(p, interval, samples).value;
}

double estimate_growth_bound(const ScalarPotential& p, Interval interval, std::size_t samples) {
  double bound = 0.0;
  for (double z : sample_grid(interval, samples)) {
    bound = std::max(bound, std::abs(p.grad(z)) / (std::abs(z) + 1.0));
  }
  return bound;
}

double estimate_lipschitz(const ScalarPotential& p, Interval interval, std::size_t samples) {
  const auto z = sample_grid(interval, samples);
  double lip = 0.0;
  double prev = p.grad(z[0]);
  for (std::size_t k = 1; k < z.size(); ++k) {
    const double g = p.grad(z[k]);
    lip = std::max(lip, std::abs(g - prev) / (z[k] - z[k - 1]));
    prev = g;
  }
  return lip;
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::has_errors() const noexcept {
  return std::any_of(issues.begin(), issues.end(),
                     [](const ValidationIssue& v) { return v.severity == Severity::error; });
}

bool ValidationReport::flags(std::string_view assumption) const noexcept {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const ValidationIssue& v) { return v.assumption == assumption; });
}

ValidationReport validate(const PotentialMatrix& pm, Interval interval, std::size_t samples) {
  const std::size_t n = pm.size();
  const auto grid = sample_grid(interval, samples);
  ValidationReport report;
  report.estimated_kappa = SquareMatrix(n);
  report.estimated_gradient_growth = SquareMatrix(n);

  auto add = [&](const char* assumption, std::size_t i, std::size_t j, double z, double magnitude,
                 Severity severity, std::string message) {
    report.issues.push_back({assumption, i, j, z, magnitude, severity, std::move(message)});
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto& w = pm.entry(i, j);

      if (j > i && !(w == pm.entry(j, i))) {
        Extremum worst{0.0, grid.front()};
        for (double z : grid) {
          const double d = std::abs(w.eval(z) - pm.entry(j, i).eval(z));
          if (d > worst.value) worst = {d, z};
        }
        add("W1", i, j, worst.at, worst.value, Severity::error,
            "entries (i,j) and (j,i) differ");
      }

      Extremum odd_even{0.0, 0.0};
      bool finite = true;
      for (double z : grid) {
        const double v = w.eval(z);
        const double g = w.grad(z);
        if (!std::isfinite(v) || !std::isfinite(g)) {
          add("W2", i, j, z, NAN, Severity::error, "kernel is not finite");
          finite = false;
          break;
        }
        const double d = std::max(std::abs(v - w.eval(-z)), std::abs(g + w.grad(-z)));
        if (d > odd_even.value) odd_even = {d, z};
      }
      if (!finite) continue;
      if (odd_even.value > 0.0) {
        add("W3", i, j, odd_even.at, odd_even.value, Severity::error,
            "kernel is not even (or its derivative not odd)");
      }
      if (const double g0 = w.grad(0.0); g0 != 0.0) {
        add("W2", i, j, 0.0, std::abs(g0), Severity::error, "derivative does not vanish at 0");
      }

      if (pm.growth()) {
        const double bound = (*pm.growth())(i, j);
        Extremum worst{0.0, 0.0};
        for (double z : grid) {
          const double excess = std::abs(w.eval(z)) - bound * (1.0 + z * z);
          if (excess > worst.value) worst = {excess, z};
        }
        if (worst.value > 1e-12 * (1.0 + std::abs(bound))) {
          add("W4", i, j, worst.at, worst.value, Severity::error,
              "quadratic growth bound exceeded");
        }
      }

      const auto curv = semiconvexity_with_witness(w, interval, samples);
      report.estimated_kappa(i, j) = curv.value;
      report.estimated_gradient_growth(i, j) = estimate_growth_bound(w, interval, samples);
      const double declared = pm.kappa()(i, j);
      if (declared > curv.value + 1e-6 * (1.0 + std::abs(declared))) {
        std::ostringstream msg;
        msg << "declared kappa " << declared << " exceeds sampled curvature " << curv.value;
        add("W5", i, j, curv.at, declared - curv.value, Severity::warning, msg.str());
      }
    }
  }
  return report;
}

}  // namespace gradflow
