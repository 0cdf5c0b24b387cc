#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gradflow/matrix.hpp"

namespace gradflow {

// Scalar interaction kernels W(z). Every kind evaluates through |z| or even
// powers of z, so W(z) == W(-z) and W'(z) == -W'(-z) hold bit-exactly.

/// W(z) = a z^2 / 2.
struct Quadratic {
  double a = 0.0;

  double value(double z) const noexcept { return 0.5 * a * (z * z); }
  double derivative(double z) const noexcept { return a * z; }
  bool operator==(const Quadratic&) const = default;
};

/// W(z) = a |z|^q with q > 1.
struct Power {
  double q = 2.0;
  double a = 0.0;

  double value(double z) const noexcept { return a * std::pow(std::abs(z), q); }
  double derivative(double z) const noexcept {
    const double g = a * q * std::pow(std::abs(z), q - 1.0);
    return z < 0.0 ? -g : g;
  }
  bool operator==(const Power&) const = default;
};

/// Morse kernel -Ca exp(-r/la) + Cr exp(-r/lr) with the smoothed radius
/// r = sqrt(z^2 + eps^2), which removes the kink of |z| at the origin.
struct Morse {
  double ca = 0.0;
  double la = 1.0;
  double cr = 0.0;
  double lr = 1.0;
  double eps = 0.0;

  double radius(double z) const noexcept { return std::sqrt(z * z + eps * eps); }
  double value(double z) const noexcept {
    const double r = radius(z);
    return -ca * std::exp(-r / la) + cr * std::exp(-r / lr);
  }
  double derivative(double z) const noexcept {
    const double r = radius(z);
    return (ca / la * std::exp(-r / la) - cr / lr * std::exp(-r / lr)) * (z / r);
  }
  bool operator==(const Morse&) const = default;
};

/// Gaussian attractive-repulsive kernel -Ca exp(-z^2/la) + Cr exp(-z^2/lr).
struct GaussianAR {
  double ca = 0.0;
  double la = 1.0;
  double cr = 0.0;
  double lr = 1.0;

  double value(double z) const noexcept {
    const double s = z * z;
    return -ca * std::exp(-s / la) + cr * std::exp(-s / lr);
  }
  double derivative(double z) const noexcept {
    const double s = z * z;
    return (2.0 * ca / la * std::exp(-s / la) - 2.0 * cr / lr * std::exp(-s / lr)) * z;
  }
  bool operator==(const GaussianAR&) const = default;
};

/// W(z) = a z^4 - b z^2.
struct DoubleWell {
  double a = 0.0;
  double b = 0.0;

  double value(double z) const noexcept {
    const double s = z * z;
    return a * (s * s) - b * s;
  }
  double derivative(double z) const noexcept { return (4.0 * a * (z * z) - 2.0 * b) * z; }
  bool operator==(const DoubleWell&) const = default;
};

struct Zero {
  double value(double) const noexcept { return 0.0; }
  double derivative(double) const noexcept { return 0.0; }
  bool operator==(const Zero&) const = default;
};

/// Piecewise cubic Hermite profile on z >= 0, reflected to z < 0.
///
/// Knots start at 0 with zero slope there. Beyond the last knot the profile
/// continues linearly with the last slope, which keeps W in C^1 and gives
/// at most linear growth.
struct Tabulated {
  std::vector<double> knots;
  std::vector<double> values;
  std::vector<double> derivs;

  double value(double z) const noexcept;
  double derivative(double z) const noexcept;
  bool operator==(const Tabulated&) const = default;

 private:
  double profile(double r, bool want_derivative) const noexcept;
};

class ScalarPotential;

/// Superposition of kernels, e.g. a quadratic confinement plus a short-range
/// Gaussian repulsion.
struct Sum {
  std::vector<ScalarPotential> terms;

  double value(double z) const;
  double derivative(double z) const;
  bool operator==(const Sum& other) const;
};

class ScalarPotential {
 public:
  using Kind = std::variant<Zero, Quadratic, Power, Morse, GaussianAR, DoubleWell, Tabulated, Sum>;

  ScalarPotential() = default;

  static ScalarPotential zero();
  static ScalarPotential quadratic(double a);
  static ScalarPotential power(double q, double a);
  /// Throws DomainError unless a positive smoothing length is supplied: the
  /// unsmoothed kernel is not differentiable at the origin.
  static ScalarPotential morse(double ca, double la, double cr, double lr,
                               std::optional<double> smoothing);
  static ScalarPotential gaussian_ar(double ca, double la, double cr, double lr);
  static ScalarPotential double_well(double a, double b);
  static ScalarPotential tabulated(std::vector<double> knots, std::vector<double> values,
                                   std::vector<double> derivs);
  static ScalarPotential sum(std::vector<ScalarPotential> terms);

  /// W(z). Throws DomainError for non-finite z.
  double eval(double z) const;
  /// W'(z). Throws DomainError for non-finite z.
  double grad(double z) const;

  // Unchecked evaluation for inner loops.
  double value(double z) const;
  double derivative(double z) const;

  /// True when W' vanishes identically on the real line.
  bool gradient_identically_zero() const;
  /// True when W' vanishes identically on (radius, infinity).
  bool gradient_zero_beyond(double radius) const;

  std::string_view kind_name() const;
  const Kind& kind() const noexcept { return kind_; }

  /// Dispatch once on the kernel type; `f` receives the concrete kernel.
  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), kind_);
  }

  bool operator==(const ScalarPotential& other) const { return kind_ == other.kind_; }

 private:
  explicit ScalarPotential(Kind kind) : kind_(std::move(kind)) {}

  Kind kind_{Zero{}};
};

struct ConfiningSpec {
  double radius = 0.0;
  SquareMatrix tail_convexity;
};

/// Symmetric matrix of scalar kernels with its declared semiconvexity moduli.
///
/// Entry symmetry is not enforced here so that `validate` can report it; the
/// declared kappa must be symmetric.
class PotentialMatrix {
 public:
  PotentialMatrix(std::size_t n, std::vector<ScalarPotential> entries, SquareMatrix kappa,
                  std::optional<SquareMatrix> growth = std::nullopt,
                  std::optional<ConfiningSpec> confining = std::nullopt);

  /// All entries quadratic, W_ij(z) = kappa_ij z^2 / 2.
  static PotentialMatrix quadratic(const SquareMatrix& kappa);

  std::size_t size() const noexcept { return n_; }
  const ScalarPotential& entry(std::size_t i, std::size_t j) const;
  const SquareMatrix& kappa() const noexcept { return kappa_; }
  const std::optional<SquareMatrix>& growth() const noexcept { return growth_; }
  const std::optional<ConfiningSpec>& confining() const noexcept { return confining_; }

  double eval(std::size_t i, std::size_t j, double z) const;
  double grad(std::size_t i, std::size_t j, double z) const;

 private:
  void check_index(std::size_t i, std::size_t j) const;

  std::size_t n_;
  std::vector<ScalarPotential> entries_;
  SquareMatrix kappa_;
  std::optional<SquareMatrix> growth_;
  std::optional<ConfiningSpec> confining_;
};

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

/// Smallest second difference of W on a uniform grid of `samples` points.
double estimate_semiconvexity(const ScalarPotential& p, Interval interval, std::size_t samples);
/// Smallest C with |W'(z)| <= C (|z| + 1) on the sample grid.
double estimate_growth_bound(const ScalarPotential& p, Interval interval, std::size_t samples);
/// Largest difference quotient of W' between neighbouring grid points.
double estimate_lipschitz(const ScalarPotential& p, Interval interval, std::size_t samples);

enum class Severity { warning, error };

struct ValidationIssue {
  std::string assumption;  // "W1" ... "W5"
  std::size_t i = 0;
  std::size_t j = 0;
  double witness_z = 0.0;
  double magnitude = 0.0;
  Severity severity = Severity::error;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  SquareMatrix estimated_kappa;
  SquareMatrix estimated_gradient_growth;

  bool all_passed() const noexcept { return issues.empty(); }
  bool has_errors() const noexcept;
  bool flags(std::string_view assumption) const noexcept;
};

ValidationReport validate(const PotentialMatrix& pm, Interval interval, std::size_t samples);

}  // namespace gradflow
