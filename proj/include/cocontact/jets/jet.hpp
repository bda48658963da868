#pragma once

#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cocontact::jets {

/// Raised when an elementary function is evaluated outside its domain
/// (log or sqrt of a non-positive argument, division by zero, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Truncated multivariate Taylor expansion of a scalar field at a point.
///
/// A jet of order K carries the value and every partial derivative up to
/// total order K with respect to the coordinates of a `dim`-dimensional
/// space. Arithmetic and the elementary functions propagate the expansion
/// exactly (Taylor mode), so derivatives are correct to rounding.
///
/// Only the coordinates the jet actually depends on are stored. Jets built
/// from plain numbers are exact constants: they carry `kExactOrder` and never
/// truncate the jets they are combined with.
class Jet;

/// A scalar field on a coordinate space, evaluated on coordinate jets.
using ScalarField = std::function<Jet(std::span<const Jet>)>;

class Jet {
 public:
  static constexpr int kExactOrder = std::numeric_limits<int>::max();
  static constexpr int kMaxOrder = 12;

  Jet() = default;
  Jet(double value);  // NOLINT(google-explicit-constructor): constants mix freely

  static Jet constant(double value) { return Jet(value); }
  static Jet variable(double value, int index, int order, int dim);
  /// One variable jet per coordinate of `point`.
  static std::vector<Jet> seed(std::span<const double> point, int order);

  int order() const { return order_; }
  int dim() const { return dim_; }
  bool is_constant() const { return vars_.empty(); }
  const std::vector<int>& active() const { return vars_; }

  double value() const { return coeffs_[0]; }

  /// Mixed partial derivative d^k f / dx_{i1} ... dx_{ik}; indices may repeat.
  double partial(std::span<const int> indices) const;
  double d(int i) const;
  double d(int i, int j) const;
  double d(int i, int j, int k) const;
  /// Taylor coefficient of prod x_i^{e_i} (derivative divided by prod e_i!).
  double taylor_coefficient(std::span<const int> indices) const;

  std::vector<double> gradient() const;
  /// Dense Hessian, row-major dim x dim. Requires order >= 2.
  std::vector<double> hessian() const;

  /// Jet of d f / dx_index, one order lower.
  Jet derivative(int index) const;
  Jet truncated(int order) const;

  Jet operator-() const;
  Jet& operator+=(const Jet& other);
  Jet& operator-=(const Jet& other);
  Jet& operator*=(const Jet& other);
  Jet& operator/=(const Jet& other);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);

  friend Jet reciprocal(const Jet& x);
  friend Jet sqrt(const Jet& x);
  friend Jet exp(const Jet& x);
  friend Jet log(const Jet& x);
  friend Jet sin(const Jet& x);
  friend Jet cos(const Jet& x);
  /// x^n by repeated multiplication; negative n goes through reciprocal.
  friend Jet pow(const Jet& x, int n);
  /// x^p for real p; requires x > 0 unless p is an integer.
  friend Jet pow(const Jet& x, double p);
  /// x^y = exp(y log x); requires x > 0.
  friend Jet pow(const Jet& x, const Jet& y);

  std::string debug_string() const;

 private:
  Jet(int order, int dim, std::vector<int> vars, std::vector<double> coeffs);

  // Coefficients re-expressed over `vars` (a superset of vars_) truncated to `order`.
  std::vector<double> embedded(const std::vector<int>& vars, int order) const;
  // Drops variables whose coefficients are all zero.
  void prune();
  // f(x) given f^(k)(x0)/k! for k = 0..order().
  Jet compose(std::span<const double> series) const;

  friend Jet combine(const Jet& a, const Jet& b, double sign);
  friend Jet eval_jet(const ScalarField& f, std::span<const double> x, int order);

  int order_ = kExactOrder;
  int dim_ = 0;
  std::vector<int> vars_;
  std::vector<double> coeffs_{0.0};
};

/// Exact truncated Taylor data of `f` at `x` up to `order`.
Jet eval_jet(const ScalarField& f, std::span<const double> x, int order);

/// Directional derivative grad f(w) . z of a field on a space of dim(w).
double lie_derivative(const ScalarField& f, std::span<const double> z, std::span<const double> w);

}  // namespace cocontact::jets
