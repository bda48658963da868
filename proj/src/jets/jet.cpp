#include "cocontact/jets/jet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "monomial_table.hpp"

namespace cocontact::jets {
namespace {

std::vector<int> merge_vars(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void check_order(int order) {
  if (order < 0 || order > Jet::kMaxOrder)
    throw std::invalid_argument("jet order must lie in [0, " + std::to_string(Jet::kMaxOrder) + "]");
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Generalized binomial coefficient binom(p, k).
double binomial(double p, int k) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) c *= (p - i) / (i + 1);
  return c;
}

}  // namespace

Jet::Jet(double value) : coeffs_{value} {}

Jet::Jet(int order, int dim, std::vector<int> vars, std::vector<double> coeffs)
    : order_(order), dim_(dim), vars_(std::move(vars)), coeffs_(std::move(coeffs)) {}

Jet Jet::variable(double value, int index, int order, int dim) {
  check_order(order);
  if (index < 0 || index >= dim) throw std::out_of_range("variable index outside coordinate space");
  if (order == 0) return Jet(0, dim, {}, {value});
  std::vector<double> coeffs(static_cast<std::size_t>(order) + 1, 0.0);
  coeffs[0] = value;
  coeffs[1] = 1.0;
  return Jet(order, dim, {index}, std::move(coeffs));
}

std::vector<Jet> Jet::seed(std::span<const double> point, int order) {
  std::vector<Jet> out;
  out.reserve(point.size());
  const int dim = static_cast<int>(point.size());
  for (int i = 0; i < dim; ++i) out.push_back(variable(point[static_cast<std::size_t>(i)], i, order, dim));
  return out;
}

std::vector<double> Jet::embedded(const std::vector<int>& vars, int order) const {
  const int m = static_cast<int>(vars.size());
  if (m == 0) return {coeffs_[0]};
  if (vars_.empty()) {
    std::vector<double> out(static_cast<std::size_t>(detail::monomial_count(m, order)), 0.0);
    out[0] = coeffs_[0];
    return out;
  }
  if (vars == vars_) {
    if (order == order_) return coeffs_;
    const auto count = static_cast<std::size_t>(detail::monomial_count(m, order));
    return {coeffs_.begin(), coeffs_.begin() + static_cast<std::ptrdiff_t>(count)};
  }
  const int own = static_cast<int>(vars_.size());
  std::vector<int> position(static_cast<std::size_t>(own));
  for (int k = 0, u = 0; k < own; ++k) {
    while (vars[static_cast<std::size_t>(u)] != vars_[static_cast<std::size_t>(k)]) ++u;
    position[static_cast<std::size_t>(k)] = u;
  }
  const auto source = detail::table(own, order);
  const auto target = detail::table(m, order);
  std::vector<double> out(static_cast<std::size_t>(target->size(order)), 0.0);
  std::vector<std::uint8_t> exps(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < source->size(order); ++i) {
    const double c = coeffs_[static_cast<std::size_t>(i)];
    if (c == 0.0) continue;
    const auto e = source->exponents(i);
    std::fill(exps.begin(), exps.end(), 0);
    for (int k = 0; k < own; ++k)
      exps[static_cast<std::size_t>(position[static_cast<std::size_t>(k)])] = e[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(target->rank(exps))] = c;
  }
  return out;
}

void Jet::prune() {
  const int m = static_cast<int>(vars_.size());
  if (m == 0) return;
  const auto t = detail::table(m, order_);
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  const int count = t->size(order_);
  for (int i = 1; i < count; ++i) {
    if (coeffs_[static_cast<std::size_t>(i)] == 0.0) continue;
    const auto e = t->exponents(i);
    for (int k = 0; k < m; ++k)
      if (e[static_cast<std::size_t>(k)] != 0) used[static_cast<std::size_t>(k)] = true;
  }
  if (std::all_of(used.begin(), used.end(), [](bool u) { return u; })) return;

  std::vector<int> keep;
  std::vector<int> kept_vars;
  for (int k = 0; k < m; ++k) {
    if (!used[static_cast<std::size_t>(k)]) continue;
    keep.push_back(k);
    kept_vars.push_back(vars_[static_cast<std::size_t>(k)]);
  }
  const int reduced = static_cast<int>(keep.size());
  std::vector<double> out(static_cast<std::size_t>(detail::monomial_count(reduced, order_)), 0.0);
  out[0] = coeffs_[0];
  if (reduced > 0) {
    const auto target = detail::table(reduced, order_);
    std::vector<std::uint8_t> exps(static_cast<std::size_t>(reduced));
    for (int i = 1; i < count; ++i) {
      const double c = coeffs_[static_cast<std::size_t>(i)];
      if (c == 0.0) continue;
      const auto e = t->exponents(i);
      for (int k = 0; k < reduced; ++k)
        exps[static_cast<std::size_t>(k)] = e[static_cast<std::size_t>(keep[static_cast<std::size_t>(k)])];
      out[static_cast<std::size_t>(target->rank(exps))] = c;
    }
  }
  vars_ = std::move(kept_vars);
  coeffs_ = std::move(out);
}

Jet combine(const Jet& a, const Jet& b, double sign) {
  const int order = std::min(a.order_, b.order_);
  const int dim = std::max(a.dim_, b.dim_);
  if (a.vars_.empty() && b.vars_.empty()) return Jet(order, dim, {}, {a.coeffs_[0] + sign * b.coeffs_[0]});
  auto vars = a.vars_ == b.vars_ ? a.vars_ : merge_vars(a.vars_, b.vars_);
  auto coeffs = a.embedded(vars, order);
  const auto other = b.embedded(vars, order);
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += sign * other[i];
  Jet out(order, dim, std::move(vars), std::move(coeffs));
  out.prune();
  return out;
}

Jet Jet::operator-() const {
  Jet out = *this;
  for (auto& c : out.coeffs_) c = -c;
  return out;
}

Jet& Jet::operator+=(const Jet& other) { return *this = combine(*this, other, 1.0); }
Jet& Jet::operator-=(const Jet& other) { return *this = combine(*this, other, -1.0); }
Jet& Jet::operator*=(const Jet& other) { return *this = *this * other; }
Jet& Jet::operator/=(const Jet& other) { return *this = *this / other; }

Jet operator*(const Jet& a, const Jet& b) {
  const int order = std::min(a.order_, b.order_);
  const int dim = std::max(a.dim_, b.dim_);
  if (a.vars_.empty() || b.vars_.empty()) {
    const Jet& scalar = a.vars_.empty() ? a : b;
    const Jet& poly = a.vars_.empty() ? b : a;
    const double k = scalar.coeffs_[0];
    auto coeffs = poly.embedded(poly.vars_, order);
    for (auto& c : coeffs) c *= k;
    Jet out(order, dim, poly.vars_, std::move(coeffs));
    out.prune();
    return out;
  }
  auto vars = a.vars_ == b.vars_ ? a.vars_ : merge_vars(a.vars_, b.vars_);
  const auto ca = a.embedded(vars, order);
  const auto cb = b.embedded(vars, order);
  const auto t = detail::table(static_cast<int>(vars.size()), order);
  const int count = t->size(order);
  std::vector<double> out(static_cast<std::size_t>(count), 0.0);
  for (int i = 0; i < count; ++i) {
    const double x = ca[static_cast<std::size_t>(i)];
    if (x == 0.0) continue;
    const auto row = t->products(i);
    const int limit = t->size(order - t->degree(i));
    for (int j = 0; j < limit; ++j) out[static_cast<std::size_t>(row[static_cast<std::size_t>(j)])] +=
        x * cb[static_cast<std::size_t>(j)];
  }
  Jet result(order, dim, std::move(vars), std::move(out));
  result.prune();
  return result;
}

Jet operator/(const Jet& a, const Jet& b) {
  if (b.vars_.empty()) {
    if (b.coeffs_[0] == 0.0) throw DomainError("division by zero");
    Jet out = a * Jet(1.0 / b.coeffs_[0]);
    return b.order_ < out.order_ ? out.truncated(b.order_) : out;
  }
  return a * reciprocal(b);
}

Jet Jet::compose(std::span<const double> series) const {
  if (vars_.empty()) return Jet(order_, dim_, {}, {series[0]});
  Jet shifted = *this;
  shifted.coeffs_[0] = 0.0;
  Jet result(order_, dim_, {}, {series[static_cast<std::size_t>(order_)]});
  for (int k = order_ - 1; k >= 0; --k) {
    result = result * shifted;
    result.coeffs_[0] += series[static_cast<std::size_t>(k)];
  }
  return result;
}

namespace {

int series_length(const Jet& x) { return x.is_constant() ? 1 : x.order() + 1; }

}  // namespace

Jet reciprocal(const Jet& x) {
  const double x0 = x.value();
  if (x0 == 0.0) throw DomainError("division by zero");
  std::vector<double> series(static_cast<std::size_t>(series_length(x)));
  double term = 1.0 / x0;
  for (auto& c : series) {
    c = term;
    term *= -1.0 / x0;
  }
  return x.compose(series);
}

Jet sqrt(const Jet& x) {
  const double x0 = x.value();
  if (x0 < 0.0 || std::isnan(x0)) throw DomainError("sqrt of a negative argument");
  if (x0 == 0.0) {
    if (x.is_constant()) return x.compose(std::vector<double>{0.0});
    throw DomainError("sqrt is not differentiable at 0");
  }
  std::vector<double> series(static_cast<std::size_t>(series_length(x)));
  for (std::size_t k = 0; k < series.size(); ++k)
    series[k] = binomial(0.5, static_cast<int>(k)) * std::pow(x0, 0.5 - static_cast<double>(k));
  return x.compose(series);
}

Jet exp(const Jet& x) {
  const double e = std::exp(x.value());
  std::vector<double> series(static_cast<std::size_t>(series_length(x)));
  for (std::size_t k = 0; k < series.size(); ++k) series[k] = e / factorial(static_cast<int>(k));
  return x.compose(series);
}

Jet log(const Jet& x) {
  const double x0 = x.value();
  if (!(x0 > 0.0)) throw DomainError("log of a non-positive argument");
  std::vector<double> series(static_cast<std::size_t>(series_length(x)));
  series[0] = std::log(x0);
  double power = 1.0;
  for (std::size_t k = 1; k < series.size(); ++k) {
    power *= x0;
    series[k] = ((k % 2 == 1) ? 1.0 : -1.0) / (static_cast<double>(k) * power);
  }
  return x.compose(series);
}

Jet sin(const Jet& x) {
  const double s = std::sin(x.value());
  const double c = std::cos(x.value());
  const double cycle[4] = {s, c, -s, -c};
  std::vector<double> series(static_cast<std::size_t>(series_length(x)));
  for (std::size_t k = 0; k < series.size(); ++k) series[k] = cycle[k % 4] / factorial(static_cast<int>(k));
  return x.compose(series);
}

Jet cos(const Jet& x) {
  const double s = std::sin(x.value());
  const double c = std::cos(x.value());
  const double cycle[4] = {c, -s, -c, s};
  std::vector<double> series(static_cast<std::size_t>(series_length(x)));
  for (std::size_t k = 0; k < series.size(); ++k) series[k] = cycle[k % 4] / factorial(static_cast<int>(k));
  return x.compose(series);
}

Jet pow(const Jet& x, int n) {
  if (n < 0) return reciprocal(pow(x, -n));
  Jet result(1.0);
  Jet base = x;
  bool first = true;
  while (n > 0) {
    if (n & 1) {
      result = first ? base : result * base;
      first = false;
    }
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

Jet pow(const Jet& x, double p) {
  if (std::nearbyint(p) == p && std::abs(p) < 1 << 20) return pow(x, static_cast<int>(p));
  const double x0 = x.value();
  if (!(x0 > 0.0)) {
    if (x0 == 0.0 && x.is_constant() && p > 0.0) return x.compose(std::vector<double>{0.0});
    throw DomainError("non-integer power of a non-positive argument");
  }
  std::vector<double> series(static_cast<std::size_t>(series_length(x)));
  for (std::size_t k = 0; k < series.size(); ++k)
    series[k] = binomial(p, static_cast<int>(k)) * std::pow(x0, p - static_cast<double>(k));
  return x.compose(series);
}

Jet pow(const Jet& x, const Jet& y) {
  if (!(x.value() > 0.0)) throw DomainError("power with a variable exponent needs a positive base");
  return exp(y * log(x));
}

double Jet::taylor_coefficient(std::span<const int> indices) const {
  if (indices.empty()) return coeffs_[0];
  if (static_cast<int>(indices.size()) > order_)
    throw std::out_of_range("derivative order exceeds jet order");
  const int m = static_cast<int>(vars_.size());
  std::vector<std::uint8_t> exps(static_cast<std::size_t>(m), 0);
  for (int index : indices) {
    auto it = std::lower_bound(vars_.begin(), vars_.end(), index);
    if (it == vars_.end() || *it != index) return 0.0;
    ++exps[static_cast<std::size_t>(it - vars_.begin())];
  }
  const auto t = detail::table(m, order_);
  return coeffs_[static_cast<std::size_t>(t->rank(exps))];
}

double Jet::partial(std::span<const int> indices) const {
  const double c = taylor_coefficient(indices);
  if (c == 0.0) return 0.0;
  std::vector<int> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  double scale = 1.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    scale *= factorial(static_cast<int>(j - i));
    i = j;
  }
  return c * scale;
}

double Jet::d(int i) const {
  const int idx[1] = {i};
  return partial(idx);
}

double Jet::d(int i, int j) const {
  const int idx[2] = {i, j};
  return partial(idx);
}

double Jet::d(int i, int j, int k) const {
  const int idx[3] = {i, j, k};
  return partial(idx);
}

std::vector<double> Jet::gradient() const {
  std::vector<double> g(static_cast<std::size_t>(dim_), 0.0);
  for (int var : vars_) g[static_cast<std::size_t>(var)] = d(var);
  return g;
}

std::vector<double> Jet::hessian() const {
  const auto n = static_cast<std::size_t>(dim_);
  std::vector<double> h(n * n, 0.0);
  for (int a : vars_)
    for (int b : vars_) h[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)] = d(a, b);
  return h;
}

Jet Jet::derivative(int index) const {
  if (order_ == kExactOrder) return Jet(0.0);
  if (order_ < 1) throw std::out_of_range("cannot differentiate an order-0 jet");
  const int lowered_order = order_ - 1;
  auto it = std::lower_bound(vars_.begin(), vars_.end(), index);
  if (it == vars_.end() || *it != index) return Jet(lowered_order, dim_, {}, {0.0});
  const int k = static_cast<int>(it - vars_.begin());
  const int m = static_cast<int>(vars_.size());
  const auto t = detail::table(m, order_);
  std::vector<double> out(static_cast<std::size_t>(t->size(lowered_order)), 0.0);
  for (int i = 1; i < t->size(order_); ++i) {
    const double c = coeffs_[static_cast<std::size_t>(i)];
    if (c == 0.0) continue;
    const int low = t->lowered(i, k);
    if (low < 0) continue;
    out[static_cast<std::size_t>(low)] += c * t->exponents(i)[static_cast<std::size_t>(k)];
  }
  Jet result(lowered_order, dim_, vars_, std::move(out));
  result.prune();
  return result;
}

Jet Jet::truncated(int order) const {
  if (order >= order_) return *this;
  Jet out(order, dim_, vars_, embedded(vars_, order));
  out.prune();
  return out;
}

std::string Jet::debug_string() const {
  std::ostringstream os;
  os << "Jet(order=" << (order_ == kExactOrder ? std::string("exact") : std::to_string(order_))
     << ", value=" << coeffs_[0] << ", vars=[";
  for (std::size_t i = 0; i < vars_.size(); ++i) os << (i ? "," : "") << vars_[i];
  os << "], terms=" << coeffs_.size() << ")";
  return os.str();
}

Jet eval_jet(const ScalarField& f, std::span<const double> x, int order) {
  check_order(order);
  const auto seeds = Jet::seed(x, order);
  Jet out = f(seeds);
  out.dim_ = static_cast<int>(x.size());
  return out;
}

double lie_derivative(const ScalarField& f, std::span<const double> z, std::span<const double> w) {
  if (z.size() != w.size())
    throw std::invalid_argument("vector field has dimension " + std::to_string(z.size()) +
                                " but the point has dimension " + std::to_string(w.size()));
  const Jet j = eval_jet(f, w, 1);
  double sum = 0.0;
  for (int var : j.active()) sum += j.d(var) * z[static_cast<std::size_t>(var)];
  return sum;
}

}  // namespace cocontact::jets
