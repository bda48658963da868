#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cocontact/jets/coordinate_space.hpp"
#include "cocontact/jets/jet.hpp"

using cocontact::jets::CoordinateSpace;
using cocontact::jets::DomainError;
using cocontact::jets::eval_jet;
using cocontact::jets::Jet;
using cocontact::jets::ScalarField;
using cocontact::jets::SpaceKind;

TEST_CASE("square at 3") {
  const ScalarField f = [](std::span<const Jet> x) { return x[0] * x[0]; };
  const double x[1] = {3.0};
  const Jet j = eval_jet(f, x, 2);
  CHECK(j.value() == 9.0);
  CHECK(j.gradient() == std::vector<double>{6.0});
  CHECK(j.hessian() == std::vector<double>{2.0});
}

TEST_CASE("v cos t against central differences") {
  const ScalarField f = [](std::span<const Jet> x) { return x[1] * cos(x[0]); };
  const double x[2] = {0.0, 2.0};
  const Jet j = eval_jet(f, x, 2);
  CHECK(j.value() == doctest::Approx(2.0));
  CHECK(j.d(0) == doctest::Approx(0.0));
  CHECK(j.d(0, 0) == doctest::Approx(-2.0));

  auto g = [](double t, double v) { return v * std::cos(t); };
  const double h = 1e-5;
  const double dt = (g(h, 2.0) - g(-h, 2.0)) / (2 * h);
  const double dtt = (g(h, 2.0) - 2 * g(0.0, 2.0) + g(-h, 2.0)) / (h * h);
  CHECK(std::abs(j.d(0) - dt) < 1e-9);
  CHECK(std::abs(j.d(0, 0) - dtt) < 1e-4);
}

TEST_CASE("grad length equals the coordinate dimension") {
  const ScalarField f = [](std::span<const Jet> x) { return x[2] * 2.0; };
  const double x[5] = {0, 1, 2, 3, 4};
  const Jet j = eval_jet(f, x, 1);
  CHECK(j.gradient().size() == 5);
  CHECK(j.gradient()[2] == 2.0);
  const Jet c = eval_jet([](std::span<const Jet>) { return Jet(4.0); }, x, 3);
  CHECK(c.gradient().size() == 5);
}

TEST_CASE("random cubic polynomials are reproduced exactly") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    // p(x) = c0 + sum a_i x_i + sum b_ij x_i x_j + sum c_ijk x_i x_j x_k, i <= j <= k
    const int n = 3;
    std::vector<double> a(n), b(n * n), c(n * n * n);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    for (auto& v : c) v = u(rng);
    const double c0 = u(rng);
    const ScalarField p = [&](std::span<const Jet> x) {
      Jet s(c0);
      for (int i = 0; i < n; ++i) {
        s += a[i] * x[i];
        for (int j = i; j < n; ++j) {
          s += b[i * n + j] * x[i] * x[j];
          for (int k = j; k < n; ++k) s += c[(i * n + j) * n + k] * x[i] * x[j] * x[k];
        }
      }
      return s;
    };
    // Expand at the origin: Taylor coefficients are the monomial coefficients.
    const double origin[3] = {0, 0, 0};
    const Jet j = eval_jet(p, origin, 3);
    CHECK(std::abs(j.value() - c0) < 1e-12);
    for (int i = 0; i < n; ++i) {
      const int i1[1] = {i};
      CHECK(std::abs(j.taylor_coefficient(i1) - a[i]) < 1e-12);
      for (int jj = i; jj < n; ++jj) {
        const int i2[2] = {i, jj};
        CHECK(std::abs(j.taylor_coefficient(i2) - b[i * n + jj]) < 1e-12);
        for (int k = jj; k < n; ++k) {
          const int i3[3] = {i, jj, k};
          CHECK(std::abs(j.taylor_coefficient(i3) - c[(i * n + jj) * n + k]) < 1e-12);
        }
      }
    }
    // At a shifted point the third derivatives are unchanged.
    const double shifted[3] = {u(rng), u(rng), u(rng)};
    const Jet js = eval_jet(p, shifted, 3);
    const double third = js.d(0, 1, 2);
    CHECK(std::abs(third - c[(0 * n + 1) * n + 2]) < 1e-12);
    CHECK(std::abs(js.d(1, 1, 1) - 6 * c[(1 * n + 1) * n + 1]) < 1e-12);
  }
}

TEST_CASE("mixed partials are symmetric exactly") {
  const ScalarField f = [](std::span<const Jet> x) { return exp(x[0] * x[1]) * sin(x[2] + x[0]) / (1.0 + x[1] * x[1]); };
  const double x[3] = {0.3, -0.7, 1.1};
  const Jet j = eval_jet(f, x, 3);
  const auto h = j.hessian();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) CHECK(h[a * 3 + b] == h[b * 3 + a]);
  CHECK(j.d(0, 1, 2) == j.d(2, 1, 0));
  CHECK(j.d(0, 0, 1) == j.d(1, 0, 0));
}

TEST_CASE("elementary functions match finite differences") {
  const ScalarField f = [](std::span<const Jet> x) {
    return sqrt(x[0]) * log(x[1]) + pow(x[0], 1.5) - pow(x[1], x[0]) + pow(x[0], -2) + cos(x[0] * x[1]);
  };
  auto g = [](double a, double b) {
    return std::sqrt(a) * std::log(b) + std::pow(a, 1.5) - std::pow(b, a) + std::pow(a, -2) + std::cos(a * b);
  };
  const double x[2] = {1.3, 2.1};
  const Jet j = eval_jet(f, x, 3);
  CHECK(j.value() == doctest::Approx(g(1.3, 2.1)).epsilon(1e-14));
  const double h = 1e-5;
  CHECK(j.d(0) == doctest::Approx((g(1.3 + h, 2.1) - g(1.3 - h, 2.1)) / (2 * h)).epsilon(1e-7));
  CHECK(j.d(1) == doctest::Approx((g(1.3, 2.1 + h) - g(1.3, 2.1 - h)) / (2 * h)).epsilon(1e-7));
  const double k = 1e-4;
  const double dab = (g(1.3 + k, 2.1 + k) - g(1.3 + k, 2.1 - k) - g(1.3 - k, 2.1 + k) + g(1.3 - k, 2.1 - k)) / (4 * k * k);
  CHECK(j.d(0, 1) == doctest::Approx(dab).epsilon(1e-5));
  const double m = 1e-3;
  const double daaa = (g(1.3 + 2 * m, 2.1) - 2 * g(1.3 + m, 2.1) + 2 * g(1.3 - m, 2.1) - g(1.3 - 2 * m, 2.1)) / (2 * m * m * m);
  CHECK(j.d(0, 0, 0) == doctest::Approx(daaa).epsilon(1e-4));
}

TEST_CASE("high order univariate series") {
  const ScalarField f = [](std::span<const Jet> x) { return exp(x[0]); };
  const double x[1] = {0.5};
  const Jet j = eval_jet(f, x, 8);
  std::vector<int> idx;
  for (int k = 0; k <= 8; ++k) {
    CHECK(j.partial(idx) == doctest::Approx(std::exp(0.5)).epsilon(1e-13));
    idx.push_back(0);
  }
}

TEST_CASE("derivative lowers the order") {
  const ScalarField f = [](std::span<const Jet> x) { return x[0] * x[0] * x[1]; };
  const double x[2] = {2.0, 3.0};
  const Jet j = eval_jet(f, x, 3);
  const Jet dx = j.derivative(0);
  CHECK(dx.order() == 2);
  CHECK(dx.value() == 12.0);
  CHECK(dx.d(0) == 6.0);
  CHECK(dx.d(1) == 4.0);
  CHECK(dx.d(0, 1) == 2.0);
}

TEST_CASE("domain errors") {
  const double neg[1] = {-1.0};
  const double zero[1] = {0.0};
  CHECK_THROWS_AS(eval_jet([](std::span<const Jet> x) { return log(x[0]); }, neg, 1), DomainError);
  CHECK_THROWS_AS(eval_jet([](std::span<const Jet> x) { return sqrt(x[0]); }, neg, 1), DomainError);
  CHECK_THROWS_AS(eval_jet([](std::span<const Jet> x) { return 1.0 / x[0]; }, zero, 1), DomainError);
  CHECK_THROWS_AS(eval_jet([](std::span<const Jet> x) { return x[0] / 0.0; }, neg, 1), DomainError);
  CHECK_THROWS_AS(eval_jet([](std::span<const Jet> x) { return x[0]; }, neg, 13), std::invalid_argument);
}

TEST_CASE("lie derivative") {
  // xi = s picks the E component
  const ScalarField s = [](std::span<const Jet> w) { return w[4]; };
  const double w[5] = {0.1, 0.2, 0.3, 0.4, 0.5};
  const double z[5] = {1.0, 0.3, -2.0, 7.0, 1.25};
  CHECK(cocontact::jets::lie_derivative(s, z, w) == 1.25);
  const double bad[4] = {1, 2, 3, 4};
  CHECK_THROWS_AS(cocontact::jets::lie_derivative(s, bad, w), std::invalid_argument);
}

TEST_CASE("coordinate space layout is a bijection") {
  for (auto kind : {SpaceKind::kLagrangian, SpaceKind::kHamiltonian, SpaceKind::kPontryagin}) {
    for (int n = 1; n <= 4; ++n) {
      const CoordinateSpace space(kind, n);
      CHECK(space.dim() == (kind == SpaceKind::kPontryagin ? 3 * n + 2 : 2 * n + 2));
      std::vector<int> hits(static_cast<std::size_t>(space.dim()), 0);
      for (int i = 0; i < space.dim(); ++i) {
        const auto name = space.name(i);
        const auto back = space.index_of(name);
        REQUIRE(back.has_value());
        CHECK(*back == i);
        ++hits[static_cast<std::size_t>(i)];
      }
      for (int h : hits) CHECK(h == 1);
    }
  }
  const CoordinateSpace lag(SpaceKind::kLagrangian, 2);
  CHECK_FALSE(lag.index_of("p1").has_value());
  CHECK_FALSE(lag.index_of("q3").has_value());
  CHECK_FALSE(lag.index_of("q01").has_value());
  CHECK(lag.index_of("v2") == 4);
}
