#include <doctest.h>

#include <cmath>
#include <random>

#include "cocontact/mechanics/mechanics.hpp"
#include "cocontact/systems/systems.hpp"

using namespace cocontact;
using jets::Jet;
using mechanics::HamiltonianPoint;
using mechanics::LagrangianPoint;
using mechanics::LagrangianSystem;

namespace {

LagrangianSystem free_particle() {
  return LagrangianSystem(1, [](std::span<const Jet> x) { return 0.5 * x[2] * x[2]; }, {}, "free");
}

constexpr double kA = 1.0, kB = 5.0, kG = 8.0, kD = 0.02, kW = 0.5;

double duffing_L(double t, double x, double v, double s) {
  return 0.5 * v * v - 0.5 * kA * x * x - 0.25 * kB * std::pow(x, 4) - kD * s + kG * x * std::cos(kW * t);
}

double drag_mass(double t) { return std::exp(-0.1 * t); }

LagrangianPoint random_point(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  LagrangianPoint x;
  x.t = u(rng) + 2.0;
  for (int i = 0; i < n; ++i) {
    x.q.push_back(u(rng));
    x.v.push_back(u(rng));
  }
  x.s = u(rng);
  return x;
}

// Charged-particle points stay away from the fixed charge.
LagrangianPoint charged_point(std::mt19937_64& rng) {
  auto x = random_point(rng, 4);
  x.q[0] += x.q[0] >= 0 ? 1.0 : -1.0;
  return x;
}

}  // namespace

TEST_CASE("energy examples") {
  const auto L = free_particle();
  CHECK(mechanics::lagrangian_energy(L, {0.0, {0.0}, {3.0}, 0.0}) == doctest::Approx(4.5).epsilon(1e-15));

  const auto duffing = systems::duffing();
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10; ++k) {
    const auto x = random_point(rng, 1);
    const double q = x.q[0], v = x.v[0];
    const double expected = 0.5 * v * v + 0.5 * kA * q * q + 0.25 * kB * std::pow(q, 4) + kD * x.s -
                            kG * q * std::cos(kW * x.t);
    CHECK(std::abs(mechanics::lagrangian_energy(duffing.system, x) - expected) < 1e-12);
  }
}

TEST_CASE("charged particle energy ignores v_lambda") {
  const auto p = systems::charged_particle();
  std::mt19937_64 rng(2);
  auto x = charged_point(rng);
  const double e0 = mechanics::lagrangian_energy(p.system, x);
  x.v[3] += 17.0;
  CHECK(mechanics::lagrangian_energy(p.system, x) == doctest::Approx(e0).epsilon(1e-14));
}

TEST_CASE("Euler homogeneity of the energy") {
  // For L = K(v) + c(x).v + U(x) the energy is K - U.
  std::mt19937_64 rng(3);
  const auto duffing = systems::duffing();
  const auto drag = systems::variable_mass_drag();
  const auto charged = systems::charged_particle();
  for (int k = 0; k < 50; ++k) {
    {
      const auto x = random_point(rng, 1);
      const double K = 0.5 * x.v[0] * x.v[0];
      const double U = duffing_L(x.t, x.q[0], 0.0, x.s);
      CHECK(std::abs(mechanics::lagrangian_energy(duffing.system, x) - (K - U)) < 1e-12);
    }
    {
      const auto x = random_point(rng, 1);
      const double m = drag_mass(x.t), g = 9.81, gamma = 0.1, F = 15.0;
      const double K = 0.5 * m * x.v[0] * x.v[0];
      const double U = m * g / (2 * gamma) * (std::exp(-2 * gamma * x.q[0]) - 1) + F / (2 * gamma);
      CHECK(std::abs(mechanics::lagrangian_energy(drag.system, x) - (K - U)) < 1e-12);
    }
    {
      const auto x = charged_point(rng);
      const double K = 0.5 * (x.v[0] * x.v[0] + x.v[1] * x.v[1] + x.v[2] * x.v[2]);
      auto x0 = x;
      x0.v.assign(4, 0.0);
      const double U = charged.system.evaluate(x0, 0).value();
      CHECK(std::abs(mechanics::lagrangian_energy(charged.system, x) - (K - U)) < 1e-12 * (1 + std::abs(U)));
    }
  }
}

TEST_CASE("Legendre map examples") {
  std::mt19937_64 rng(4);
  const auto duffing = systems::duffing();
  const auto drag = systems::variable_mass_drag();
  const auto charged = systems::charged_particle();
  for (int k = 0; k < 20; ++k) {
    auto x = random_point(rng, 1);
    CHECK(mechanics::legendre_map(duffing.system, x).p[0] == doctest::Approx(x.v[0]).epsilon(1e-15));
    const auto h = mechanics::legendre_map(drag.system, x);
    CHECK(std::abs(h.p[0] - (drag_mass(x.t) * x.v[0] - 0.2 * x.s)) < 1e-13);
    CHECK(h.t == x.t);
    CHECK(h.s == x.s);
    const auto c = mechanics::legendre_map(charged.system, charged_point(rng));
    CHECK(c.p[3] == 0.0);
  }
}

TEST_CASE("fibre Hessian is the Jacobian of the Legendre map") {
  std::mt19937_64 rng(5);
  const auto presets = {systems::duffing(), systems::variable_mass_drag(), systems::charged_particle()};
  for (const auto& p : presets) {
    const int n = p.system.n();
    for (int k = 0; k < 10; ++k) {
      const auto x = n == 4 ? charged_point(rng) : random_point(rng, n);
      const auto W = mechanics::hessian_vv(p.system, x);
      CHECK((W - W.transpose()).norm() == 0.0);
      const double h = 1e-5;
      for (int j = 0; j < n; ++j) {
        auto up = x, down = x;
        up.v[static_cast<std::size_t>(j)] += h;
        down.v[static_cast<std::size_t>(j)] -= h;
        const auto pu = mechanics::legendre_map(p.system, up).p;
        const auto pd = mechanics::legendre_map(p.system, down).p;
        for (int i = 0; i < n; ++i)
          CHECK(std::abs((pu[static_cast<std::size_t>(i)] - pd[static_cast<std::size_t>(i)]) / (2 * h) - W(i, j)) < 1e-10 * std::max(1.0, std::abs(W(i, j))));
      }
    }
  }
}

TEST_CASE("Hessian examples and regularity") {
  std::mt19937_64 rng(6);
  const auto duffing = systems::duffing();
  const auto drag = systems::variable_mass_drag();
  const auto charged = systems::charged_particle();
  const auto x = random_point(rng, 1);
  CHECK(mechanics::hessian_vv(duffing.system, x)(0, 0) == 1.0);
  CHECK(mechanics::hessian_vv(drag.system, x)(0, 0) == doctest::Approx(drag_mass(x.t)).epsilon(1e-15));

  const auto rd = mechanics::regularity(duffing.system, x);
  CHECK(rd.verdict == mechanics::Verdict::kRegular);
  CHECK(rd.rank == 1);
  CHECK(mechanics::regularity(drag.system, x).verdict == mechanics::Verdict::kRegular);

  for (int k = 0; k < 20; ++k) {
    const auto xc = charged_point(rng);
    const auto W = mechanics::hessian_vv(charged.system, xc);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(4, 4);
    expected.diagonal() << 1.0, 1.0, 1.0, 0.0;
    CHECK((W - expected).norm() == 0.0);
    const auto r = mechanics::regularity(charged.system, xc);
    CHECK(r.verdict == mechanics::Verdict::kSingular);
    CHECK(r.rank == 3);
    REQUIRE(r.nullspace.size() == 1);
    CHECK(std::abs(std::abs(r.nullspace[0](3)) - 1.0) < 1e-14);
  }
}

TEST_CASE("regularity is invariant under permutation and positive scaling") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 4;
    const int rank = 1 + trial % n;
    Eigen::MatrixXd B(n, rank);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < rank; ++j) B(i, j) = g(rng);
    const Eigen::MatrixXd W = B * B.transpose();
    const auto base = mechanics::regularity(W);
    CHECK(base.rank == rank);
    Eigen::PermutationMatrix<Eigen::Dynamic> P(n);
    P.setIdentity();
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int i = 0; i < n; ++i) P.indices()(i) = idx[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd permuted = P * W * P.transpose();
    CHECK(mechanics::regularity(permuted).rank == rank);
    CHECK(mechanics::regularity(W * 123.4).rank == rank);
    CHECK(mechanics::regularity(W * 1e-3).verdict == base.verdict);
  }
}

TEST_CASE("cocontact Hamiltonian field examples") {
  const jets::ScalarField free_H = [](std::span<const Jet> y) { return 0.5 * y[2] * y[2]; };
  const auto f = mechanics::cocontact_hamiltonian_field(free_H, {0.0, {1.0}, {3.0}, 0.5});
  CHECK(f.t_dot == 1.0);
  CHECK(f.q_dot[0] == 3.0);
  CHECK(f.p_dot[0] == 0.0);
  CHECK(f.s_dot == 4.5);

  const jets::ScalarField linear_H = [](std::span<const Jet> y) { return y[2]; };
  CHECK(mechanics::cocontact_hamiltonian_field(linear_H, {0.0, {1.0}, {3.0}, 0.5}).s_dot == 0.0);

  // Duffing Hamiltonian H = p^2/2 + a x^2/2 + b x^4/4 + d s - g x cos(w t).
  const jets::ScalarField duffing_H = [](std::span<const Jet> y) {
    const Jet& t = y[0];
    const Jet& x = y[1];
    const Jet& p = y[2];
    const Jet& s = y[3];
    return 0.5 * p * p + 0.5 * kA * x * x + 0.25 * kB * pow(x, 4) + kD * s - kG * x * cos(kW * t);
  };
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    const HamiltonianPoint y{u(rng) + 3.0, {u(rng)}, {u(rng)}, u(rng)};
    const double t = y.t, x = y.q[0], p = y.p[0], s = y.s;
    const auto Y = mechanics::cocontact_hamiltonian_field(duffing_H, y);
    CHECK(std::abs(Y.q_dot[0] - p) < 1e-14);
    CHECK(std::abs(Y.p_dot[0] - (-kA * x - kB * x * x * x - kD * p + kG * std::cos(kW * t))) < 1e-12);
    CHECK(std::abs(Y.s_dot - (0.5 * p * p - 0.5 * kA * x * x - 0.25 * kB * std::pow(x, 4) - kD * s +
                              kG * x * std::cos(kW * t))) < 1e-12);
    // s' - p q' = -H
    const double H = 0.5 * p * p + 0.5 * kA * x * x + 0.25 * kB * std::pow(x, 4) + kD * s - kG * x * std::cos(kW * t);
    CHECK(std::abs(Y.s_dot - p * Y.q_dot[0] + H) < 1e-12);
  }
}

TEST_CASE("contact identity holds for random Hamiltonians") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    const double c[4] = {u(rng), u(rng), u(rng), u(rng)};
    const jets::ScalarField H = [c](std::span<const Jet> y) {
      return c[0] * y[3] * y[3] * y[1] + sin(c[1] * y[4]) * y[2] + c[2] * y[3] * y[4] + exp(c[3] * y[0]) * y[1] * y[1];
    };
    const HamiltonianPoint y{u(rng), {u(rng), u(rng)}, {u(rng), u(rng)}, u(rng)};
    const auto Y = mechanics::cocontact_hamiltonian_field(H, y);
    const double h = jets::eval_jet(H, y.coords(), 0).value();
    const double pq = y.p[0] * Y.q_dot[0] + y.p[1] * Y.q_dot[1];
    CHECK(std::abs(Y.s_dot - pq + h) < 1e-12);
  }
}

TEST_CASE("Herglotz residual examples") {
  const auto L = free_particle();
  const auto r = mechanics::herglotz_residual(L, {0.0, {0.0}, {2.0}, 0.0}, std::vector<double>{0.0}, 5.0);
  CHECK(r.components[0] == 0.0);
  CHECK(r.scalar == 3.0);

  std::mt19937_64 rng(10);
  const auto duffing = systems::duffing();
  const auto drag = systems::variable_mass_drag();
  for (int k = 0; k < 20; ++k) {
    const auto x = random_point(rng, 1);
    const double q = x.q[0], v = x.v[0];
    const double a = -kA * q - kB * q * q * q - kD * v + kG * std::cos(kW * x.t);
    const double sd = duffing_L(x.t, q, v, x.s);
    const auto rd = mechanics::herglotz_residual(duffing.system, x, std::vector<double>{a}, sd);
    CHECK(std::abs(rd.components[0]) < 1e-12);
    CHECK(std::abs(rd.scalar) < 1e-12);

    const double m = drag_mass(x.t), mdot = -0.1 * m, gamma = 0.1, F = 15.0, g = 9.81;
    const double ad = F / m - gamma * v * v - mdot / m * v - g;
    const double Ld = 0.5 * m * v * v + m * g / (2 * gamma) * (std::exp(-2 * gamma * q) - 1) - 2 * gamma * v * x.s +
                      F / (2 * gamma);
    const auto rr = mechanics::herglotz_residual(drag.system, x, std::vector<double>{ad}, Ld);
    CHECK(std::abs(rr.components[0]) < 1e-11);
    CHECK(std::abs(rr.scalar) < 1e-12);
    CHECK(rr.max_abs() < 1e-11);
  }
}
