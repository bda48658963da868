#include <doctest.h>

#include <cmath>
#include <random>

#include "cocontact/skinner_rusk/skinner_rusk.hpp"
#include "cocontact/systems/systems.hpp"

using namespace cocontact;
using jets::Jet;
using mechanics::LagrangianSystem;
using sr::PontryaginPoint;

namespace {

constexpr double kA = 1.0, kB = 5.0, kG = 8.0, kD = 0.02, kW = 0.5;
constexpr double kCharge = 8.9875517923e9 * -2e-4;  // Coulomb constant times the fixed charge
constexpr double kK = 2e-4, kGamma = 0.3;

LagrangianSystem from_fn(int n, jets::ScalarField f) { return LagrangianSystem(n, std::move(f)); }

LagrangianSystem free_particle() {
  return from_fn(1, [](std::span<const Jet> x) { return 0.5 * x[2] * x[2]; });
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Third-order partials of kCharge / r, by hand.
struct Coulomb {
  double x, y, z, r;
  double d1(int i) const { return -kCharge * c(i) / (r * r * r); }
  double d2(int i, int j) const {
    return kCharge * (3 * c(i) * c(j) / std::pow(r, 5) - (i == j ? 1.0 : 0.0) / std::pow(r, 3));
  }
  double c(int i) const { return i == 0 ? x : i == 1 ? y : z; }
};

Coulomb coulomb(double x, double y, double z) { return {x, y, z, std::sqrt(x * x + y * y + z * z)}; }

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("coupling examples") {
  CHECK(sr::coupling({0.0, {0.0, 0.0}, {3.0, 4.0}, {1.0, 2.0}, 0.0}) == 11.0);
  CHECK(sr::coupling({0.0, {0.0, 0.0}, {0.0, 0.0}, {1.0, 2.0}, 0.0}) == 0.0);
  const double m = 2.0, vx = 1.5, vy = -2.0, vz = 0.5;
  const PontryaginPoint w{0.0, {1, 1, 1, 0}, {vx, vy, vz, 7.0}, {m * vx, m * vy, m * vz, 0.0}, 0.0};
  CHECK(sr::coupling(w) == doctest::Approx(m * (vx * vx + vy * vy + vz * vz)));
}

TEST_CASE("unified Hamiltonian examples") {
  std::mt19937_64 rng(11);
  const auto duffing = systems::duffing();
  const auto drag = systems::variable_mass_drag();
  for (int k = 0; k < 20; ++k) {
    const double t = uniform(rng, 0, 5), x = uniform(rng, -2, 2), v = uniform(rng, -2, 2), p = uniform(rng, -2, 2),
                 s = uniform(rng, -1, 1);
    const PontryaginPoint w{t, {x}, {v}, {p}, s};
    const double Hd = p * v - 0.5 * v * v + 0.5 * kA * x * x + 0.25 * kB * std::pow(x, 4) + kD * s -
                      kG * x * std::cos(kW * t);
    CHECK(std::abs(sr::hamiltonian(duffing.system, w) - Hd) < 1e-12);
    const double m = std::exp(-0.1 * t), gamma = 0.1, F = 15.0, g = 9.81;
    const double Hg = p * v - 0.5 * m * v * v - m * g / (2 * gamma) * (std::exp(-2 * gamma * x) - 1) +
                      2 * gamma * v * s - F / (2 * gamma);
    CHECK(std::abs(sr::hamiltonian(drag.system, w) - Hg) < 1e-12);
  }
  const auto L = free_particle();
  CHECK(sr::hamiltonian(L, {0.0, {0.0}, {3.0}, {3.0}, 0.0}) == 4.5);
}

TEST_CASE("primary constraint examples") {
  const auto duffing = systems::duffing();
  CHECK(sr::primary_constraints(duffing.system, {1.0, {0.3}, {0.7}, {2.0}, 0.1})[0] == doctest::Approx(1.3));
  const auto drag = systems::variable_mass_drag();
  const double t = 2.0, v = 1.5, p = 0.25, s = 0.4;
  CHECK(sr::primary_constraints(drag.system, {t, {0.1}, {v}, {p}, s})[0] ==
        doctest::Approx(p - std::exp(-0.1 * t) * v + 2 * 0.1 * s));
  const auto charged = systems::charged_particle();
  const auto xi = sr::primary_constraints(charged.system, {0.0, {2, 1, 0, 0.3}, {1, 2, 3, 4}, {5, 6, 7, 8}, 0.0});
  CHECK(xi == std::vector<double>{4.0, 4.0, 4.0, 8.0});
}

TEST_CASE("tangency solve on regular systems") {
  std::mt19937_64 rng(12);
  for (const auto& p : {systems::duffing(), systems::variable_mass_drag()}) {
    for (int k = 0; k < 20; ++k) {
      const auto w = p.sample(rng);
      const auto r = sr::tangency_solve(p.system, w, sr::LadderStructure::primaries(1));
      CHECK(r.new_constraints.empty());
      CHECK(r.undetermined.empty());
      CHECK_FALSE(r.incompatible);
      CHECK(std::abs(r.C[0] - p.expected_C(w)[0]) < 1e-10);
    }
  }
  const auto duffing = systems::duffing();
  const PontryaginPoint w{2.0, {0.5}, {-1.0}, {-1.0}, 0.3};
  const double C = -kA * 0.5 - kB * 0.125 + kD + kG * std::cos(kW * 2.0);
  CHECK(sr::tangency_solve(duffing.system, w, sr::LadderStructure::primaries(1)).C[0] == doctest::Approx(C));
}

TEST_CASE("first generation of the charged particle") {
  const auto p = systems::charged_particle();
  std::mt19937_64 rng(13);
  for (int k = 0; k < 20; ++k) {
    const double x = uniform(rng, 1, 3), y = uniform(rng, -2, 2), z = uniform(rng, -1, 1), lambda = uniform(rng, -1, 1);
    const double t = uniform(rng, 0, 2);
    const std::vector<double> v{uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3)};
    const PontryaginPoint w{t, {x, y, z, lambda}, v, {v[0], v[1], v[2], 0.0}, 0.0};
    const auto r = sr::tangency_solve(p.system, w, sr::LadderStructure::primaries(4));
    const auto phi = coulomb(x, y, z);
    CHECK(std::abs(r.C[0] - (-kK * phi.d1(0) - kGamma * v[0])) < 1e-10);
    CHECK(std::abs(r.C[1] - (-kK * phi.d1(1) - kGamma * v[1])) < 1e-10);
    CHECK(std::abs(r.C[2] - (lambda - kK * phi.d1(2) - kGamma * v[2])) < 1e-10);
    CHECK(r.C[3] == 0.0);
    REQUIRE(r.undetermined.size() == 1);
    CHECK(std::abs(r.undetermined[0](3)) == doctest::Approx(1.0));
    REQUIRE(r.new_constraints.size() == 1);
    CHECK(r.new_constraints[0].spec.generation == 2);
    CHECK(r.new_constraints[0].value == doctest::Approx(z - t).epsilon(1e-12));
  }
}

TEST_CASE("regular systems close in one step") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 40; ++trial) {
    const double a = uniform(rng, 0.5, 2), b = uniform(rng, -0.4, 0.4), c = uniform(rng, 0.5, 2);
    const double d = uniform(rng, -1, 1), e = uniform(rng, -1, 1);
    // Positive-definite kinetic form plus position, time and s dependence.
    const auto L = from_fn(2, [=](std::span<const Jet> x) {
      const Jet& t = x[0];
      const Jet& v1 = x[3];
      const Jet& v2 = x[4];
      return 0.5 * a * v1 * v1 + b * v1 * v2 + 0.5 * c * v2 * v2 + d * sin(x[1]) * v2 - e * x[5] * (1 + 0.1 * cos(t)) -
             x[2] * x[2];
    });
    PontryaginPoint w{uniform(rng, 0, 3), {uniform(rng, -1, 1), uniform(rng, -1, 1)},
                      {uniform(rng, -1, 1), uniform(rng, -1, 1)}, {0, 0}, uniform(rng, -1, 1)};
    REQUIRE(mechanics::regularity(L, w.lagrangian()).verdict == mechanics::Verdict::kRegular);
    w.p = mechanics::legendre_map(L, w.lagrangian()).p;
    const auto r = sr::run_constraint_algorithm(L, w);
    CHECK(r.ladder.status == sr::LadderStatus::kClosed);
    CHECK(r.ladder.generations.size() == 1);
    CHECK(r.ladder.structure->max_depth() == 1);
    CHECK(r.ladder.kernel_dim == 0);
  }
}

TEST_CASE("charged particle ladder on the rising plane") {
  const auto p = systems::charged_particle();
  std::mt19937_64 rng(15);
  const auto w = p.sample(rng);
  const auto r = sr::run_constraint_algorithm(p.system, w);
  CHECK(r.ladder.status == sr::LadderStatus::kClosed);
  REQUIRE(r.ladder.generations.size() == 5);
  CHECK(r.ladder.generations[0].size() == 4);
  for (std::size_t g = 1; g < 5; ++g) CHECK(r.ladder.generations[g].size() == 1);
  CHECK(r.ladder.rank == 4);
  CHECK(r.ladder.kernel_dim == 0);
  CHECK(r.ladder.generations[1][0].label == "xi2[1]");

  // Each generation, evaluated on the submanifold cut out by the earlier
  // ones, reduces to its closed form there.
  const auto& gen = r.ladder.generations;
  for (int k = 0; k < 100; ++k) {
    const double t = uniform(rng, 0, 2), x = uniform(rng, 1, 3), y = uniform(rng, -2, 2);
    const double vx = uniform(rng, -5, 5), vy = uniform(rng, -5, 5);
    PontryaginPoint q{t, {x, y, uniform(rng, -1, 1), uniform(rng, -1, 1)},
                      {vx, vy, uniform(rng, -2, 2), uniform(rng, -50, 50)}, {}, uniform(rng, -1, 1)};
    const auto on_w1 = [](PontryaginPoint& w) { w.p = {w.v[0], w.v[1], w.v[2], 0.0}; };
    on_w1(q);
    CHECK(std::abs(gen[1][0].evaluator(q) - (q.q[2] - t)) < 1e-10);

    q.q[2] = t;
    CHECK(std::abs(gen[2][0].evaluator(q) - (q.v[2] - 1.0)) < 1e-10);

    q.v[2] = 1.0;
    on_w1(q);
    const auto phi = coulomb(x, y, t);
    CHECK(std::abs(gen[3][0].evaluator(q) - (q.q[3] - kK * phi.d1(2) - kGamma)) < 1e-10);

    q.q[3] = kK * phi.d1(2) + kGamma;
    const double v_lambda = kK * (phi.d2(0, 2) * vx + phi.d2(1, 2) * vy + phi.d2(2, 2));
    CHECK(std::abs(gen[4][0].evaluator(q) - (q.v[3] - v_lambda)) < 1e-10 * std::max(1.0, std::abs(v_lambda)));
  }
}

TEST_CASE("third generation for a general constraint surface") {
  // f = z + 0.1 x - sin t
  const systems::DualField f{[](std::span<const Jet> x) { return x[3] + 0.1 * x[1] - sin(x[0]); },
                             "q3 + 0.1*q1 - sin(t)"};
  const auto p = systems::charged_particle(systems::coulomb_potential(-2e-4), f, 1.0, kK, kGamma);
  // A point satisfying the first three generations.
  const double t = 0.4, x = 2.0, vx = 0.5;
  const double z = std::sin(t) - 0.1 * x;
  const double vz = std::cos(t) - 0.1 * vx;
  const PontryaginPoint w{t, {x, 0.3, z, 0.2}, {vx, 1.0, vz, 0.0}, {vx, 1.0, vz, 0.0}, 0.0};
  sr::AlgorithmOptions opts;
  opts.max_generations = 3;
  const auto r = sr::run_constraint_algorithm(p.system, w, opts);
  CHECK(r.ladder.status == sr::LadderStatus::kMaxIterations);
  REQUIRE(r.ladder.generations.size() == 3);
  std::mt19937_64 rng(16);
  for (int k = 0; k < 20; ++k) {
    PontryaginPoint q{uniform(rng, 0, 2), {uniform(rng, 1, 3), uniform(rng, -1, 1), 0.0, uniform(rng, -1, 1)},
                      {uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2)}, {},
                      0.0};
    q.q[2] = std::sin(q.t) - 0.1 * q.q[0];
    q.p = {q.v[0], q.v[1], q.v[2], 0.0};
    const double expected = -std::cos(q.t) + 0.1 * q.v[0] + q.v[2];
    CHECK(std::abs(r.ladder.generations[2][0].evaluator(q) - expected) < 1e-12);
  }
}

TEST_CASE("assembled Z: SODE, energy and tangency") {
  std::mt19937_64 rng(17);
  for (const auto& name : systems::preset_names()) {
    const auto p = systems::preset(name);
    const auto w0 = p.sample(rng);
    const auto ladder = sr::run_constraint_algorithm(p.system, w0).ladder;
    REQUIRE(ladder.status == sr::LadderStatus::kClosed);
    for (int k = 0; k < 25; ++k) {
      const auto w = p.sample(rng);
      const auto Z = sr::assemble_Z(p.system, w, ladder);
      CHECK(Z.A == 1.0);
      CHECK(Z.B == w.v);
      const double L = p.system.evaluate(w.lagrangian(), 0).value();
      CHECK(std::abs(Z.E - L) < 1e-12 * std::max(1.0, std::abs(L)));
      const double pB = sr::coupling(PontryaginPoint{w.t, w.q, Z.B, w.p, w.s});
      CHECK(std::abs(Z.E - (pB - sr::hamiltonian(p.system, w))) < 1e-12 * std::max(1.0, std::abs(pB)));
      const auto C = p.expected_C(w);
      const auto D = p.expected_D(w);
      for (std::size_t i = 0; i < C.size(); ++i) {
        CHECK(std::abs(Z.C[i] - C[i]) < 1e-10 * std::max(1.0, std::abs(C[i])));
        CHECK(std::abs(Z.D[i] - D[i]) < 1e-10 * std::max(1.0, std::abs(D[i])));
      }
      const auto jac = sr::constraint_jacobian(p.system, *ladder.structure, w.coords());
      const auto z = Z.coords();
      const Eigen::VectorXd lie = jac.gradients * Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
      CHECK(lie.lpNorm<Eigen::Infinity>() <= 1e-9);
    }
  }
}

TEST_CASE("Duffing C and D agree on the primary constraint") {
  const auto p = systems::duffing();
  std::mt19937_64 rng(18);
  const auto ladder = sr::run_constraint_algorithm(p.system, p.sample(rng)).ladder;
  for (int k = 0; k < 100; ++k) {
    const auto Z = sr::assemble_Z(p.system, p.sample(rng), ladder);
    CHECK(std::abs(Z.C[0] - Z.D[0]) <= 1e-12);
  }
}

TEST_CASE("free particle Z") {
  const auto L = free_particle();
  const PontryaginPoint w{0.5, {1.0}, {3.0}, {3.0}, 2.0};
  const auto r = sr::run_constraint_algorithm(L, w);
  CHECK(r.Z.coords() == std::vector<double>{1.0, 3.0, 0.0, 0.0, 4.5});
}

TEST_CASE("Lie derivative along Z") {
  const auto p = systems::variable_mass_drag();
  std::mt19937_64 rng(19);
  for (int k = 0; k < 10; ++k) {
    const auto w = p.sample(rng);
    const auto Z = sr::run_constraint_algorithm(p.system, w).Z;
    const jets::ScalarField xi = [](std::span<const Jet> x) {
      // p - m(t) v + 2 gamma s on (t, y, v, p, s)
      return x[3] - exp(-0.1 * x[0]) * x[2] + 0.2 * x[4];
    };
    CHECK(std::abs(sr::lie_derivative(xi, Z, w)) < 1e-12);
    const jets::ScalarField time = [](std::span<const Jet> x) { return x[0]; };
    CHECK(sr::lie_derivative(time, Z, w) == 1.0);
  }
}

TEST_CASE("statuses: incompatible, max iterations, infeasible") {
  // L = x: no kinetic term, so the momentum equation demands 1 = 0.
  const auto linear = from_fn(1, [](std::span<const Jet> x) { return x[1]; });
  const auto r = sr::run_constraint_algorithm(linear, {0.0, {0.5}, {0.0}, {0.0}, 0.0});
  CHECK(r.ladder.status == sr::LadderStatus::kIncompatible);
  CHECK(r.ladder.incompatible_value == doctest::Approx(1.0));

  const auto charged = systems::charged_particle();
  std::mt19937_64 rng(20);
  sr::AlgorithmOptions opts;
  opts.max_generations = 2;
  const auto m = sr::run_constraint_algorithm(charged.system, charged.sample(rng), opts);
  CHECK(m.ladder.status == sr::LadderStatus::kMaxIterations);
  CHECK(m.ladder.generations.size() == 2);

  const auto duffing = systems::duffing();
  try {
    sr::run_constraint_algorithm(duffing.system, {0.0, {1.0}, {0.0}, {0.5}, 0.0});
    FAIL("expected InfeasiblePoint");
  } catch (const sr::InfeasiblePoint& e) {
    CHECK(e.constraint() == 0);
    CHECK(e.value() == doctest::Approx(0.5));
  }

  CHECK_THROWS_AS(sr::assemble_Z(linear, {0.0, {0.5}, {0.0}, {0.0}, 0.0}, r.ladder), sr::LadderNotClosed);
}

TEST_CASE("degenerate v1*s does not crash") {
  const auto L = from_fn(1, [](std::span<const Jet> x) { return x[2] * x[3]; });
  // On the primary constraint p = s.
  const auto r = sr::run_constraint_algorithm(L, {0.0, {0.0}, {0.7}, {0.4}, 0.4});
  CHECK(r.ladder.status == sr::LadderStatus::kClosed);
  CHECK(r.ladder.generations.size() == 1);
  CHECK(r.ladder.kernel_dim == 1);
}

TEST_CASE("gauge hook fixes free directions") {
  // v2 does not appear, so C2 is free.
  const auto L = from_fn(2, [](std::span<const Jet> x) { return 0.5 * x[3] * x[3] - x[1] * x[1]; });
  const PontryaginPoint w{0.0, {1.0, 0.0}, {0.5, 0.2}, {0.5, 0.0}, 0.0};
  const auto r = sr::run_constraint_algorithm(L, w);
  REQUIRE(r.ladder.status == sr::LadderStatus::kClosed);
  CHECK(r.ladder.kernel_dim == 1);
  CHECK(r.Z.C[1] == 0.0);
  sr::AssembleOptions opts;
  opts.gauge = [](const PontryaginPoint&, const std::vector<Eigen::VectorXd>& basis) {
    return std::vector<double>(basis.size(), 3.0);
  };
  const auto Z = sr::assemble_Z(L, w, r.ladder, opts);
  CHECK(Z.C[0] == doctest::Approx(-2.0));
  CHECK(Z.C[1] == doctest::Approx(3.0));
}
