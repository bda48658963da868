#include "cocontact/systems/systems.hpp"

#include <cmath>
#include <limits>

#include "cocontact/dsl/parser.hpp"

namespace cocontact::systems {

using jets::Jet;
using sr::PontryaginPoint;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double param_or(const dsl::ParamTable& table, const std::string& name, double fallback) {
  return table.find(name).value_or(fallback);
}

}  // namespace

mechanics::LagrangianSystem SystemPreset::dsl_system() const {
  dsl::ParseOptions options;
  options.n = system.n();
  options.params = &params;
  return mechanics::LagrangianSystem::from_expr(dsl::parse(lagrangian_text, options), params, label + " (text)");
}

// ---------------------------------------------------------------------------

SystemPreset duffing(double alpha, double beta, double gamma, double delta, double omega) {
  auto L = [=](std::span<const Jet> x) {
    const Jet& t = x[0];
    const Jet& q = x[1];
    const Jet& v = x[2];
    const Jet& s = x[3];
    return 0.5 * v * v - 0.5 * alpha * q * q - 0.25 * beta * pow(q, 4) - delta * s + gamma * q * cos(omega * t);
  };
  SystemPreset p{
      .label = "duffing",
      .system = mechanics::LagrangianSystem(
          1, L, dsl::ParamTable{{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}, {"delta", delta}, {"omega", omega}},
          "duffing"),
      .lagrangian_text = "0.5*v1^2 - 0.5*alpha*q1^2 - 0.25*beta*q1^4 - delta*s + gamma*q1*cos(omega*t)",
      .params = {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}, {"delta", delta}, {"omega", omega}},
      .expected_C = {},
      .expected_D = {},
      .expected_ladder = {{"p1 - v1"}},
      .initial = {0.0, {1.0}, {0.0}, {0.0}, 0.0},
      .t_end = 10.0,
      .sample = {},
      .notes = "damped forced oscillator; regular, the ladder closes after one generation",
  };
  p.expected_C = [=](const PontryaginPoint& w) {
    const double x = w.q[0];
    return std::vector<double>{-alpha * x - beta * x * x * x - delta * w.v[0] + gamma * std::cos(omega * w.t)};
  };
  p.expected_D = [=](const PontryaginPoint& w) {
    const double x = w.q[0];
    return std::vector<double>{-alpha * x - beta * x * x * x - delta * w.p[0] + gamma * std::cos(omega * w.t)};
  };
  p.sample = [](std::mt19937_64& rng) {
    PontryaginPoint w;
    w.t = uniform(rng, 0.0, 10.0);
    w.q = {uniform(rng, -2.0, 2.0)};
    w.v = {uniform(rng, -2.0, 2.0)};
    w.p = w.v;
    w.s = uniform(rng, -1.0, 1.0);
    return w;
  };
  return p;
}

// ---------------------------------------------------------------------------

SystemPreset variable_mass_drag(const std::string& mass, const dsl::ParamTable& mass_params, double gamma, double F,
                                double g) {
  if (gamma == 0.0) throw std::invalid_argument("the drag coefficient must be nonzero");
  dsl::ParamTable params = mass_params;
  params.set("gamma", gamma);
  params.set("F", F);
  params.set("g", g);
  dsl::ParseOptions options;
  options.n = 1;
  options.params = &params;
  const auto m_expr = dsl::parse(mass, options);
  auto m_field = m_expr.field(params);

  auto mass_of = [m_field](const Jet& t) {
    // The mass expression lives on the (t, q1, v1, s) space but may only use t.
    const Jet zero(0.0);
    const Jet coords[4] = {t, zero, zero, zero};
    Jet m = m_field(coords);
    if (!(m.value() > 0.0)) throw jets::DomainError("mass must be positive, got " + std::to_string(m.value()));
    return m;
  };
  auto L = [=](std::span<const Jet> x) {
    const Jet& y = x[1];
    const Jet& v = x[2];
    const Jet& s = x[3];
    const Jet m = mass_of(x[0]);
    return 0.5 * m * v * v + m * g / (2.0 * gamma) * (exp(-2.0 * gamma * y) - 1.0) - 2.0 * gamma * v * s +
           F / (2.0 * gamma);
  };
  const std::string M = "(" + m_expr.to_string() + ")";
  SystemPreset p{
      .label = "variable_mass_drag",
      .system = mechanics::LagrangianSystem(1, L, params, "variable_mass_drag"),
      .lagrangian_text = "0.5*" + M + "*v1^2 + " + M + "*g/(2*gamma)*(exp(-2*gamma*q1) - 1) - 2*gamma*v1*s + F/(2*gamma)",
      .params = params,
      .expected_C = {},
      .expected_D = {},
      .expected_ladder = {{"p1 - m(t)*v1 + 2*gamma*s"}},
      .initial = {0.0, {0.0}, {0.0}, {0.0}, 0.0},
      .t_end = 5.0,
      .sample = {},
      .notes = "time-dependent mass " + m_expr.to_string() + " with engine force F and quadratic drag",
  };
  auto mass_and_rate = [mass_of](double t) {
    const Jet m = mass_of(Jet::variable(t, 0, 1, 1));
    return std::pair<double, double>{m.value(), m.d(0)};
  };
  p.expected_C = [=](const PontryaginPoint& w) {
    const auto [m, mdot] = mass_and_rate(w.t);
    const double v = w.v[0];
    return std::vector<double>{F / m - gamma * v * v - mdot / m * v - g};
  };
  p.expected_D = [=](const PontryaginPoint& w) {
    const auto [m, mdot] = mass_and_rate(w.t);
    return std::vector<double>{-m * g * std::exp(-2.0 * gamma * w.q[0]) - 2.0 * gamma * w.v[0] * w.p[0]};
  };
  p.sample = [=](std::mt19937_64& rng) {
    PontryaginPoint w;
    w.t = uniform(rng, 0.0, 5.0);
    w.q = {uniform(rng, 0.0, 2.0)};
    w.v = {uniform(rng, -3.0, 3.0)};
    w.s = uniform(rng, -1.0, 1.0);
    w.p = {mass_and_rate(w.t).first * w.v[0] - 2.0 * gamma * w.s};
    return w;
  };
  return p;
}

SystemPreset variable_mass_drag(double gamma, double F, double g) {
  return variable_mass_drag("m0*exp(-r*t)", dsl::ParamTable{{"m0", 1.0}, {"r", 0.1}}, gamma, F, g);
}

// ---------------------------------------------------------------------------

DualField coulomb_potential(double Q, double coulomb) {
  const double strength = coulomb * Q;
  DualField f;
  f.native = [strength](std::span<const Jet> x) {
    const Jet r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    if (r2.value() < kMinRadius * kMinRadius)
      throw jets::DomainError("potential evaluated within " + std::to_string(kMinRadius) + " of the point charge");
    return strength * pow(r2, -0.5);
  };
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", strength);
  f.text = std::string(buf) + "/sqrt(q1^2 + q2^2 + q3^2)";
  return f;
}

DualField rising_plane() {
  DualField f;
  f.native = [](std::span<const Jet> x) { return x[3] - x[0]; };
  f.text = "q3 - t";
  return f;
}

SystemPreset charged_particle(const DualField& phi, const DualField& f, double m, double k, double gamma) {
  if (!(m > 0.0)) throw std::invalid_argument("mass must be positive");
  auto L = [=](std::span<const Jet> x) {
    const Jet& t = x[0];
    const Jet pos[3] = {x[1], x[2], x[3]};
    const Jet tq[4] = {t, x[1], x[2], x[3]};
    const Jet& lambda = x[4];
    const Jet& s = x[9];
    const Jet kinetic = 0.5 * m * (x[5] * x[5] + x[6] * x[6] + x[7] * x[7]);
    return kinetic - k * phi.native(pos) + lambda * f.native(tq) - gamma * s;
  };
  dsl::ParamTable params{{"m", m}, {"k", k}, {"gamma", gamma}};
  const bool plane = f.text == rising_plane().text;
  SystemPreset p{
      .label = "charged_particle",
      .system = mechanics::LagrangianSystem(4, L, params, "charged_particle"),
      .lagrangian_text = "0.5*m*(v1^2 + v2^2 + v3^2) - k*(" + phi.text + ") + q4*(" + f.text + ") - gamma*s",
      .params = params,
      .expected_C = {},
      .expected_D = {},
      .expected_ladder = {},
      .initial = {0.0, {2.0, 0.0, 0.0, 0.0}, {0.0, 10.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}, 0.0},
      .t_end = 10.0,
      .sample = {},
      .notes = "charged particle on coordinates (x, y, z, lambda); lambda is the multiplier of f = " + f.text,
  };
  if (plane) {
    p.expected_ladder = {{"p1 - m*v1", "p2 - m*v2", "p3 - m*v3", "p4"},
                         {"q3 - t"},
                         {"v3 - 1"},
                         {"q4 - k*phi_z - gamma*m"},
                         {"v4 - k*(phi_xz*v1 + phi_yz*v2 + phi_zz)"}};
  }

  auto phi_jet = [phi](double x, double y, double z) {
    const double at[3] = {x, y, z};
    return jets::eval_jet(phi.native, at, 3);
  };
  auto f_jet = [f](double t, double x, double y, double z) {
    const double at[4] = {t, x, y, z};
    return jets::eval_jet(f.native, at, 1);
  };

  p.expected_D = [=](const PontryaginPoint& w) {
    const Jet P = phi_jet(w.q[0], w.q[1], w.q[2]);
    const Jet F = f_jet(w.t, w.q[0], w.q[1], w.q[2]);
    const double lambda = w.q[3];
    std::vector<double> D(4);
    for (int i = 0; i < 3; ++i)
      D[static_cast<std::size_t>(i)] = lambda * F.d(1 + i) - k * P.d(i) - gamma * w.p[static_cast<std::size_t>(i)];
    D[3] = F.value() - gamma * w.p[3];
    return D;
  };
  p.expected_C = [=](const PontryaginPoint& w) {
    const Jet P = phi_jet(w.q[0], w.q[1], w.q[2]);
    const Jet F = f_jet(w.t, w.q[0], w.q[1], w.q[2]);
    const double lambda = w.q[3];
    std::vector<double> C(4);
    for (int i = 0; i < 3; ++i)
      C[static_cast<std::size_t>(i)] =
          (lambda * F.d(1 + i) - k * P.d(i) - gamma * w.p[static_cast<std::size_t>(i)]) / m;
    if (!plane) {
      C[3] = std::numeric_limits<double>::quiet_NaN();
      return C;
    }
    const double vx = w.v[0];
    const double vy = w.v[1];
    const double ax = -(k / m) * P.d(0) - gamma * vx;
    const double ay = -(k / m) * P.d(1) - gamma * vy;
    C[3] = k * (vx * vx * P.d(0, 0, 2) + vy * vy * P.d(1, 1, 2) + 2 * vx * vy * P.d(0, 1, 2) +
                2 * vx * P.d(0, 2, 2) + 2 * vy * P.d(1, 2, 2) + P.d(2, 2, 2) + P.d(0, 2) * ax + P.d(1, 2) * ay);
    return C;
  };
  if (plane) {
    p.sample = [=](std::mt19937_64& rng) {
      PontryaginPoint w;
      w.t = uniform(rng, 0.0, 2.0);
      const double radius = uniform(rng, 0.5, 3.0);
      const double angle = uniform(rng, 0.0, 2.0 * M_PI);
      const double x = radius * std::cos(angle);
      const double y = radius * std::sin(angle);
      const double z = w.t;
      const Jet P = phi_jet(x, y, z);
      const double vx = uniform(rng, -10.0, 10.0);
      const double vy = uniform(rng, -10.0, 10.0);
      w.q = {x, y, z, k * P.d(2) + gamma * m};
      w.v = {vx, vy, 1.0, k * (P.d(0, 2) * vx + P.d(1, 2) * vy + P.d(2, 2))};
      w.p = {m * vx, m * vy, m, 0.0};
      w.s = uniform(rng, -1.0, 1.0);
      return w;
    };
  }
  return p;
}

SystemPreset charged_particle() { return charged_particle(coulomb_potential(-2e-4), rising_plane(), 1.0, 2e-4, 0.3); }

// ---------------------------------------------------------------------------

std::vector<std::string> preset_names() { return {"duffing", "variable_mass_drag", "charged_particle"}; }

namespace {

void check_overrides(const std::string& name, const dsl::ParamTable& o, std::initializer_list<const char*> known) {
  for (const auto& [key, value] : o.entries()) {
    bool found = false;
    for (const char* k : known) found = found || key == k;
    if (!found) throw std::invalid_argument("preset '" + name + "' has no parameter '" + key + "'");
  }
}

}  // namespace

SystemPreset preset(const std::string& name, const dsl::ParamTable& o) {
  if (name == "duffing") check_overrides(name, o, {"alpha", "beta", "gamma", "delta", "omega"});
  if (name == "variable_mass_drag") check_overrides(name, o, {"m0", "r", "gamma", "F", "g"});
  if (name == "charged_particle") check_overrides(name, o, {"Q", "m", "k", "gamma"});
  if (name == "duffing")
    return duffing(param_or(o, "alpha", 1.0), param_or(o, "beta", 5.0), param_or(o, "gamma", 8.0),
                   param_or(o, "delta", 0.02), param_or(o, "omega", 0.5));
  if (name == "variable_mass_drag")
    return variable_mass_drag("m0*exp(-r*t)",
                              dsl::ParamTable{{"m0", param_or(o, "m0", 1.0)}, {"r", param_or(o, "r", 0.1)}},
                              param_or(o, "gamma", 0.1), param_or(o, "F", 15.0), param_or(o, "g", 9.81));
  if (name == "charged_particle")
    return charged_particle(coulomb_potential(param_or(o, "Q", -2e-4)), rising_plane(), param_or(o, "m", 1.0),
                            param_or(o, "k", 2e-4), param_or(o, "gamma", 0.3));
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace cocontact::systems
