#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cocontact/dsl/expr.hpp"
#include "cocontact/dsl/params.hpp"
#include "cocontact/mechanics/mechanics.hpp"
#include "cocontact/skinner_rusk/skinner_rusk.hpp"

namespace cocontact::systems {

/// Coulomb constant in SI units, N m^2 / C^2.
constexpr double kCoulomb = 8.9875517923e9;
/// Potentials are not evaluated closer than this to a point charge.
constexpr double kMinRadius = 1e-6;

using PointFn = std::function<std::vector<double>(const sr::PontryaginPoint&)>;

struct SystemPreset {
  std::string label;
  /// Lagrangian built directly from jet arithmetic.
  mechanics::LagrangianSystem system;
  /// The same Lagrangian in the expression language, over (t, q, v, s).
  std::string lagrangian_text;
  dsl::ParamTable params;
  /// Closed-form C and D on the final constraint submanifold.
  PointFn expected_C;
  PointFn expected_D;
  /// One entry per generation: the closed form each generation reduces to.
  std::vector<std::vector<std::string>> expected_ladder;
  /// Initial condition; p and ladder-dependent coordinates are filled by
  /// projection before integrating.
  sr::PontryaginPoint initial;
  double t_end = 10.0;
  /// Random point of the final constraint submanifold.
  std::function<sr::PontryaginPoint(std::mt19937_64&)> sample;
  std::string notes;

  /// Lagrangian parsed from `lagrangian_text`.
  mechanics::LagrangianSystem dsl_system() const;
};

/// L = v^2/2 - alpha x^2/2 - beta x^4/4 - delta s + gamma x cos(omega t).
SystemPreset duffing(double alpha = 1.0, double beta = 5.0, double gamma = 8.0, double delta = 0.02,
                     double omega = 0.5);

/// L = m(t) v^2/2 + m(t) g (exp(-2 gamma y) - 1)/(2 gamma) - 2 gamma v s + F/(2 gamma).
/// `mass` is an expression in t (parameters from `mass_params`).
SystemPreset variable_mass_drag(const std::string& mass, const dsl::ParamTable& mass_params, double gamma, double F,
                                double g);
/// Default mass law m0 exp(-r t) with m0 = 1, r = 0.1.
SystemPreset variable_mass_drag(double gamma = 0.1, double F = 15.0, double g = 9.81);

/// A scalar function supplied both as jet code and as expression text.
struct DualField {
  jets::ScalarField native;
  std::string text;
};

/// phi(q1, q2, q3) of a point charge Q at the origin (SI units).
DualField coulomb_potential(double Q, double coulomb = kCoulomb);
/// f(t, q) = z - t.
DualField rising_plane();

/// L = m |v|^2/2 - k phi(q) + lambda f(t, q) - gamma s on coordinates
/// (x, y, z, lambda). `phi` receives (x, y, z) jets and `f` receives
/// (t, x, y, z) jets; their texts use q1, q2, q3 and t.
SystemPreset charged_particle(const DualField& phi, const DualField& f, double m, double k, double gamma);
/// Fixed charge -2e-4 at the origin, k = 2e-4, m = 1, gamma = 0.3, f = z - t,
/// q(0) = (2, 0, 0), v(0) = (0, 10, 0).
SystemPreset charged_particle();

/// Preset by name: "duffing", "variable_mass_drag", "charged_particle".
/// `overrides` replaces default parameters of the same name.
SystemPreset preset(const std::string& name, const dsl::ParamTable& overrides = {});
std::vector<std::string> preset_names();

}  // namespace cocontact::systems
