#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cocontact/mechanics/mechanics.hpp"
#include "cocontact/skinner_rusk/skinner_rusk.hpp"

namespace cocontact::dynamics {

class StepFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class LadderLost : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NonInvertibleLegendre : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ProjectionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { kRK4, kRK45 };
const char* to_string(Method m);

struct IntegratorConfig {
  Method method = Method::kRK4;
  /// Fixed step, or the initial step of the adaptive method.
  double step = 1e-3;
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double t_end = 10.0;
  /// Project back onto the ladder after every step instead of only monitoring drift.
  bool reproject = false;
  double min_step = 1e-12;
};

/// Right-hand side on a space whose coordinate 0 is time.
using VectorField = std::function<std::vector<double>(std::span<const double>)>;
/// Runs after every accepted step and may adjust the new state.
using StepHook = std::function<void(std::vector<double>&)>;

/// States at the accepted steps, starting with x0. The time coordinate is
/// advanced exactly: t0 + k*step for fixed steps, with the final step
/// shortened to end on t_end.
std::vector<std::vector<double>> integrate(const VectorField& field, std::vector<double> x0,
                                           const IntegratorConfig& cfg, const StepHook& hook = {});

// ---------------------------------------------------------------------------
// Projections of Z and the recovered fields

/// (A, B, C, E) on (t, q, v, s).
std::vector<double> project_to_lagrangian(const sr::ZCoefficients& Z, const sr::PontryaginPoint& w);
/// (A, B, D, E) on (t, q, p, s).
std::vector<double> project_to_hamiltonian(const sr::ZCoefficients& Z, const sr::PontryaginPoint& w);

/// Velocity with dL/dv(t, q, v, s) = p. Needs a nondegenerate fibre Hessian.
std::vector<double> inverse_legendre(const mechanics::LagrangianSystem& L, const mechanics::HamiltonianPoint& y,
                                     std::span<const double> guess = {});

/// X on (t, q, v, s): lifts x to (x, FL(x)) and assembles Z there.
VectorField lagrangian_field(const mechanics::LagrangianSystem& L, sr::StructurePtr ladder,
                             const sr::AssembleOptions& opts = {});
/// Y on (t, q, p, s): recovers v by inverting the Legendre map.
VectorField hamiltonian_field(const mechanics::LagrangianSystem& L, sr::StructurePtr ladder,
                              const sr::AssembleOptions& opts = {});

// ---------------------------------------------------------------------------
// Ladder projection

struct ProjectionResult {
  sr::PontryaginPoint point;
  sr::ConstraintLadder ladder;
  int newton_iterations = 0;
};

/// Moves w onto the constraint submanifold of `structure` by damped Newton
/// steps. Momenta and multiplier-like coordinates (zero rows of the fibre
/// Hessian) move first, velocities only when those cannot absorb the
/// residual, positions last; t and s never change.
sr::PontryaginPoint newton_project(const mechanics::LagrangianSystem& L, const sr::LadderStructure& structure,
                                   const sr::PontryaginPoint& w, const sr::AlgorithmOptions& opts,
                                   int* iterations = nullptr);

/// Runs the constraint algorithm from w, projecting onto each new
/// generation as it appears, until the ladder closes.
ProjectionResult project_to_ladder(const mechanics::LagrangianSystem& L, const sr::PontryaginPoint& w,
                                   const sr::AlgorithmOptions& opts = {});

// ---------------------------------------------------------------------------
// Trajectories on W

struct ResidualSample {
  /// max |q' - v|
  double holonomy = 0.0;
  /// |s' - L|
  double sdot = 0.0;
  /// max-norm of the Herglotz-Euler-Lagrange residual
  double herglotz = 0.0;
  /// max |xi| over the ladder
  double constraint = 0.0;
};

struct Trajectory {
  int n = 0;
  sr::StructurePtr ladder;
  std::vector<sr::PontryaginPoint> points;
  std::vector<sr::ZCoefficients> Z;
  std::vector<ResidualSample> residuals;
  int newton_iterations = 0;

  std::vector<double> times() const;
};

struct DynamicsOptions {
  sr::AlgorithmOptions algorithm;
  sr::Gauge gauge;
  /// Project the initial condition onto the ladder before integrating.
  bool project_initial = true;
};

/// Integral curve of Z from w0.
Trajectory integrate_unified(const mechanics::LagrangianSystem& L, const sr::PontryaginPoint& w0,
                             const IntegratorConfig& cfg, const DynamicsOptions& opts = {});

/// Fills traj.residuals. Rates along the curve come from 9-point finite
/// difference stencils over the samples, so the channels measure how far the
/// discrete curve is from an integral curve.
void compute_residuals(const mechanics::LagrangianSystem& L, Trajectory& traj);

/// d/dt of `values` (one row per sample) at every sample.
std::vector<std::vector<double>> sample_derivative(std::span<const double> times,
                                                   const std::vector<std::vector<double>>& values);

struct ChannelSummary {
  double max = 0.0;
  double rms = 0.0;
};

struct ResidualReport {
  ChannelSummary holonomy;
  ChannelSummary sdot;
  ChannelSummary herglotz;
  ChannelSummary constraint;
};

ResidualReport residual_report(const mechanics::LagrangianSystem& L, const Trajectory& traj);

// ---------------------------------------------------------------------------
// Equivalence of the unified, Lagrangian and Hamiltonian descriptions

struct EquivalenceReport {
  /// max over samples of |rho1(Z-curve) - X-curve|
  double z_vs_x = 0.0;
  /// max over samples of |rho2(Z-curve) - Y-curve|
  double z_vs_y = 0.0;
  /// max over samples of |FL(X-curve) - Y-curve|
  double fl_x_vs_y = 0.0;
  /// False for singular systems, where the Hamiltonian legs are skipped.
  bool hamiltonian_applicable = true;
  /// Number of sample times compared.
  std::size_t compared = 0;
  Trajectory unified;
  std::vector<std::vector<double>> lagrangian;
  std::vector<std::vector<double>> hamiltonian;
};

EquivalenceReport cross_check_equivalence(const mechanics::LagrangianSystem& L, const mechanics::LagrangianPoint& x0,
                                          const IntegratorConfig& cfg, const DynamicsOptions& opts = {});

// ---------------------------------------------------------------------------
// Export

/// Header `t,q1..qn,v1..vn,p1..pn,s,res_holonomy,res_sdot,res_herglotz,res_constraint`,
/// numbers with 17 significant digits.
void write_csv(std::ostream& out, const Trajectory& traj);
/// Plain state curves on (t, q, v, s) or (t, q, p, s).
void write_state_csv(std::ostream& out, const std::vector<std::vector<double>>& states, int n, bool momenta);
void write_json(std::ostream& out, const Trajectory& traj, const ResidualReport& report);

std::string format_double(double v);

}  // namespace cocontact::dynamics
