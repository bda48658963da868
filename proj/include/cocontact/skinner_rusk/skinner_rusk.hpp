#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cocontact/jets/jet.hpp"
#include "cocontact/mechanics/mechanics.hpp"

namespace cocontact::sr {

/// (t, q, v, p, s) on W. Flattened layout: t, q1..qn, v1..vn, p1..pn, s,
/// i.e. 3n+2 coordinates (jets::SpaceKind::kPontryagin).
struct PontryaginPoint {
  double t = 0.0;
  std::vector<double> q;
  std::vector<double> v;
  std::vector<double> p;
  double s = 0.0;

  int n() const { return static_cast<int>(q.size()); }
  std::vector<double> coords() const;
  static PontryaginPoint from_coords(std::span<const double> w, int n);
  mechanics::LagrangianPoint lagrangian() const { return {t, q, v, s}; }
  mechanics::HamiltonianPoint hamiltonian() const { return {t, q, p, s}; }
};

/// Z = A d/dt + B d/dq + C d/dv + D d/dp + E d/ds at a point.
struct ZCoefficients {
  double A = 1.0;
  std::vector<double> B;
  std::vector<double> C;
  std::vector<double> D;
  double E = 0.0;
  /// Directions in C-space the equations leave free (orthonormal).
  std::vector<Eigen::VectorXd> undetermined;

  /// (A, B, C, D, E) in the coordinate order of PontryaginPoint.
  std::vector<double> coords() const;
};

enum class LadderStatus { kClosed, kIncompatible, kMaxIterations };
const char* to_string(LadderStatus status);

/// How to rebuild one constraint at an arbitrary point of W.
///
/// Generation-1 constraints are p_j - dL/dv_j. A later constraint is the
/// tangency condition of its parent row, M_parent . C* + r_parent, where C* is
/// the minimum-norm solution of the tangency equations of the pivot rows in
/// `snapshot` and, for a row xi, M = d xi / dv and
/// r = d_t xi + v . d_q xi + D . d_p xi + E d_s xi.
struct ConstraintSpec {
  int generation = 1;
  /// Derivative depth of the constraint relative to L.
  int depth = 1;
  int primary = -1;
  int parent = -1;
  std::vector<int> snapshot;
  std::string label;
  std::string origin;
};

/// Role a constraint's tangency row plays in the linear system for C.
enum class RowRole { kUndecided, kPivot, kDependent };

/// The discovered ladder: constraint recipes plus pivot choices. Immutable
/// once returned; evaluating it at another point reuses the same recipes.
struct LadderStructure {
  int n = 0;
  std::vector<ConstraintSpec> constraints;
  std::vector<RowRole> roles;
  std::vector<int> pivots;

  int generations() const;
  int max_depth() const;
  /// Primary constraints only.
  static LadderStructure primaries(int n);
};

using StructurePtr = std::shared_ptr<const LadderStructure>;

struct AlgorithmOptions {
  int max_generations = 8;
  /// Relative singular-value threshold for rank decisions.
  double rank_tol = mechanics::kDefaultRankTolerance;
  /// |xi| above this means the point is off the constraint submanifold.
  double feasibility_tol = 1e-8;
  /// Smallest/largest singular value of the pivot rows below this is a breakdown.
  double condition_cap = 1e-12;
};

class InfeasiblePoint : public std::runtime_error {
 public:
  InfeasiblePoint(const std::string& message, StructurePtr structure, int constraint, double value)
      : std::runtime_error(message), structure_(std::move(structure)), constraint_(constraint), value_(value) {}
  /// Ladder as far as it was built; the offending constraint is included.
  const StructurePtr& structure() const { return structure_; }
  int constraint() const { return constraint_; }
  double value() const { return value_; }

 private:
  StructurePtr structure_;
  int constraint_;
  double value_;
};

class NumericalBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LadderNotClosed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A constraint as a function on W.
struct ConstraintFn {
  int generation = 1;
  std::string label;
  std::function<double(const PontryaginPoint&)> evaluator;
};

struct ConstraintLadder {
  std::vector<std::vector<ConstraintFn>> generations;
  LadderStatus status = LadderStatus::kClosed;
  StructurePtr structure;
  /// Value of every constraint at the probe point, in structure order.
  std::vector<double> values;
  int rank = 0;
  int kernel_dim = 0;
  /// Label of the condition that cannot hold, when Incompatible.
  std::string incompatible;
  double incompatible_value = 0.0;
};

/// Jets of every quantity the algorithm needs at one point. Constraint jets
/// are built on demand; a constraint of depth d is available when the sweep
/// order is at least d (its gradient when order >= d + 1).
class Sweep {
 public:
  Sweep(const mechanics::LagrangianSystem& L, const LadderStructure& structure, std::span<const double> w,
        int order);

  int order() const { return order_; }
  const jets::Jet& lagrangian() const { return L_; }
  const jets::Jet& D(int i) const { return D_[static_cast<std::size_t>(i)]; }
  const jets::Jet& E() const { return L_; }

  const jets::Jet& xi(int id);
  /// d xi / dv_i
  const jets::Jet& M(int id, int i);
  const jets::Jet& r(int id);
  /// Minimum-norm solution of M_P C = -r_P over the rows P.
  const std::vector<jets::Jet>& solve(const std::vector<int>& rows);
  /// Tangency of row `id` given C.
  jets::Jet tangency(int id, const std::vector<jets::Jet>& C);

  Eigen::MatrixXd M_values(const std::vector<int>& rows);
  Eigen::VectorXd r_values(const std::vector<int>& rows);

 private:
  void ensure_rows(int id);

  const mechanics::LagrangianSystem& system_;
  const LadderStructure& structure_;
  int n_;
  int order_;
  std::vector<jets::Jet> w_;
  jets::Jet L_;
  std::vector<jets::Jet> Lv_;
  std::vector<jets::Jet> D_;
  std::vector<std::unique_ptr<jets::Jet>> xi_;
  std::vector<std::vector<jets::Jet>> M_;
  std::vector<std::unique_ptr<jets::Jet>> r_;
  std::map<std::vector<int>, std::vector<jets::Jet>> solutions_;
};

/// p . v
double coupling(const PontryaginPoint& w);
/// p . v - L
double hamiltonian(const mechanics::LagrangianSystem& L, const PontryaginPoint& w);
/// p_j - dL/dv_j
std::vector<double> primary_constraints(const mechanics::LagrangianSystem& L, const PontryaginPoint& w);

struct NewConstraint {
  ConstraintSpec spec;
  double value = 0.0;
};

struct TangencyResult {
  std::vector<double> C;
  std::vector<NewConstraint> new_constraints;
  std::vector<Eigen::VectorXd> undetermined;
  /// Ladder with this generation's rows classified and new constraints appended.
  StructurePtr structure;
  bool incompatible = false;
  std::string incompatible_label;
  double incompatible_value = 0.0;
};

/// One pass of the algorithm: classifies the rows not yet classified, solves
/// for the minimum-norm C and derives the next generation from the rows that
/// are linear combinations of the pivots.
TangencyResult tangency_solve(const mechanics::LagrangianSystem& L, const PontryaginPoint& w,
                              const LadderStructure& prior, const AlgorithmOptions& opts = {});

struct AlgorithmResult {
  ConstraintLadder ladder;
  ZCoefficients Z;
};

AlgorithmResult run_constraint_algorithm(const mechanics::LagrangianSystem& L, const PontryaginPoint& w,
                                         const AlgorithmOptions& opts = {});

/// Values of free C-directions: C = C_min + sum_k g_k u_k.
using Gauge = std::function<std::vector<double>(const PontryaginPoint&, const std::vector<Eigen::VectorXd>&)>;

struct AssembleOptions {
  AlgorithmOptions algorithm;
  Gauge gauge;
  /// Kernel basis at a neighbouring point; signs are aligned to it.
  const std::vector<Eigen::VectorXd>* align_with = nullptr;
};

/// Z at `w` for a closed ladder.
ZCoefficients assemble_Z(const mechanics::LagrangianSystem& L, const PontryaginPoint& w,
                         const ConstraintLadder& ladder, const AssembleOptions& opts = {});
ZCoefficients assemble_Z(const mechanics::LagrangianSystem& L, const PontryaginPoint& w,
                         const LadderStructure& structure, const AssembleOptions& opts = {});

/// Values and W-gradients of every constraint of `structure` at w.
struct ConstraintJacobian {
  Eigen::VectorXd values;
  Eigen::MatrixXd gradients;
};
ConstraintJacobian constraint_jacobian(const mechanics::LagrangianSystem& L, const LadderStructure& structure,
                                       std::span<const double> w);
std::vector<double> constraint_values(const mechanics::LagrangianSystem& L, const LadderStructure& structure,
                                      std::span<const double> w);

/// grad xi(w) . Z(w) for a field on W.
double lie_derivative(const jets::ScalarField& xi, const ZCoefficients& Z, const PontryaginPoint& w);

}  // namespace cocontact::sr
