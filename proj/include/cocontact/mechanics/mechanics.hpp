#pragma once

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cocontact/dsl/expr.hpp"
#include "cocontact/dsl/params.hpp"
#include "cocontact/jets/jet.hpp"

namespace cocontact::mechanics {

/// (t, q, v, s). Flattened layout matches jets::SpaceKind::kLagrangian.
struct LagrangianPoint {
  double t = 0.0;
  std::vector<double> q;
  std::vector<double> v;
  double s = 0.0;

  int n() const { return static_cast<int>(q.size()); }
  std::vector<double> coords() const;
  static LagrangianPoint from_coords(std::span<const double> x, int n);
};

/// (t, q, p, s). Flattened layout matches jets::SpaceKind::kHamiltonian.
struct HamiltonianPoint {
  double t = 0.0;
  std::vector<double> q;
  std::vector<double> p;
  double s = 0.0;

  int n() const { return static_cast<int>(q.size()); }
  std::vector<double> coords() const;
  static HamiltonianPoint from_coords(std::span<const double> x, int n);
};

/// A Lagrangian L(t, q, v, s) with n degrees of freedom.
class LagrangianSystem {
 public:
  /// `lagrangian` receives 2n+2 jets in (t, q, v, s) order.
  LagrangianSystem(int n, jets::ScalarField lagrangian, dsl::ParamTable params = {}, std::string label = {});
  /// Builds from a parsed expression; every referenced parameter must be bound.
  static LagrangianSystem from_expr(const dsl::Expr& expr, dsl::ParamTable params, std::string label = {});

  int n() const { return n_; }
  const std::string& label() const { return label_; }
  const dsl::ParamTable& params() const { return params_; }
  const jets::ScalarField& field() const { return lagrangian_; }

  jets::Jet operator()(std::span<const jets::Jet> coords) const { return lagrangian_(coords); }
  jets::Jet evaluate(const LagrangianPoint& x, int order) const;

 private:
  int n_;
  jets::ScalarField lagrangian_;
  dsl::ParamTable params_;
  std::string label_;
};

enum class Verdict { kRegular, kSingular };

struct RegularityReport {
  Verdict verdict = Verdict::kRegular;
  int rank = 0;
  /// Orthonormal basis of ker W, one vector per entry.
  std::vector<Eigen::VectorXd> nullspace;
  Eigen::VectorXd singular_values;
  double tolerance = 0.0;
};

constexpr double kDefaultRankTolerance = 1e-9;

/// E_L = v . dL/dv - L.
double lagrangian_energy(const LagrangianSystem& L, const LagrangianPoint& x);

/// (t, q, dL/dv, s).
HamiltonianPoint legendre_map(const LagrangianSystem& L, const LagrangianPoint& x);

/// W_ij = d2L / dv_i dv_j. Exactly symmetric.
Eigen::MatrixXd hessian_vv(const LagrangianSystem& L, const LagrangianPoint& x);

/// Rank of W by singular values above tol * largest singular value.
RegularityReport regularity(const LagrangianSystem& L, const LagrangianPoint& x,
                            double tol = kDefaultRankTolerance);
RegularityReport regularity(const Eigen::MatrixXd& W, double tol = kDefaultRankTolerance);

/// Tangent coefficients on (t, q, p, s).
struct HamiltonianTangent {
  double t_dot = 1.0;
  std::vector<double> q_dot;
  std::vector<double> p_dot;
  double s_dot = 0.0;

  std::vector<double> coords() const;
};

/// Cocontact Hamiltonian vector field of H(t, q, p, s) with Reeb fields d/dt, d/ds:
/// q' = H_p, p' = -(H_q + p H_s), s' = p H_p - H.
HamiltonianTangent cocontact_hamiltonian_field(const jets::ScalarField& H, const HamiltonianPoint& y);

struct HerglotzResidual {
  std::vector<double> components;
  /// s' - L
  double scalar = 0.0;

  double max_abs() const;
};

/// Residual of the Herglotz-Euler-Lagrange equations along a curve sample with
/// acceleration `a` and action rate `s_dot`.
HerglotzResidual herglotz_residual(const LagrangianSystem& L, const LagrangianPoint& x, std::span<const double> a,
                                   double s_dot);

}  // namespace cocontact::mechanics
