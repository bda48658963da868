#include "cocontact/mechanics/mechanics.hpp"

#include <algorithm>
#include <cmath>

namespace cocontact::mechanics {

using jets::Jet;

namespace {

void check_point(const LagrangianSystem& L, const LagrangianPoint& x) {
  if (x.n() != L.n() || static_cast<int>(x.v.size()) != L.n())
    throw std::invalid_argument("point dimension does not match the system (n = " + std::to_string(L.n()) + ")");
}

int v_index(int n, int i) { return 1 + n + i; }
int q_index(int i) { return 1 + i; }
int s_index(int n) { return 2 * n + 1; }

}  // namespace

std::vector<double> LagrangianPoint::coords() const {
  std::vector<double> out;
  out.reserve(2 * q.size() + 2);
  out.push_back(t);
  out.insert(out.end(), q.begin(), q.end());
  out.insert(out.end(), v.begin(), v.end());
  out.push_back(s);
  return out;
}

LagrangianPoint LagrangianPoint::from_coords(std::span<const double> x, int n) {
  if (static_cast<int>(x.size()) != 2 * n + 2) throw std::invalid_argument("expected 2n+2 coordinates");
  LagrangianPoint p;
  p.t = x[0];
  p.q.assign(x.begin() + 1, x.begin() + 1 + n);
  p.v.assign(x.begin() + 1 + n, x.begin() + 1 + 2 * n);
  p.s = x[static_cast<std::size_t>(2 * n + 1)];
  return p;
}

std::vector<double> HamiltonianPoint::coords() const {
  std::vector<double> out;
  out.reserve(2 * q.size() + 2);
  out.push_back(t);
  out.insert(out.end(), q.begin(), q.end());
  out.insert(out.end(), p.begin(), p.end());
  out.push_back(s);
  return out;
}

HamiltonianPoint HamiltonianPoint::from_coords(std::span<const double> x, int n) {
  if (static_cast<int>(x.size()) != 2 * n + 2) throw std::invalid_argument("expected 2n+2 coordinates");
  HamiltonianPoint y;
  y.t = x[0];
  y.q.assign(x.begin() + 1, x.begin() + 1 + n);
  y.p.assign(x.begin() + 1 + n, x.begin() + 1 + 2 * n);
  y.s = x[static_cast<std::size_t>(2 * n + 1)];
  return y;
}

std::vector<double> HamiltonianTangent::coords() const {
  std::vector<double> out;
  out.push_back(t_dot);
  out.insert(out.end(), q_dot.begin(), q_dot.end());
  out.insert(out.end(), p_dot.begin(), p_dot.end());
  out.push_back(s_dot);
  return out;
}

LagrangianSystem::LagrangianSystem(int n, jets::ScalarField lagrangian, dsl::ParamTable params, std::string label)
    : n_(n), lagrangian_(std::move(lagrangian)), params_(std::move(params)), label_(std::move(label)) {
  if (n < 1) throw std::invalid_argument("a system needs at least one degree of freedom");
  if (!lagrangian_) throw std::invalid_argument("missing Lagrangian");
}

LagrangianSystem LagrangianSystem::from_expr(const dsl::Expr& expr, dsl::ParamTable params, std::string label) {
  if (expr.space().kind() != jets::SpaceKind::kLagrangian)
    throw std::invalid_argument("a Lagrangian cannot depend on momenta");
  auto field = expr.field(params);
  return LagrangianSystem(expr.n(), std::move(field), std::move(params), std::move(label));
}

Jet LagrangianSystem::evaluate(const LagrangianPoint& x, int order) const {
  check_point(*this, x);
  const auto c = x.coords();
  return jets::eval_jet(lagrangian_, c, order);
}

double lagrangian_energy(const LagrangianSystem& L, const LagrangianPoint& x) {
  const Jet j = L.evaluate(x, 1);
  double e = -j.value();
  for (int i = 0; i < L.n(); ++i) e += x.v[static_cast<std::size_t>(i)] * j.d(v_index(L.n(), i));
  return e;
}

HamiltonianPoint legendre_map(const LagrangianSystem& L, const LagrangianPoint& x) {
  const Jet j = L.evaluate(x, 1);
  HamiltonianPoint y;
  y.t = x.t;
  y.q = x.q;
  y.s = x.s;
  y.p.resize(static_cast<std::size_t>(L.n()));
  for (int i = 0; i < L.n(); ++i) y.p[static_cast<std::size_t>(i)] = j.d(v_index(L.n(), i));
  return y;
}

Eigen::MatrixXd hessian_vv(const LagrangianSystem& L, const LagrangianPoint& x) {
  const Jet j = L.evaluate(x, 2);
  const int n = L.n();
  Eigen::MatrixXd W(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) W(a, b) = j.d(v_index(n, a), v_index(n, b));
  return W;
}

RegularityReport regularity(const Eigen::MatrixXd& W, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("rank tolerance must be positive");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeFullV);
  RegularityReport report;
  report.tolerance = tol;
  report.singular_values = svd.singularValues();
  const double largest = report.singular_values.size() ? report.singular_values(0) : 0.0;
  const double threshold = tol * largest;
  const auto n = W.cols();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (largest > 0.0 && report.singular_values(k) > threshold) {
      ++report.rank;
      continue;
    }
    Eigen::VectorXd u = svd.matrixV().col(k);
    Eigen::Index big = 0;
    u.cwiseAbs().maxCoeff(&big);
    if (u(big) < 0) u = -u;
    report.nullspace.push_back(u);
  }
  report.verdict = report.rank == n ? Verdict::kRegular : Verdict::kSingular;
  return report;
}

RegularityReport regularity(const LagrangianSystem& L, const LagrangianPoint& x, double tol) {
  return regularity(hessian_vv(L, x), tol);
}

HamiltonianTangent cocontact_hamiltonian_field(const jets::ScalarField& H, const HamiltonianPoint& y) {
  const int n = y.n();
  if (static_cast<int>(y.p.size()) != n) throw std::invalid_argument("q and p must have the same length");
  const auto c = y.coords();
  const Jet h = jets::eval_jet(H, c, 1);
  const double h_s = h.d(2 * n + 1);
  HamiltonianTangent out;
  out.t_dot = 1.0;
  out.q_dot.resize(static_cast<std::size_t>(n));
  out.p_dot.resize(static_cast<std::size_t>(n));
  double p_hp = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double h_p = h.d(1 + n + i);
    out.q_dot[k] = h_p;
    out.p_dot[k] = -(h.d(1 + i) + y.p[k] * h_s);
    p_hp += y.p[k] * h_p;
  }
  out.s_dot = p_hp - h.value();
  return out;
}

double HerglotzResidual::max_abs() const {
  double m = std::abs(scalar);
  for (double c : components) m = std::max(m, std::abs(c));
  return m;
}

HerglotzResidual herglotz_residual(const LagrangianSystem& L, const LagrangianPoint& x, std::span<const double> a,
                                   double s_dot) {
  check_point(L, x);
  const int n = L.n();
  if (static_cast<int>(a.size()) != n) throw std::invalid_argument("acceleration has the wrong dimension");
  const Jet j = L.evaluate(x, 2);
  const int s = s_index(n);
  HerglotzResidual out;
  out.components.resize(static_cast<std::size_t>(n));
  const double l_s = j.d(s);
  for (int i = 0; i < n; ++i) {
    const int vi = v_index(n, i);
    double total = j.d(0, vi) + s_dot * j.d(s, vi);
    for (int k = 0; k < n; ++k) {
      total += x.v[static_cast<std::size_t>(k)] * j.d(q_index(k), vi);
      total += a[static_cast<std::size_t>(k)] * j.d(v_index(n, k), vi);
    }
    out.components[static_cast<std::size_t>(i)] = total - j.d(q_index(i)) - l_s * j.d(vi);
  }
  out.scalar = s_dot - j.value();
  return out;
}

}  // namespace cocontact::mechanics
