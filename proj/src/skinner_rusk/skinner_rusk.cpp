#include "cocontact/skinner_rusk/skinner_rusk.hpp"

#include <algorithm>
#include <cmath>

namespace cocontact::sr {

using jets::Jet;
using mechanics::LagrangianSystem;

namespace {

int t_index() { return 0; }
int q_index(int i) { return 1 + i; }
int v_index(int n, int i) { return 1 + n + i; }
int p_index(int n, int i) { return 1 + 2 * n + i; }
int s_index(int n) { return 3 * n + 1; }

void check_point(const LagrangianSystem& L, std::span<const double> w) {
  if (static_cast<int>(w.size()) != 3 * L.n() + 2)
    throw std::invalid_argument("a point of W needs 3n+2 = " + std::to_string(3 * L.n() + 2) + " coordinates, got " +
                                std::to_string(w.size()));
}

Eigen::VectorXd gradient_of(const Jet& j, int dim) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  for (int var : j.active()) g(var) = j.d(var);
  return g;
}

// Orthonormal basis of the null space of `rows` (n columns, full row rank).
std::vector<Eigen::VectorXd> kernel_basis(const Eigen::MatrixXd& rows, int n,
                                          const std::vector<Eigen::VectorXd>* align_with) {
  std::vector<Eigen::VectorXd> basis;
  if (rows.rows() == 0) {
    for (int i = 0; i < n; ++i) basis.push_back(Eigen::VectorXd::Unit(n, i));
  } else if (rows.rows() < n) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeFullV);
    for (Eigen::Index k = rows.rows(); k < n; ++k) basis.push_back(svd.matrixV().col(k));
  }
  for (std::size_t k = 0; k < basis.size(); ++k) {
    auto& u = basis[k];
    if (align_with && align_with->size() == basis.size()) {
      if (u.dot((*align_with)[k]) < 0.0) u = -u;
      continue;
    }
    Eigen::Index big = 0;
    u.cwiseAbs().maxCoeff(&big);
    if (u(big) < 0.0) u = -u;
  }
  return basis;
}

Eigen::MatrixXd normalized_rows(const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd out = rows;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

// Ratio of smallest to largest singular value of the normalized rows.
double row_conditioning(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(normalized_rows(rows));
  const auto& sv = svd.singularValues();
  if (sv(0) == 0.0) return 0.0;
  return sv(sv.size() - 1) / sv(0);
}

std::string generation_label(int generation, int index) {
  return "xi" + std::to_string(generation) + "[" + std::to_string(index) + "]";
}

}  // namespace

const char* to_string(LadderStatus status) {
  switch (status) {
    case LadderStatus::kClosed: return "Closed";
    case LadderStatus::kIncompatible: return "Incompatible";
    case LadderStatus::kMaxIterations: return "MaxIterations";
  }
  return "?";
}

std::vector<double> PontryaginPoint::coords() const {
  std::vector<double> out;
  out.reserve(3 * q.size() + 2);
  out.push_back(t);
  out.insert(out.end(), q.begin(), q.end());
  out.insert(out.end(), v.begin(), v.end());
  out.insert(out.end(), p.begin(), p.end());
  out.push_back(s);
  return out;
}

PontryaginPoint PontryaginPoint::from_coords(std::span<const double> w, int n) {
  if (static_cast<int>(w.size()) != 3 * n + 2) throw std::invalid_argument("expected 3n+2 coordinates");
  PontryaginPoint x;
  x.t = w[0];
  x.q.assign(w.begin() + 1, w.begin() + 1 + n);
  x.v.assign(w.begin() + 1 + n, w.begin() + 1 + 2 * n);
  x.p.assign(w.begin() + 1 + 2 * n, w.begin() + 1 + 3 * n);
  x.s = w[static_cast<std::size_t>(3 * n + 1)];
  return x;
}

std::vector<double> ZCoefficients::coords() const {
  std::vector<double> out;
  out.reserve(3 * B.size() + 2);
  out.push_back(A);
  out.insert(out.end(), B.begin(), B.end());
  out.insert(out.end(), C.begin(), C.end());
  out.insert(out.end(), D.begin(), D.end());
  out.push_back(E);
  return out;
}

int LadderStructure::generations() const {
  int g = 0;
  for (const auto& c : constraints) g = std::max(g, c.generation);
  return g;
}

int LadderStructure::max_depth() const {
  int d = 0;
  for (const auto& c : constraints) d = std::max(d, c.depth);
  return d;
}

LadderStructure LadderStructure::primaries(int n) {
  LadderStructure s;
  s.n = n;
  for (int j = 0; j < n; ++j) {
    ConstraintSpec c;
    c.generation = 1;
    c.depth = 1;
    c.primary = j;
    c.label = generation_label(1, j + 1);
    c.origin = "p" + std::to_string(j + 1) + " - dL/dv" + std::to_string(j + 1);
    s.constraints.push_back(std::move(c));
    s.roles.push_back(RowRole::kUndecided);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Sweep

Sweep::Sweep(const LagrangianSystem& L, const LadderStructure& structure, std::span<const double> w, int order)
    : system_(L), structure_(structure), n_(L.n()), order_(order) {
  check_point(L, w);
  if (structure.n != n_) throw std::invalid_argument("ladder and system dimensions differ");
  if (order < 1) throw std::invalid_argument("sweep order must be at least 1");
  w_ = Jet::seed(w, order);
  std::vector<Jet> lag;
  lag.reserve(static_cast<std::size_t>(2 * n_ + 2));
  lag.push_back(w_[static_cast<std::size_t>(t_index())]);
  for (int i = 0; i < n_; ++i) lag.push_back(w_[static_cast<std::size_t>(q_index(i))]);
  for (int i = 0; i < n_; ++i) lag.push_back(w_[static_cast<std::size_t>(v_index(n_, i))]);
  lag.push_back(w_[static_cast<std::size_t>(s_index(n_))]);
  L_ = L(lag);
  const Jet Ls = L_.derivative(s_index(n_));
  for (int i = 0; i < n_; ++i) {
    Lv_.push_back(L_.derivative(v_index(n_, i)));
    D_.push_back(L_.derivative(q_index(i)) + w_[static_cast<std::size_t>(p_index(n_, i))] * Ls);
  }
  const auto count = structure.constraints.size();
  xi_.resize(count);
  M_.resize(count);
  r_.resize(count);
}

const Jet& Sweep::xi(int id) {
  auto& slot = xi_.at(static_cast<std::size_t>(id));
  if (slot) return *slot;
  const auto& spec = structure_.constraints[static_cast<std::size_t>(id)];
  if (spec.depth > order_)
    throw std::logic_error("sweep of order " + std::to_string(order_) + " cannot evaluate " + spec.label);
  if (spec.generation == 1) {
    slot = std::make_unique<Jet>(w_[static_cast<std::size_t>(p_index(n_, spec.primary))] -
                                 Lv_[static_cast<std::size_t>(spec.primary)]);
  } else {
    const auto& C = solve(spec.snapshot);
    slot = std::make_unique<Jet>(tangency(spec.parent, C));
  }
  return *slot;
}

void Sweep::ensure_rows(int id) {
  auto& row = M_.at(static_cast<std::size_t>(id));
  if (!row.empty()) return;
  const Jet& x = xi(id);
  const auto& spec = structure_.constraints[static_cast<std::size_t>(id)];
  if (x.order() < 1 || spec.depth + 1 > order_)
    throw std::logic_error("sweep of order " + std::to_string(order_) + " cannot differentiate " + spec.label);
  std::vector<Jet> m;
  m.reserve(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) m.push_back(x.derivative(v_index(n_, i)));
  Jet r = x.derivative(t_index());
  for (int i = 0; i < n_; ++i) {
    r += x.derivative(q_index(i)) * w_[static_cast<std::size_t>(v_index(n_, i))];
    r += x.derivative(p_index(n_, i)) * D_[static_cast<std::size_t>(i)];
  }
  r += x.derivative(s_index(n_)) * L_;
  row = std::move(m);
  r_[static_cast<std::size_t>(id)] = std::make_unique<Jet>(std::move(r));
}

const Jet& Sweep::M(int id, int i) {
  ensure_rows(id);
  return M_[static_cast<std::size_t>(id)][static_cast<std::size_t>(i)];
}

const Jet& Sweep::r(int id) {
  ensure_rows(id);
  return *r_[static_cast<std::size_t>(id)];
}

Jet Sweep::tangency(int id, const std::vector<Jet>& C) {
  Jet out = r(id);
  for (int i = 0; i < n_; ++i) out += M(id, i) * C[static_cast<std::size_t>(i)];
  return out;
}

const std::vector<Jet>& Sweep::solve(const std::vector<int>& rows) {
  auto it = solutions_.find(rows);
  if (it != solutions_.end()) return it->second;
  const auto m = rows.size();
  const auto n = static_cast<std::size_t>(n_);
  std::vector<Jet> C(n, Jet(0.0));
  if (m > 0) {
    // Square systems are solved directly; otherwise through the normal
    // equations of the minimum-norm problem, C = M^T (M M^T)^{-1} (-r).
    std::vector<std::vector<Jet>> A;
    std::vector<Jet> b;
    if (m == n) {
      for (int id : rows) {
        std::vector<Jet> row;
        for (int i = 0; i < n_; ++i) row.push_back(M(id, i));
        A.push_back(std::move(row));
        b.push_back(-r(id));
      }
    } else {
      A.assign(m, std::vector<Jet>(m, Jet(0.0)));
      for (std::size_t a = 0; a < m; ++a) {
        b.push_back(-r(rows[a]));
        for (std::size_t c = a; c < m; ++c) {
          Jet dot(0.0);
          for (int i = 0; i < n_; ++i) dot += M(rows[a], i) * M(rows[c], i);
          A[a][c] = dot;
          A[c][a] = dot;
        }
      }
    }
    const std::size_t size = b.size();
    for (std::size_t col = 0; col < size; ++col) {
      std::size_t best = col;
      for (std::size_t k = col + 1; k < size; ++k)
        if (std::abs(A[k][col].value()) > std::abs(A[best][col].value())) best = k;
      if (A[best][col].value() == 0.0) throw NumericalBreakdown("singular tangency system");
      std::swap(A[col], A[best]);
      std::swap(b[col], b[best]);
      const Jet inv = reciprocal(A[col][col]);
      for (std::size_t k = col + 1; k < size; ++k) {
        if (A[k][col].is_constant() && A[k][col].value() == 0.0) continue;
        const Jet factor = A[k][col] * inv;
        for (std::size_t c = col; c < size; ++c) A[k][c] -= factor * A[col][c];
        b[k] -= factor * b[col];
      }
    }
    std::vector<Jet> y(size, Jet(0.0));
    for (std::size_t k = size; k-- > 0;) {
      Jet acc = b[k];
      for (std::size_t c = k + 1; c < size; ++c) acc -= A[k][c] * y[c];
      y[k] = acc / A[k][k];
    }
    if (m == n) {
      C = std::move(y);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        Jet acc(0.0);
        for (std::size_t a = 0; a < m; ++a) acc += M(rows[a], static_cast<int>(i)) * y[a];
        C[i] = acc;
      }
    }
  }
  return solutions_.emplace(rows, std::move(C)).first->second;
}

Eigen::MatrixXd Sweep::M_values(const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), n_);
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (int i = 0; i < n_; ++i) out(static_cast<Eigen::Index>(a), i) = M(rows[a], i).value();
  return out;
}

Eigen::VectorXd Sweep::r_values(const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t a = 0; a < rows.size(); ++a) out(static_cast<Eigen::Index>(a)) = r(rows[a]).value();
  return out;
}

// ---------------------------------------------------------------------------
// Point functions

double coupling(const PontryaginPoint& w) {
  if (w.p.size() != w.v.size()) throw std::invalid_argument("v and p must have the same length");
  double c = 0.0;
  for (std::size_t i = 0; i < w.v.size(); ++i) c += w.p[i] * w.v[i];
  return c;
}

double hamiltonian(const LagrangianSystem& L, const PontryaginPoint& w) {
  return coupling(w) - L.evaluate(w.lagrangian(), 0).value();
}

std::vector<double> primary_constraints(const LagrangianSystem& L, const PontryaginPoint& w) {
  const auto h = mechanics::legendre_map(L, w.lagrangian());
  std::vector<double> out(w.p.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = w.p[j] - h.p[j];
  return out;
}

// ---------------------------------------------------------------------------
// Constraint algorithm

TangencyResult tangency_solve(const LagrangianSystem& L, const PontryaginPoint& point, const LadderStructure& prior,
                              const AlgorithmOptions& opts) {
  const auto w = point.coords();
  check_point(L, w);
  const int n = L.n();
  const int dim = 3 * n + 2;
  auto S = std::make_shared<LadderStructure>(prior);
  Sweep sweep(L, *S, w, S->max_depth() + 2);

  const auto count = static_cast<int>(S->constraints.size());
  for (int id = 0; id < count; ++id) {
    const double value = sweep.xi(id).value();
    if (!(std::abs(value) <= opts.feasibility_tol))
      throw InfeasiblePoint(S->constraints[static_cast<std::size_t>(id)].label + " = " + std::to_string(value) +
                                " exceeds the feasibility tolerance",
                            std::make_shared<LadderStructure>(prior), id, value);
  }

  // Greedy pivot selection over the rows not yet classified.
  double row_scale = 1.0;
  for (int id = 0; id < count; ++id) row_scale = std::max(row_scale, sweep.M_values({id}).norm());
  std::vector<int> dependent;
  for (int id = 0; id < count; ++id) {
    if (S->roles[static_cast<std::size_t>(id)] != RowRole::kUndecided) continue;
    const Eigen::MatrixXd row = sweep.M_values({id});
    bool independent = false;
    if (row.norm() > opts.rank_tol * row_scale) {
      auto trial = S->pivots;
      trial.push_back(id);
      independent = row_conditioning(sweep.M_values(trial)) > opts.rank_tol;
    }
    if (independent) {
      S->roles[static_cast<std::size_t>(id)] = RowRole::kPivot;
      S->pivots.push_back(id);
    } else {
      S->roles[static_cast<std::size_t>(id)] = RowRole::kDependent;
      dependent.push_back(id);
    }
  }

  TangencyResult result;
  const auto& Cjets = sweep.solve(S->pivots);
  for (const auto& c : Cjets) result.C.push_back(c.value());
  result.undetermined = kernel_basis(sweep.M_values(S->pivots), n, nullptr);

  std::vector<Eigen::VectorXd> known;
  double grad_scale = 1.0;
  for (int id = 0; id < count; ++id) {
    known.push_back(gradient_of(sweep.xi(id), dim));
    grad_scale = std::max(grad_scale, known.back().norm());
  }

  int pivot_depth = 0;
  for (int id : S->pivots) pivot_depth = std::max(pivot_depth, S->constraints[static_cast<std::size_t>(id)].depth);
  const int generation = S->generations() + 1;
  int produced = 0;
  for (int id : dependent) {
    const Jet candidate = sweep.tangency(id, Cjets);
    const double value = candidate.value();
    const Eigen::VectorXd g = gradient_of(candidate, dim);
    bool in_span = g.norm() <= opts.rank_tol * grad_scale;
    if (!in_span && !known.empty()) {
      Eigen::MatrixXd G(dim, static_cast<Eigen::Index>(known.size()));
      for (std::size_t k = 0; k < known.size(); ++k) G.col(static_cast<Eigen::Index>(k)) = known[k];
      const Eigen::VectorXd coeff = G.completeOrthogonalDecomposition().solve(g);
      in_span = (g - G * coeff).norm() <= opts.rank_tol * g.norm();
    }
    const auto& parent = S->constraints[static_cast<std::size_t>(id)];
    if (in_span) {
      if (std::abs(value) <= opts.feasibility_tol) continue;
      result.incompatible = true;
      result.incompatible_label = "tangency of " + parent.label;
      result.incompatible_value = value;
      continue;
    }
    ConstraintSpec spec;
    spec.generation = generation;
    spec.depth = 1 + std::max(parent.depth, pivot_depth);
    spec.parent = id;
    spec.snapshot = S->pivots;
    spec.label = generation_label(generation, ++produced);
    spec.origin = "tangency of " + parent.label;
    known.push_back(g);
    result.new_constraints.push_back({spec, value});
  }
  for (const auto& nc : result.new_constraints) {
    S->constraints.push_back(nc.spec);
    S->roles.push_back(RowRole::kUndecided);
  }
  result.structure = S;
  return result;
}

namespace {

ConstraintLadder make_ladder(const LagrangianSystem& L, const StructurePtr& S, LadderStatus status,
                             std::span<const double> w) {
  ConstraintLadder ladder;
  ladder.status = status;
  ladder.structure = S;
  ladder.generations.resize(static_cast<std::size_t>(S->generations()));
  for (int id = 0; id < static_cast<int>(S->constraints.size()); ++id) {
    const auto& spec = S->constraints[static_cast<std::size_t>(id)];
    ConstraintFn fn;
    fn.generation = spec.generation;
    fn.label = spec.label;
    fn.evaluator = [L, S, id](const PontryaginPoint& x) {
      const auto coords = x.coords();
      Sweep sweep(L, *S, coords, S->constraints[static_cast<std::size_t>(id)].depth);
      return sweep.xi(id).value();
    };
    ladder.generations[static_cast<std::size_t>(spec.generation - 1)].push_back(std::move(fn));
  }
  Sweep sweep(L, *S, w, std::max(1, S->max_depth()));
  for (int id = 0; id < static_cast<int>(S->constraints.size()); ++id) ladder.values.push_back(sweep.xi(id).value());
  ladder.rank = static_cast<int>(S->pivots.size());
  ladder.kernel_dim = L.n() - ladder.rank;
  return ladder;
}

ZCoefficients best_effort_Z(const LagrangianSystem& L, const PontryaginPoint& point, const TangencyResult& r) {
  const auto w = point.coords();
  Sweep sweep(L, *r.structure, w, 1);
  ZCoefficients Z;
  Z.B = point.v;
  Z.C = r.C;
  for (int i = 0; i < L.n(); ++i) Z.D.push_back(sweep.D(i).value());
  Z.E = sweep.E().value();
  Z.undetermined = r.undetermined;
  return Z;
}

}  // namespace

AlgorithmResult run_constraint_algorithm(const LagrangianSystem& L, const PontryaginPoint& point,
                                         const AlgorithmOptions& opts) {
  if (opts.max_generations < 1) throw std::invalid_argument("max_generations must be at least 1");
  const auto w = point.coords();
  check_point(L, w);
  auto S = std::make_shared<const LadderStructure>(LadderStructure::primaries(L.n()));
  for (;;) {
    auto step = tangency_solve(L, point, *S, opts);
    if (step.incompatible) {
      AlgorithmResult out;
      out.ladder = make_ladder(L, step.structure, LadderStatus::kIncompatible, w);
      out.ladder.incompatible = step.incompatible_label;
      out.ladder.incompatible_value = step.incompatible_value;
      out.Z = best_effort_Z(L, point, step);
      return out;
    }
    if (step.new_constraints.empty()) {
      auto closed = std::make_shared<LadderStructure>(*step.structure);
      AlgorithmResult out;
      out.ladder = make_ladder(L, closed, LadderStatus::kClosed, w);
      AssembleOptions aopts;
      aopts.algorithm = opts;
      out.Z = assemble_Z(L, point, out.ladder, aopts);
      return out;
    }
    if (step.new_constraints.front().spec.generation > opts.max_generations) {
      AlgorithmResult out;
      auto truncated = std::make_shared<LadderStructure>(*step.structure);
      const auto keep = truncated->constraints.size() - step.new_constraints.size();
      truncated->constraints.resize(keep);
      truncated->roles.resize(keep);
      out.ladder = make_ladder(L, truncated, LadderStatus::kMaxIterations, w);
      out.Z = best_effort_Z(L, point, step);
      return out;
    }
    const int first_new = static_cast<int>(step.structure->constraints.size() - step.new_constraints.size());
    for (std::size_t k = 0; k < step.new_constraints.size(); ++k) {
      const auto& nc = step.new_constraints[k];
      if (!(std::abs(nc.value) <= opts.feasibility_tol))
        throw InfeasiblePoint(nc.spec.label + " (" + nc.spec.origin + ") = " + std::to_string(nc.value) +
                                  " exceeds the feasibility tolerance",
                              step.structure, first_new + static_cast<int>(k), nc.value);
    }
    S = step.structure;
  }
}

ZCoefficients assemble_Z(const LagrangianSystem& L, const PontryaginPoint& w, const ConstraintLadder& ladder,
                         const AssembleOptions& opts) {
  if (ladder.status != LadderStatus::kClosed || !ladder.structure)
    throw LadderNotClosed("the constraint ladder is not closed (status " + std::string(to_string(ladder.status)) + ")");
  return assemble_Z(L, w, *ladder.structure, opts);
}

ZCoefficients assemble_Z(const LagrangianSystem& L, const PontryaginPoint& point, const LadderStructure& S,
                         const AssembleOptions& opts) {
  for (auto role : S.roles)
    if (role == RowRole::kUndecided) throw LadderNotClosed("the constraint ladder has unclassified rows");
  const auto w = point.coords();
  check_point(L, w);
  const int n = L.n();
  Sweep sweep(L, S, w, S.max_depth() + 1);
  const Eigen::MatrixXd MP = sweep.M_values(S.pivots);
  if (row_conditioning(MP) < opts.algorithm.condition_cap)
    throw NumericalBreakdown("tangency system is ill-conditioned at t = " + std::to_string(point.t));
  ZCoefficients Z;
  Z.B = point.v;
  for (const auto& c : sweep.solve(S.pivots)) Z.C.push_back(c.value());
  for (int i = 0; i < n; ++i) Z.D.push_back(sweep.D(i).value());
  Z.E = sweep.E().value();
  Z.undetermined = kernel_basis(MP, n, opts.align_with);
  if (opts.gauge && !Z.undetermined.empty()) {
    const auto g = opts.gauge(point, Z.undetermined);
    if (g.size() != Z.undetermined.size()) throw std::invalid_argument("gauge must give one value per free direction");
    for (std::size_t k = 0; k < g.size(); ++k)
      for (int i = 0; i < n; ++i) Z.C[static_cast<std::size_t>(i)] += g[k] * Z.undetermined[k](i);
  }
  return Z;
}

ConstraintJacobian constraint_jacobian(const LagrangianSystem& L, const LadderStructure& S, std::span<const double> w) {
  check_point(L, w);
  const int dim = 3 * L.n() + 2;
  Sweep sweep(L, S, w, S.max_depth() + 1);
  ConstraintJacobian out;
  const auto count = static_cast<Eigen::Index>(S.constraints.size());
  out.values.resize(count);
  out.gradients.resize(count, dim);
  for (Eigen::Index id = 0; id < count; ++id) {
    const Jet& x = sweep.xi(static_cast<int>(id));
    out.values(id) = x.value();
    out.gradients.row(id) = gradient_of(x, dim).transpose();
  }
  return out;
}

std::vector<double> constraint_values(const LagrangianSystem& L, const LadderStructure& S, std::span<const double> w) {
  check_point(L, w);
  Sweep sweep(L, S, w, std::max(1, S.max_depth()));
  std::vector<double> out;
  for (int id = 0; id < static_cast<int>(S.constraints.size()); ++id) out.push_back(sweep.xi(id).value());
  return out;
}

double lie_derivative(const jets::ScalarField& xi, const ZCoefficients& Z, const PontryaginPoint& w) {
  const auto z = Z.coords();
  const auto x = w.coords();
  return jets::lie_derivative(xi, z, x);
}

}  // namespace cocontact::sr
