#include "cocontact/dynamics/dynamics.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

#include "cocontact/jets/jet.hpp"

namespace cocontact::dynamics {

using mechanics::HamiltonianPoint;
using mechanics::LagrangianPoint;
using mechanics::LagrangianSystem;
using sr::PontryaginPoint;
using sr::ZCoefficients;

std::vector<double> project_to_lagrangian(const ZCoefficients& Z, const PontryaginPoint& w) {
  const int n = w.n();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * n + 2));
  out.push_back(Z.A);
  out.insert(out.end(), Z.B.begin(), Z.B.end());
  out.insert(out.end(), Z.C.begin(), Z.C.end());
  out.push_back(Z.E);
  return out;
}

std::vector<double> project_to_hamiltonian(const ZCoefficients& Z, const PontryaginPoint& w) {
  const int n = w.n();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * n + 2));
  out.push_back(Z.A);
  out.insert(out.end(), Z.B.begin(), Z.B.end());
  out.insert(out.end(), Z.D.begin(), Z.D.end());
  out.push_back(Z.E);
  return out;
}

std::vector<double> inverse_legendre(const LagrangianSystem& L, const HamiltonianPoint& y, std::span<const double> guess) {
  const int n = L.n();
  LagrangianPoint x{y.t, y.q, std::vector<double>(static_cast<std::size_t>(n), 0.0), y.s};
  if (guess.size() == static_cast<std::size_t>(n)) x.v.assign(guess.begin(), guess.end());
  double pscale = 1.0;
  for (double p : y.p) pscale = std::max(pscale, std::abs(p));
  for (int it = 0; it < 60; ++it) {
    const Eigen::MatrixXd W = mechanics::hessian_vv(L, x);
    if (it == 0 && mechanics::regularity(W).verdict != mechanics::Verdict::kRegular)
      throw NonInvertibleLegendre("fibre Hessian is singular at t = " + std::to_string(y.t));
    const auto h = mechanics::legendre_map(L, x);
    Eigen::VectorXd F(n);
    for (int i = 0; i < n; ++i) F(i) = h.p[static_cast<std::size_t>(i)] - y.p[static_cast<std::size_t>(i)];
    if (F.lpNorm<Eigen::Infinity>() <= 1e-14 * pscale) return x.v;
    const Eigen::VectorXd dv = W.partialPivLu().solve(-F);
    if (!dv.allFinite()) break;
    for (int i = 0; i < n; ++i) x.v[static_cast<std::size_t>(i)] += dv(i);
    if (dv.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(1.0, Eigen::Map<Eigen::VectorXd>(x.v.data(), n).lpNorm<Eigen::Infinity>())) {
      return x.v;
    }
  }
  throw NonInvertibleLegendre("Legendre map inversion did not converge at t = " + std::to_string(y.t));
}

VectorField lagrangian_field(const LagrangianSystem& L, sr::StructurePtr ladder, const sr::AssembleOptions& opts) {
  return [L, ladder = std::move(ladder), opts](std::span<const double> x) {
    const auto lp = LagrangianPoint::from_coords(x, L.n());
    const auto h = mechanics::legendre_map(L, lp);
    const PontryaginPoint w{lp.t, lp.q, lp.v, h.p, lp.s};
    return project_to_lagrangian(sr::assemble_Z(L, w, *ladder, opts), w);
  };
}

VectorField hamiltonian_field(const LagrangianSystem& L, sr::StructurePtr ladder, const sr::AssembleOptions& opts) {
  // Warm start for the Legendre inversion; each returned field owns its own.
  auto last_v = std::make_shared<std::vector<double>>();
  return [L, ladder = std::move(ladder), opts, last_v](std::span<const double> y) {
    const auto hp = HamiltonianPoint::from_coords(y, L.n());
    auto v = inverse_legendre(L, hp, *last_v);
    *last_v = v;
    const PontryaginPoint w{hp.t, hp.q, std::move(v), hp.p, hp.s};
    return project_to_hamiltonian(sr::assemble_Z(L, w, *ladder, opts), w);
  };
}

// ---------------------------------------------------------------------------
// Ladder projection

namespace {

// Minimum-norm least-squares solution with singular values below `cut` dropped.
Eigen::MatrixXd pinv_solve(const Eigen::MatrixXd& M, const Eigen::MatrixXd& b, double cut) {
  if (M.cols() == 0) return Eigen::MatrixXd::Zero(0, b.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(M.cols(), b.cols());
  const Eigen::MatrixXd Utb = svd.matrixU().transpose() * b;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > cut) out += svd.matrixV().col(k) * (Utb.row(k) / sv(k));
  return out;
}

Eigen::MatrixXd columns(const Eigen::MatrixXd& J, const std::vector<int>& cols) {
  Eigen::MatrixXd out(J.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = J.col(cols[k]);
  return out;
}

// Residual of b after removing its component in range(M).
Eigen::MatrixXd residual_of(const Eigen::MatrixXd& M, const Eigen::MatrixXd& b, double cut) {
  if (M.cols() == 0) return b;
  return b - M * pinv_solve(M, b, cut);
}

// Newton step that uses the tiers in order: a tier contributes only what the
// earlier ones cannot.
Eigen::VectorXd tiered_step(const Eigen::MatrixXd& J, const Eigen::VectorXd& rhs,
                            const std::vector<std::vector<int>>& tiers, double cut) {
  Eigen::VectorXd step = Eigen::VectorXd::Zero(J.cols());
  Eigen::VectorXd remaining = rhs;
  for (std::size_t k = tiers.size(); k-- > 0;) {
    std::vector<int> earlier;
    for (std::size_t j = 0; j < k; ++j) earlier.insert(earlier.end(), tiers[j].begin(), tiers[j].end());
    const Eigen::MatrixXd JE = columns(J, earlier);
    const Eigen::MatrixXd JT = columns(J, tiers[k]);
    Eigen::VectorXd d;
    if (k == 0) {
      d = pinv_solve(JT, remaining, cut);
    } else {
      const Eigen::MatrixXd PT = residual_of(JE, JT, cut);
      const Eigen::VectorXd Pr = residual_of(JE, remaining, cut);
      // Earlier tiers already reach the target up to rounding.
      if (Pr.norm() <= 1e-9 * rhs.norm()) continue;
      d = pinv_solve(PT, Pr, cut);
    }
    for (std::size_t j = 0; j < tiers[k].size(); ++j) step(tiers[k][j]) += d(static_cast<Eigen::Index>(j));
    remaining -= JT * d;
  }
  return step;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

PontryaginPoint newton_project(const LagrangianSystem& L, const sr::LadderStructure& structure,
                               const PontryaginPoint& point, const sr::AlgorithmOptions& opts, int* iterations) {
  const int n = L.n();
  auto w = point.coords();
  const double target = 1e-3 * opts.feasibility_tol;

  // Coordinates whose velocity row of the fibre Hessian vanishes act as multipliers.
  const Eigen::MatrixXd W = mechanics::hessian_vv(L, point.lagrangian());
  const double wscale = std::max(1.0, W.cwiseAbs().maxCoeff());
  std::vector<int> first, second, third;
  for (int i = 0; i < n; ++i) first.push_back(2 * n + 1 + i);
  for (int i = 0; i < n; ++i) {
    const bool multiplier = W.row(i).cwiseAbs().maxCoeff() <= opts.rank_tol * wscale;
    if (multiplier) {
      first.push_back(1 + i);
      first.push_back(1 + n + i);
    } else {
      second.push_back(1 + n + i);
      third.push_back(1 + i);
    }
  }
  const std::vector<std::vector<int>> tiers{first, second, third};

  int it = 0;
  for (; it < 60; ++it) {
    const auto jac = sr::constraint_jacobian(L, structure, w);
    const double res = max_abs(jac.values);
    if (res <= target) break;
    const double cut = opts.rank_tol * std::max(1.0, jac.gradients.cwiseAbs().maxCoeff());
    const Eigen::VectorXd step = tiered_step(jac.gradients, -jac.values, tiers, cut);
    bool accepted = false;
    double alpha = 1.0;
    for (int k = 0; k < 40 && !accepted; ++k, alpha *= 0.5) {
      auto trial = w;
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += alpha * step(static_cast<Eigen::Index>(i));
      try {
        const auto vals = sr::constraint_values(L, structure, trial);
        double r = 0.0;
        for (double v : vals) r = std::max(r, std::abs(v));
        if (r < res) {
          w = std::move(trial);
          accepted = true;
        }
      } catch (const jets::DomainError&) {
      }
    }
    if (!accepted) {
      if (res <= opts.feasibility_tol) break;
      throw ProjectionFailure("cannot reduce the constraint residual " + std::to_string(res) + " at t = " +
                              std::to_string(point.t));
    }
  }
  if (iterations) *iterations += it;
  const auto final_values = sr::constraint_values(L, structure, w);
  for (double v : final_values)
    if (!(std::abs(v) <= opts.feasibility_tol))
      throw ProjectionFailure("projection onto the constraints did not converge at t = " + std::to_string(point.t));
  return PontryaginPoint::from_coords(w, n);
}

ProjectionResult project_to_ladder(const LagrangianSystem& L, const PontryaginPoint& w,
                                   const sr::AlgorithmOptions& opts) {
  ProjectionResult out;
  out.point = w;
  for (int attempt = 0; attempt < 4 * opts.max_generations + 4; ++attempt) {
    try {
      out.ladder = sr::run_constraint_algorithm(L, out.point, opts).ladder;
      return out;
    } catch (const sr::InfeasiblePoint& e) {
      out.point = newton_project(L, *e.structure(), out.point, opts, &out.newton_iterations);
    }
  }
  throw ProjectionFailure("initial condition could not be placed on the constraint ladder");
}

// ---------------------------------------------------------------------------
// Trajectories

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(points.size());
  for (const auto& p : points) t.push_back(p.t);
  return t;
}

namespace {

// Weights of the first derivative at z from the nodes xs.
std::vector<double> fd_weights(double z, std::span<const double> xs) {
  const std::size_t N = xs.size();
  constexpr int m = 1;
  std::vector<std::array<double, m + 1>> c(N, {0.0, 0.0});
  double c1 = 1.0;
  double c4 = xs[0] - z;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < N; ++i) {
    const int mn = std::min<int>(static_cast<int>(i), m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][static_cast<std::size_t>(k)] =
              c1 * (k * c[i - 1][static_cast<std::size_t>(k - 1)] - c5 * c[i - 1][static_cast<std::size_t>(k)]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[j][static_cast<std::size_t>(k)] =
            (c4 * c[j][static_cast<std::size_t>(k)] - k * c[j][static_cast<std::size_t>(k - 1)]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(N);
  for (std::size_t i = 0; i < N; ++i) w[i] = c[i][1];
  return w;
}

}  // namespace

std::vector<std::vector<double>> sample_derivative(std::span<const double> times,
                                                   const std::vector<std::vector<double>>& values) {
  const std::size_t N = times.size();
  if (values.size() != N) throw std::invalid_argument("one value row per sample required");
  std::vector<std::vector<double>> out(N);
  if (N < 2) {
    for (std::size_t k = 0; k < N; ++k) out[k].assign(values[k].size(), 0.0);
    return out;
  }
  const std::size_t width = std::min<std::size_t>(9, N);
  for (std::size_t k = 0; k < N; ++k) {
    std::size_t start = k >= width / 2 ? k - width / 2 : 0;
    start = std::min(start, N - width);
    const auto w = fd_weights(times[k], times.subspan(start, width));
    out[k].assign(values[k].size(), 0.0);
    for (std::size_t j = 0; j < width; ++j)
      for (std::size_t i = 0; i < values[k].size(); ++i) out[k][i] += w[j] * values[start + j][i];
  }
  return out;
}

void compute_residuals(const LagrangianSystem& L, Trajectory& traj) {
  const int n = traj.n;
  const auto t = traj.times();
  std::vector<std::vector<double>> rows;
  rows.reserve(traj.points.size());
  for (const auto& p : traj.points) {
    std::vector<double> r(p.q);
    r.insert(r.end(), p.v.begin(), p.v.end());
    r.push_back(p.s);
    rows.push_back(std::move(r));
  }
  const auto rates = sample_derivative(t, rows);
  traj.residuals.assign(traj.points.size(), {});
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    const auto& p = traj.points[k];
    auto& res = traj.residuals[k];
    for (int i = 0; i < n; ++i)
      res.holonomy = std::max(res.holonomy, std::abs(rates[k][static_cast<std::size_t>(i)] - p.v[static_cast<std::size_t>(i)]));
    const std::span<const double> a(rates[k].data() + n, static_cast<std::size_t>(n));
    const double s_dot = rates[k][static_cast<std::size_t>(2 * n)];
    const auto h = mechanics::herglotz_residual(L, p.lagrangian(), a, s_dot);
    res.sdot = std::abs(h.scalar);
    for (double c : h.components) res.herglotz = std::max(res.herglotz, std::abs(c));
    if (traj.ladder) {
      for (double v : sr::constraint_values(L, *traj.ladder, p.coords()))
        res.constraint = std::max(res.constraint, std::abs(v));
    }
  }
}

Trajectory integrate_unified(const LagrangianSystem& L, const PontryaginPoint& w0, const IntegratorConfig& cfg,
                             const DynamicsOptions& opts) {
  if (w0.n() != L.n()) throw std::invalid_argument("initial point has the wrong dimension");
  Trajectory traj;
  traj.n = L.n();
  PontryaginPoint start = w0;
  sr::ConstraintLadder ladder;
  if (opts.project_initial) {
    auto proj = project_to_ladder(L, w0, opts.algorithm);
    start = proj.point;
    ladder = std::move(proj.ladder);
    traj.newton_iterations = proj.newton_iterations;
  } else {
    ladder = sr::run_constraint_algorithm(L, w0, opts.algorithm).ladder;
  }
  if (ladder.status != sr::LadderStatus::kClosed)
    throw sr::LadderNotClosed("constraint ladder did not close (" + std::string(sr::to_string(ladder.status)) +
                              (ladder.incompatible.empty() ? "" : ": " + ladder.incompatible) + ")");
  traj.ladder = ladder.structure;
  const auto& S = *traj.ladder;

  sr::AssembleOptions aopts;
  aopts.algorithm = opts.algorithm;
  aopts.gauge = opts.gauge;
  const int n = L.n();
  // Kernel basis at the last accepted point; only used when C has free directions.
  std::vector<Eigen::VectorXd> kernel;
  const auto assemble = [&](const PontryaginPoint& w) {
    auto local = aopts;
    local.align_with = kernel.empty() ? nullptr : &kernel;
    return sr::assemble_Z(L, w, S, local);
  };
  VectorField field = [&](std::span<const double> x) { return assemble(PontryaginPoint::from_coords(x, n)).coords(); };
  const double alarm = 10.0 * opts.algorithm.feasibility_tol;
  StepHook hook = [&](std::vector<double>& x) {
    auto w = PontryaginPoint::from_coords(x, n);
    if (cfg.reproject) {
      w = newton_project(L, S, w, opts.algorithm, &traj.newton_iterations);
      x = w.coords();
    } else {
      for (double v : sr::constraint_values(L, S, x))
        if (!(std::abs(v) <= alarm))
          throw LadderLost("constraint drift " + std::to_string(std::abs(v)) + " at t = " + std::to_string(x[0]) +
                           " exceeds " + std::to_string(alarm));
    }
    if (ladder.kernel_dim > 0) kernel = assemble(w).undetermined;
  };

  const auto states = integrate(field, start.coords(), cfg, hook);
  kernel.clear();
  traj.points.reserve(states.size());
  traj.Z.reserve(states.size());
  for (const auto& x : states) {
    traj.points.push_back(PontryaginPoint::from_coords(x, n));
    traj.Z.push_back(assemble(traj.points.back()));
    kernel = traj.Z.back().undetermined;
  }
  compute_residuals(L, traj);
  return traj;
}

ResidualReport residual_report(const LagrangianSystem&, const Trajectory& traj) {
  if (traj.points.empty()) throw std::invalid_argument("empty trajectory");
  ResidualReport r;
  const auto acc = [&](ChannelSummary& c, auto member) {
    double sum = 0.0;
    for (const auto& s : traj.residuals) {
      const double v = s.*member;
      c.max = std::max(c.max, v);
      sum += v * v;
    }
    c.rms = traj.residuals.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(traj.residuals.size()));
  };
  acc(r.holonomy, &ResidualSample::holonomy);
  acc(r.sdot, &ResidualSample::sdot);
  acc(r.herglotz, &ResidualSample::herglotz);
  acc(r.constraint, &ResidualSample::constraint);
  return r;
}

// ---------------------------------------------------------------------------
// Equivalence

EquivalenceReport cross_check_equivalence(const LagrangianSystem& L, const LagrangianPoint& x0,
                                          const IntegratorConfig& cfg, const DynamicsOptions& opts) {
  const int n = L.n();
  EquivalenceReport rep;
  const auto h0 = mechanics::legendre_map(L, x0);
  rep.unified = integrate_unified(L, PontryaginPoint{x0.t, x0.q, x0.v, h0.p, x0.s}, cfg, opts);
  const auto& start = rep.unified.points.front();
  sr::AssembleOptions aopts;
  aopts.algorithm = opts.algorithm;
  aopts.gauge = opts.gauge;

  auto xcfg = cfg;
  xcfg.reproject = false;
  rep.lagrangian = integrate(lagrangian_field(L, rep.unified.ladder, aopts), start.lagrangian().coords(), xcfg);
  rep.hamiltonian_applicable =
      mechanics::regularity(L, start.lagrangian(), opts.algorithm.rank_tol).verdict == mechanics::Verdict::kRegular;
  if (rep.hamiltonian_applicable)
    rep.hamiltonian = integrate(hamiltonian_field(L, rep.unified.ladder, aopts), start.hamiltonian().coords(), xcfg);

  const auto& Zs = rep.unified.points;
  const bool aligned = rep.lagrangian.size() == Zs.size() &&
                       (!rep.hamiltonian_applicable || rep.hamiltonian.size() == Zs.size());
  std::vector<std::array<std::size_t, 3>> pairs;  // indices into Z, X, Y
  if (aligned) {
    for (std::size_t k = 0; k < Zs.size(); ++k) pairs.push_back({k, k, k});
  } else {
    // Adaptive runs pick different grids; all of them land on t_end.
    pairs.push_back({Zs.size() - 1, rep.lagrangian.size() - 1,
                     rep.hamiltonian.empty() ? 0 : rep.hamiltonian.size() - 1});
  }
  const auto dev = [](std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
  };
  for (const auto& [iz, ix, iy] : pairs) {
    const auto& w = Zs[iz];
    rep.z_vs_x = std::max(rep.z_vs_x, dev(w.lagrangian().coords(), rep.lagrangian[ix]));
    if (rep.hamiltonian_applicable) {
      rep.z_vs_y = std::max(rep.z_vs_y, dev(w.hamiltonian().coords(), rep.hamiltonian[iy]));
      const auto fl = mechanics::legendre_map(L, LagrangianPoint::from_coords(rep.lagrangian[ix], n));
      rep.fl_x_vs_y = std::max(rep.fl_x_vs_y, dev(fl.coords(), rep.hamiltonian[iy]));
    }
  }
  rep.compared = pairs.size();
  return rep;
}

// ---------------------------------------------------------------------------
// Export

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const Trajectory& traj) {
  const int n = traj.n;
  out << 't';
  for (const char* name : {"q", "v", "p"})
    for (int i = 1; i <= n; ++i) out << ',' << name << i;
  out << ",s,res_holonomy,res_sdot,res_herglotz,res_constraint\n";
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    const auto& p = traj.points[k];
    out << format_double(p.t);
    for (const auto* vec : {&p.q, &p.v, &p.p})
      for (double x : *vec) out << ',' << format_double(x);
    out << ',' << format_double(p.s);
    const ResidualSample r = k < traj.residuals.size() ? traj.residuals[k] : ResidualSample{};
    for (double x : {r.holonomy, r.sdot, r.herglotz, r.constraint}) out << ',' << format_double(x);
    out << '\n';
  }
}

void write_state_csv(std::ostream& out, const std::vector<std::vector<double>>& states, int n, bool momenta) {
  out << 't';
  for (const char* name : {"q", momenta ? "p" : "v"})
    for (int i = 1; i <= n; ++i) out << ',' << name << i;
  out << ",s\n";
  for (const auto& x : states) {
    for (std::size_t i = 0; i < x.size(); ++i) out << (i ? "," : "") << format_double(x[i]);
    out << '\n';
  }
}

}  // namespace cocontact::dynamics
