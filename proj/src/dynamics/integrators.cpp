#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "cocontact/dynamics/dynamics.hpp"

namespace cocontact::dynamics {
namespace {

using State = std::vector<double>;

void axpy(State& out, const State& x, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  out = x;
  for (const auto& [c, k] : terms) {
    if (c == 0.0) continue;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * c * (*k)[i];
  }
}

State eval(const VectorField& f, const State& x) {
  State dx = f(x);
  if (dx.size() != x.size()) throw std::invalid_argument("vector field returned the wrong dimension");
  return dx;
}

void check_finite(const State& x, double t) {
  for (double v : x)
    if (!std::isfinite(v)) throw StepFailure("state became non-finite near t = " + std::to_string(t));
}

std::vector<State> rk4(const VectorField& f, State x, const IntegratorConfig& cfg, const StepHook& hook) {
  std::vector<State> out{x};
  const double t0 = x[0];
  const double span = cfg.t_end - t0;
  if (span <= 0.0) return out;
  const auto steps = static_cast<long>(std::max(1.0, std::ceil(span / cfg.step - 1e-9)));
  out.reserve(static_cast<std::size_t>(steps) + 1);
  State k1, k2, k3, k4, tmp;
  double t = t0;
  for (long k = 1; k <= steps; ++k) {
    const double t_next = k == steps ? cfg.t_end : t0 + static_cast<double>(k) * cfg.step;
    const double h = t_next - t;
    k1 = eval(f, x);
    axpy(tmp, x, h, {{0.5, &k1}});
    k2 = eval(f, tmp);
    axpy(tmp, x, h, {{0.5, &k2}});
    k3 = eval(f, tmp);
    axpy(tmp, x, h, {{1.0, &k3}});
    k4 = eval(f, tmp);
    axpy(x, x, h, {{1.0 / 6, &k1}, {1.0 / 3, &k2}, {1.0 / 3, &k3}, {1.0 / 6, &k4}});
    x[0] = t_next;
    check_finite(x, t_next);
    if (hook) hook(x);
    out.push_back(x);
    t = t_next;
  }
  return out;
}

// Dormand-Prince 5(4).
std::vector<State> dopri5(const VectorField& f, State x, const IntegratorConfig& cfg, const StepHook& hook) {
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  std::vector<State> out{x};
  double t = x[0];
  if (cfg.t_end <= t) return out;
  double h = std::min(cfg.step, cfg.t_end - t);
  bool rejected = false;
  State k1 = eval(f, x), k2, k3, k4, k5, k6, k7, tmp, y;
  while (t < cfg.t_end) {
    const bool last = t + h >= cfg.t_end;
    if (last) h = cfg.t_end - t;
    axpy(tmp, x, h, {{a21, &k1}});
    k2 = eval(f, tmp);
    axpy(tmp, x, h, {{a31, &k1}, {a32, &k2}});
    k3 = eval(f, tmp);
    axpy(tmp, x, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
    k4 = eval(f, tmp);
    axpy(tmp, x, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
    k5 = eval(f, tmp);
    axpy(tmp, x, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    k6 = eval(f, tmp);
    axpy(y, x, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    k7 = eval(f, y);

    double err = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(x[i]), std::abs(y[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / static_cast<double>(std::max<std::size_t>(1, x.size() - 1)));
    if (!std::isfinite(err)) err = 1e10;

    if (err <= 1.0) {
      t = last ? cfg.t_end : t + h;
      y[0] = t;
      check_finite(y, t);
      x = y;
      if (hook) {
        hook(x);
        k1 = eval(f, x);
      } else {
        k1 = k7;
      }
      out.push_back(x);
      double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (rejected) factor = std::min(factor, 1.0);
      rejected = false;
      h *= factor;
    } else {
      rejected = true;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
    if (t < cfg.t_end && h < std::max(cfg.min_step, 1e-14 * std::max(1.0, std::abs(t))))
      throw StepFailure("step size underflow at t = " + std::to_string(t));
  }
  return out;
}

}  // namespace

const char* to_string(Method m) { return m == Method::kRK4 ? "rk4" : "rk45"; }

std::vector<std::vector<double>> integrate(const VectorField& field, std::vector<double> x0,
                                           const IntegratorConfig& cfg, const StepHook& hook) {
  if (x0.empty()) throw std::invalid_argument("empty initial state");
  if (!(cfg.step > 0.0) || !std::isfinite(cfg.step)) throw std::invalid_argument("step must be positive");
  if (!std::isfinite(cfg.t_end)) throw std::invalid_argument("t_end must be finite");
  check_finite(x0, x0[0]);
  return cfg.method == Method::kRK4 ? rk4(field, std::move(x0), cfg, hook) : dopri5(field, std::move(x0), cfg, hook);
}

}  // namespace cocontact::dynamics
