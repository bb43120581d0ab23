#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "contractnet/conditions.hpp"
#include "contractnet/integral_control.hpp"
#include "contractnet/linalg.hpp"
#include "contractnet/matrix.hpp"
#include "contractnet/multipliers.hpp"

namespace contractnet {

enum class ActivationKind { Tanh, ReLU, Sigmoid, Identity, Blend };

/// Elementwise activation with its declared slope interval.
struct Activation {
  ActivationKind kind = ActivationKind::Tanh;
  double delta = 0.0;  ///< Blend only: s -> delta s + (1 - delta) tanh s

  static Activation tanh() { return {ActivationKind::Tanh, 0.0}; }
  static Activation relu() { return {ActivationKind::ReLU, 0.0}; }
  static Activation sigmoid() { return {ActivationKind::Sigmoid, 0.0}; }
  static Activation identity() { return {ActivationKind::Identity, 1.0}; }
  static Activation blend(double delta) {
    require(delta > 0.0 && delta <= 1.0, ErrorCode::InvalidArgument, "blend delta must lie in (0, 1]");
    return {ActivationKind::Blend, delta};
  }

  SlopeInterval slope() const {
    switch (kind) {
      case ActivationKind::Identity: return {1.0, 1.0};
      case ActivationKind::Blend: return {delta, 1.0};
      default: return SlopeInterval::mone();
    }
  }

  double operator()(double s) const {
    switch (kind) {
      case ActivationKind::Tanh: return std::tanh(s);
      case ActivationKind::ReLU: return s > 0.0 ? s : 0.0;
      case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-s));
      case ActivationKind::Identity: return s;
      case ActivationKind::Blend: return delta * s + (1.0 - delta) * std::tanh(s);
    }
    return s;
  }

  double derivative(double s) const {
    switch (kind) {
      case ActivationKind::Tanh: {
        const double t = std::tanh(s);
        return 1.0 - t * t;
      }
      case ActivationKind::ReLU: return s > 0.0 ? 1.0 : 0.0;
      case ActivationKind::Sigmoid: {
        const double e = 1.0 / (1.0 + std::exp(-s));
        return e * (1.0 - e);
      }
      case ActivationKind::Identity: return 1.0;
      case ActivationKind::Blend: {
        const double t = std::tanh(s);
        return delta + (1.0 - delta) * (1.0 - t * t);
      }
    }
    return 1.0;
  }

  Vector apply(const Vector& s) const {
    Vector out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = (*this)(s[i]);
    return out;
  }

  std::string name() const {
    switch (kind) {
      case ActivationKind::Tanh: return "tanh";
      case ActivationKind::ReLU: return "relu";
      case ActivationKind::Sigmoid: return "sigmoid";
      case ActivationKind::Identity: return "identity";
      case ActivationKind::Blend: return "blend";
    }
    return "unknown";
  }
};

/// Input signal for continuous time (argument t) or discrete time (argument k).
using InputSignal = std::function<Vector(double)>;

inline InputSignal constant_input(Vector u) {
  return [u = std::move(u)](double) { return u; };
}

struct SimTrace {
  Vector times;
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;
  double step = 0.0;
  std::string method;

  std::size_t size() const noexcept { return times.size(); }
};

namespace detail {

inline Vector axpy(const Vector& x, double a, const Vector& y) {
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + a * y[i];
  return out;
}

inline bool finite(const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void check_network(const Matrix& w, const Matrix& b, const Vector& x0) {
  require(w.is_square() && w.rows() >= 1, ErrorCode::DimensionMismatch, "W must be square");
  require(b.rows() == w.rows(), ErrorCode::DimensionMismatch, "B must have n rows");
  require(x0.size() == w.rows(), ErrorCode::DimensionMismatch, "x0 must have length n");
}

inline Vector input_at(const InputSignal& u, double t, std::size_t m) {
  Vector v = u ? u(t) : Vector(m, 0.0);
  require(v.size() == m, ErrorCode::DimensionMismatch, "input has the wrong length");
  return v;
}

template <class Field>
Vector rk4_step(const Field& f, double t, const Vector& x, double h) {
  const Vector k1 = f(t, x);
  const Vector k2 = f(t + 0.5 * h, axpy(x, 0.5 * h, k1));
  const Vector k3 = f(t + 0.5 * h, axpy(x, 0.5 * h, k2));
  const Vector k4 = f(t + h, axpy(x, h, k3));
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

inline std::size_t step_count(double horizon, double h) {
  require(std::isfinite(h) && h > 0.0, ErrorCode::InvalidArgument, "step size must be positive");
  require(std::isfinite(horizon) && horizon >= h, ErrorCode::InvalidArgument, "horizon must be at least one step");
  return static_cast<std::size_t>(std::llround(horizon / h));
}

}  // namespace detail

/// Fixed-step RK4 for x' = -x + Psi(W x + B u) (firing rate) or
/// x' = -x + W Psi(x) + B u (Hopfield).
inline SimTrace simulate_ct(Architecture model, const Matrix& w, const Matrix& b, const Activation& act,
                            const InputSignal& u, const Vector& x0, double horizon, double h = 1e-2) {
  detail::check_network(w, b, x0);
  const std::size_t steps = detail::step_count(horizon, h);
  const std::size_t m = b.cols();
  auto field = [&](double t, const Vector& x) {
    const Vector ut = detail::input_at(u, t, m);
    const Vector bu = b * ut;
    Vector dx(x.size());
    if (model == Architecture::FiringRate) {
      const Vector s = w * x;
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] = -x[i] + act(s[i] + bu[i]);
    } else {
      const Vector ws = w * act.apply(x);
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] = -x[i] + ws[i] + bu[i];
    }
    return dx;
  };

  SimTrace tr;
  tr.step = h;
  tr.method = "rk4";
  tr.times.reserve(steps + 1);
  tr.states.reserve(steps + 1);
  Vector x = x0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * h;
    require(detail::finite(x), ErrorCode::NonFiniteState, "state became non-finite at t = " + std::to_string(t));
    tr.times.push_back(t);
    tr.states.push_back(x);
    tr.inputs.push_back(detail::input_at(u, t, m));
    if (k < steps) x = detail::rk4_step(field, t, x, h);
  }
  return tr;
}

/// Iterates x+ = Psi(W x + B u_k) (firing rate) or x+ = W Psi(x) + B u_k
/// (Hopfield) for `steps` steps.
inline SimTrace simulate_dt(Architecture model, const Matrix& w, const Matrix& b, const Activation& act,
                            const InputSignal& u, const Vector& x0, std::size_t steps) {
  detail::check_network(w, b, x0);
  require(steps >= 1, ErrorCode::InvalidArgument, "steps must be positive");
  const std::size_t m = b.cols();
  SimTrace tr;
  tr.step = 1.0;
  tr.method = "map";
  Vector x = x0;
  for (std::size_t k = 0; k <= steps; ++k) {
    require(detail::finite(x), ErrorCode::NonFiniteState, "state became non-finite at k = " + std::to_string(k));
    const Vector uk = detail::input_at(u, static_cast<double>(k), m);
    tr.times.push_back(static_cast<double>(k));
    tr.states.push_back(x);
    tr.inputs.push_back(uk);
    if (k == steps) break;
    const Vector bu = b * uk;
    if (model == Architecture::FiringRate) {
      Vector s = w * x;
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = act(s[i] + bu[i]);
      x = std::move(s);
    } else {
      Vector s = w * act.apply(x);
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += bu[i];
      x = std::move(s);
    }
  }
  return tr;
}

struct FixedPointOptions {
  double tol = 1e-12;
  double damping = 0.5;
  std::size_t max_iterations = 100000;
};

/// Solves x = Psi(W x + B u) by Newton steps with backtracking, falling back
/// to the damped iteration x <- (1 - h) x + h Psi(W x + B u) when Newton makes
/// no progress. The damped iteration converges whenever -x + Psi(W x + B u)
/// is contracting.
inline Vector fixed_point(const Matrix& w, const Matrix& b, const Activation& act, const Vector& u,
                          const FixedPointOptions& opts = {}, std::optional<Vector> start = std::nullopt) {
  const std::size_t n = w.rows();
  Vector x = start ? *start : Vector(n, 0.0);
  detail::check_network(w, b, x);
  require(u.size() == b.cols(), ErrorCode::DimensionMismatch, "u must have length m");
  const Vector bu = b * u;

  auto pre = [&](const Vector& v) {
    Vector s = w * v;
    for (std::size_t i = 0; i < n; ++i) s[i] += bu[i];
    return s;
  };
  auto residual = [&](const Vector& v, Vector& r) {
    const Vector s = pre(v);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = v[i] - act(s[i]);
      norm = std::max(norm, std::abs(r[i]));
    }
    return norm;
  };

  Vector r(n);
  double res = residual(x, r);
  // Residual tolerance relative to the size of x, so roundoff in large states
  // does not stall the iteration.
  auto tol = [&] {
    double scale = 1.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    return opts.tol * scale;
  };
  for (std::size_t it = 0; it < opts.max_iterations && res > tol(); ++it) {
    // Newton on x - Psi(W x + B u) with J = I - diag(Psi'(s)) W, backtracking.
    const Vector s = pre(x);
    Matrix jac = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = act.derivative(s[i]);
      for (std::size_t j = 0; j < n; ++j) jac(i, j) -= d * w(i, j);
    }
    const Lu lu(jac);
    bool moved = false;
    if (lu.relative_min_pivot() > 1e-12) {
      const Matrix step = lu.solve(Matrix::column(r));
      for (double t = 1.0; t >= 1.0 / 64.0 && !moved; t *= 0.5) {
        Vector trial(n);
        for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] - t * step(i, 0);
        Vector rt(n);
        const double res_trial = residual(trial, rt);
        if (res_trial < (1.0 - 1e-4 * t) * res) {
          x = std::move(trial);
          r = std::move(rt);
          res = res_trial;
          moved = true;
        }
      }
    }
    if (moved) continue;
    // Damped iteration; it contracts in the certificate norm, not necessarily
    // in the residual, so every step is taken.
    for (std::size_t i = 0; i < n; ++i) x[i] -= opts.damping * r[i];
    res = residual(x, r);
  }
  require(res <= tol(), ErrorCode::NoConvergence,
          "fixed point iteration stalled at residual " + std::to_string(res));
  return x;
}

/// ||x - y||_P along two traces on the same grid.
inline Vector trace_distances(const SimTrace& a, const SimTrace& b, const SymMatrix& p) {
  require(a.size() == b.size() && a.size() >= 2, ErrorCode::DimensionMismatch, "traces must share a grid");
  Vector d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    require(a.times[k] == b.times[k], ErrorCode::DimensionMismatch, "traces must share a grid");
    Vector diff(a.states[k].size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.states[k][i] - b.states[k][i];
    const Vector pd = p.matrix() * diff;
    double s = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i) s += diff[i] * pd[i];
    d[k] = std::sqrt(std::max(0.0, s));
  }
  return d;
}

/// Minus the least-squares slope of log ||x(t) - y(t)||_P, fitted over the
/// leading window where the distance exceeds 1e-12.
inline double empirical_rate(const SimTrace& a, const SimTrace& b, const SymMatrix& p) {
  constexpr double kFloor = 1e-12;
  const Vector d = trace_distances(a, b, p);
  require(d[0] > kFloor, ErrorCode::DegenerateTraces, "traces start at the same point");
  std::size_t len = 0;
  while (len < d.size() && d[len] > kFloor) ++len;
  require(len >= 2, ErrorCode::DegenerateTraces, "distance collapses within one step");

  double tm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    tm += a.times[k];
    ym += std::log(d[k]);
  }
  tm /= static_cast<double>(len);
  ym /= static_cast<double>(len);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    const double dt = a.times[k] - tm;
    sxy += dt * (std::log(d[k]) - ym);
    sxx += dt * dt;
  }
  return -sxy / sxx;
}

/// d_{k+1} / d_k for two discrete-time traces; steps with d_k <= 1e-12 are skipped.
inline Vector step_ratios(const SimTrace& a, const SimTrace& b, const SymMatrix& p) {
  const Vector d = trace_distances(a, b, p);
  Vector out;
  for (std::size_t k = 0; k + 1 < d.size(); ++k)
    if (d[k] > 1e-12) out.push_back(d[k + 1] / d[k]);
  return out;
}

struct TrackingOptions {
  double eps = 0.02;
  double horizon = 0.0;  ///< 0 selects 10 / (eps c_r)
  double step = 1e-2;
  double tolerance = 1e-3;
};

struct TrackResult {
  SimTrace trace;
  double final_error = 0.0;  ///< ||r - y(T)||_inf
  bool tracked = false;
};

/// Closed loop x' = -x + Psi(W x + B u), u' = eps K (r - C x).
inline TrackResult track(const PlantModel& plant, const GainResult& gain, const Activation& act, const Vector& r,
                         const Vector& x0, const Vector& u0, const TrackingOptions& opts = {}) {
  validate(plant);
  const std::size_t n = plant.states(), m = plant.inputs(), p = plant.outputs();
  require(r.size() == p && x0.size() == n && u0.size() == m, ErrorCode::DimensionMismatch,
          "reference, x0 or u0 has the wrong length");
  require(gain.k.rows() == m && gain.k.cols() == p, ErrorCode::DimensionMismatch, "K must be m x p");
  require(opts.eps > 0.0, ErrorCode::InvalidArgument, "eps must be positive");
  const double horizon = opts.horizon > 0.0 ? opts.horizon : 10.0 / (opts.eps * gain.rate);
  const std::size_t steps = detail::step_count(horizon, opts.step);

  auto field = [&](double, const Vector& z) {
    Vector x(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n));
    Vector u(z.begin() + static_cast<std::ptrdiff_t>(n), z.end());
    const Vector s = plant.w * x;
    const Vector bu = plant.b * u;
    const Vector y = plant.c * x;
    Vector e(p);
    for (std::size_t i = 0; i < p; ++i) e[i] = r[i] - y[i];
    const Vector ke = gain.k * e;
    Vector dz(n + m);
    for (std::size_t i = 0; i < n; ++i) dz[i] = -x[i] + act(s[i] + bu[i]);
    for (std::size_t i = 0; i < m; ++i) dz[n + i] = opts.eps * ke[i];
    return dz;
  };

  TrackResult out;
  out.trace.step = opts.step;
  out.trace.method = "rk4";
  Vector z = x0;
  z.insert(z.end(), u0.begin(), u0.end());
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * opts.step;
    require(detail::finite(z), ErrorCode::NonFiniteState, "closed loop diverged at t = " + std::to_string(t));
    Vector x(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n));
    out.trace.times.push_back(t);
    out.trace.outputs.push_back(plant.c * x);
    out.trace.inputs.emplace_back(z.begin() + static_cast<std::ptrdiff_t>(n), z.end());
    out.trace.states.push_back(std::move(x));
    if (k < steps) z = detail::rk4_step(field, t, z, opts.step);
  }
  double err = 0.0;
  for (std::size_t i = 0; i < p; ++i) err = std::max(err, std::abs(r[i] - out.trace.outputs.back()[i]));
  out.final_error = err;
  out.tracked = err <= opts.tolerance;
  return out;
}

/// Reduced dynamics u' = K (r - C x*(u)); the trace states are u.
inline SimTrace simulate_reduced(const PlantModel& plant, const GainResult& gain, const Activation& act,
                                 const Vector& r, const Vector& u0, double horizon, double h = 1e-2) {
  validate(plant);
  const std::size_t steps = detail::step_count(horizon, h);
  require(u0.size() == plant.inputs() && r.size() == plant.outputs(), ErrorCode::DimensionMismatch,
          "u0 or reference has the wrong length");
  Vector warm(plant.states(), 0.0);
  auto field = [&](double, const Vector& u) {
    warm = fixed_point(plant.w, plant.b, act, u, {}, warm);
    const Vector y = plant.c * warm;
    Vector e(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) e[i] = r[i] - y[i];
    return gain.k * e;
  };
  SimTrace tr;
  tr.step = h;
  tr.method = "rk4-reduced";
  Vector u = u0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * h;
    require(detail::finite(u), ErrorCode::NonFiniteState, "reduced dynamics diverged at t = " + std::to_string(t));
    tr.times.push_back(t);
    tr.states.push_back(u);
    if (k < steps) u = detail::rk4_step(field, t, u, h);
  }
  return tr;
}

}  // namespace contractnet
