#pragma once

#include <array>
#include <cmath>
#include <string>

#include "contractnet/error.hpp"
#include "contractnet/linalg.hpp"
#include "contractnet/matrix.hpp"

namespace contractnet {

enum class Architecture { FiringRate, Hopfield };
enum class TimeDomain { Continuous, Discrete };
enum class Nonlinearity { Cone, Mone };

/// One of the eight (architecture, time, nonlinearity) contractivity cells.
struct ConditionId {
  Architecture architecture = Architecture::FiringRate;
  TimeDomain time = TimeDomain::Continuous;
  Nonlinearity nonlinearity = Nonlinearity::Mone;

  friend bool operator==(const ConditionId&, const ConditionId&) = default;

  std::string name() const {
    std::string s = architecture == Architecture::FiringRate ? "FR" : "HOP";
    s += time == TimeDomain::Continuous ? "/CT" : "/DT";
    s += nonlinearity == Nonlinearity::Cone ? "/CONE" : "/MONE";
    return s;
  }
};

inline constexpr std::array<ConditionId, 8> kAllConditions = {{
    {Architecture::FiringRate, TimeDomain::Discrete, Nonlinearity::Cone},
    {Architecture::FiringRate, TimeDomain::Discrete, Nonlinearity::Mone},
    {Architecture::FiringRate, TimeDomain::Continuous, Nonlinearity::Cone},
    {Architecture::FiringRate, TimeDomain::Continuous, Nonlinearity::Mone},
    {Architecture::Hopfield, TimeDomain::Discrete, Nonlinearity::Cone},
    {Architecture::Hopfield, TimeDomain::Discrete, Nonlinearity::Mone},
    {Architecture::Hopfield, TimeDomain::Continuous, Nonlinearity::Cone},
    {Architecture::Hopfield, TimeDomain::Continuous, Nonlinearity::Mone},
}};

/// Continuous-time rate c > 0 or discrete-time factor rho in [0, 1).
struct Rate {
  TimeDomain kind = TimeDomain::Continuous;
  double value = 0.0;

  static Rate ct(double c) { return {TimeDomain::Continuous, c}; }
  static Rate dt(double rho) { return {TimeDomain::Discrete, rho}; }

  friend bool operator==(const Rate&, const Rate&) = default;
};

inline void validate_rate(const ConditionId& cond, const Rate& rate) {
  require(rate.kind == cond.time, ErrorCode::InvalidRate, "rate kind does not match " + cond.name());
  require(std::isfinite(rate.value), ErrorCode::InvalidRate, "rate is not finite");
  if (rate.kind == TimeDomain::Continuous)
    require(rate.value > 0.0, ErrorCode::InvalidRate, "continuous-time rate must be > 0");
  else
    require(rate.value >= 0.0 && rate.value < 1.0, ErrorCode::InvalidRate,
            "discrete-time factor must lie in [0, 1), got " + std::to_string(rate.value));
}

/// A complete, independently checkable contraction witness.
struct Certificate {
  ConditionId cond;
  Matrix w;
  SymMatrix p;
  DiagMatrix q;
  Rate rate;
  double margin = 0.0;
};

namespace detail {

// Direct block assembly; linear in (P, Q) and free of positivity checks.
inline Matrix table_raw(const ConditionId& cond, const Matrix& w, const Matrix& p, const Matrix& q, double rate) {
  const std::size_t n = w.rows();
  const Matrix wt = w.transpose();
  const bool fr = cond.architecture == Architecture::FiringRate;
  const bool cone = cond.nonlinearity == Nonlinearity::Cone;
  const Matrix zero(n, n);

  if (cond.time == TimeDomain::Continuous) {
    const Matrix ct_diag = -2.0 * p + (2.0 * rate) * p;  // -2(1-c)P
    if (fr) {
      if (cone) return block2x2(ct_diag + wt * (q * w), p, p, -q);
      const Matrix off = p + wt * q;
      return block2x2(ct_diag, off, off.transpose(), -2.0 * q);
    }
    if (cone) {
      const Matrix pw = p * w;
      return block2x2(ct_diag + q, pw, pw.transpose(), -q);
    }
    const Matrix off = p * w + q;
    return block2x2(ct_diag, off, off.transpose(), -2.0 * q);
  }

  const Matrix dt_diag = -(rate * rate) * p;
  if (fr) {
    if (cone) return block2x2(dt_diag + wt * (q * w), zero, zero, p - q);
    const Matrix off = wt * q;
    return block2x2(dt_diag, off, off.transpose(), p - 2.0 * q);
  }
  const Matrix wpw = wt * (p * w);
  if (cone) return block2x2(dt_diag + q, zero, zero, wpw - q);
  return block2x2(dt_diag, q, q, wpw - 2.0 * q);
}

inline void check_shapes(const Matrix& w, const SymMatrix& p, const DiagMatrix& q) {
  require(w.is_square(), ErrorCode::DimensionMismatch, "W must be square, got " + w.shape());
  require(p.size() == w.rows() && q.size() == w.rows(), ErrorCode::DimensionMismatch,
          "W, P, Q dimensions disagree");
}

}  // namespace detail

/// The 2n x 2n contractivity matrix of cell `cond`; the condition holds when
/// it is negative semidefinite.
inline SymMatrix assemble(const ConditionId& cond, const Matrix& w, const SymMatrix& p, const DiagMatrix& q,
                          const Rate& rate) {
  detail::check_shapes(w, p, q);
  validate_rate(cond, rate);
  return SymMatrix(detail::table_raw(cond, w, p.matrix(), q.matrix(), rate.value));
}

struct CheckResult {
  bool holds = false;
  double margin = 0.0;  ///< lambda_max of the assembled matrix
};

inline CheckResult check(const ConditionId& cond, const Matrix& w, const SymMatrix& p, const DiagMatrix& q,
                         const Rate& rate, double tol) {
  const auto d = is_nsd(assemble(cond, w, p, q, rate), tol);
  return {d.verdict, d.lambda_max};
}

inline CheckResult check(const ConditionId& cond, const Matrix& w, const SymMatrix& p, const DiagMatrix& q,
                         const Rate& rate) {
  return check(cond, w, p, q, rate, default_nsd_tol(2 * w.rows()));
}

inline CheckResult check(const Certificate& cert, double tol) {
  return check(cert.cond, cert.w, cert.p, cert.q, cert.rate, tol);
}

/// Re-checks the certificate and stores the fresh margin.
inline Certificate with_margin(Certificate cert) {
  cert.margin = check(cert, default_nsd_tol(2 * cert.w.rows())).margin;
  return cert;
}

struct BestRate {
  Rate rate;
  bool at_cap = false;  ///< continuous-time search hit the c = 1 cap
};

/// Largest c in (0, 1] or smallest rho in [0, 1) for which the check holds,
/// by bisection. The LMIs are monotone in c and rho^2.
inline BestRate best_rate(const ConditionId& cond, const Matrix& w, const SymMatrix& p, const DiagMatrix& q,
                          double bisection_tol = 1e-6) {
  detail::check_shapes(w, p, q);
  const double tol = default_nsd_tol(2 * w.rows());
  auto holds = [&](double v) {
    const Rate r = cond.time == TimeDomain::Continuous ? Rate::ct(v) : Rate::dt(v);
    return check(cond, w, p, q, r, tol).holds;
  };

  if (cond.time == TimeDomain::Continuous) {
    constexpr double kCap = 1.0;
    if (holds(kCap)) return {Rate::ct(kCap), true};
    double lo = bisection_tol;
    if (!holds(lo)) fail(ErrorCode::InfeasibleAtAllRates, cond.name() + " fails at every rate in (0, 1]");
    double hi = kCap;
    while (hi - lo > bisection_tol) {
      const double mid = 0.5 * (lo + hi);
      (holds(mid) ? lo : hi) = mid;
    }
    return {Rate::ct(lo), false};
  }

  if (holds(0.0)) return {Rate::dt(0.0), false};
  double hi = 1.0 - bisection_tol;
  if (!holds(hi)) fail(ErrorCode::InfeasibleAtAllRates, cond.name() + " fails at every factor in [0, 1)");
  double lo = 0.0;
  while (hi - lo > bisection_tol) {
    const double mid = 0.5 * (lo + hi);
    (holds(mid) ? hi : lo) = mid;
  }
  return {Rate::dt(hi), false};
}

}  // namespace contractnet
