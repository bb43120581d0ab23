#pragma once

// Low-gain integral control u' = eps K (r - y) for the plant
//   x' = -x + Psi(W x + B u),  y = C x,  Psi slope-restricted to [delta, 1].

#include <cmath>
#include <complex>
#include <optional>

#include <Eigen/Eigenvalues>

#include "contractnet/conditions.hpp"
#include "contractnet/linalg.hpp"
#include "contractnet/matrix.hpp"
#include "contractnet/sdp.hpp"

namespace contractnet {

struct PlantModel {
  Matrix w;
  Matrix b;
  Matrix c;
  double delta = 1.0;
  std::optional<Certificate> certificate;

  std::size_t states() const noexcept { return w.rows(); }
  std::size_t inputs() const noexcept { return b.cols(); }
  std::size_t outputs() const noexcept { return c.rows(); }
  Matrix a() const { return Matrix::identity(w.rows()) - w; }
};

inline void validate(const PlantModel& plant) {
  const std::size_t n = plant.w.rows();
  require(n >= 1 && plant.w.is_square(), ErrorCode::DimensionMismatch, "W must be square");
  require(plant.b.rows() == n && plant.b.cols() >= 1, ErrorCode::DimensionMismatch, "B must be n x m");
  require(plant.c.cols() == n && plant.c.rows() >= 1, ErrorCode::DimensionMismatch, "C must be p x n");
  require(std::isfinite(plant.delta) && plant.delta > 0.0 && plant.delta <= 1.0, ErrorCode::InvalidArgument,
          "delta must lie in (0, 1]");
}

struct GainResult {
  Matrix k;
  SymMatrix p;
  DiagMatrix q;
  Matrix y;
  double rate = 0.0;  ///< reduced-dynamics rate c_r
  double margin = 0.0;
};

namespace detail {

inline Matrix gain_lmi_raw(const PlantModel& plant, const Matrix& p, const Matrix& q, const Matrix& y, double rate) {
  const double delta = plant.delta;
  const std::size_t n = plant.states();
  const Matrix a = plant.a();
  const Matrix at = a.transpose();
  const Matrix bt = plant.b.transpose();
  const Matrix z = bt * (q * ((1.0 - delta) * Matrix::identity(n) + (2.0 * delta) * a));
  const Matrix r = (2.0 * delta) * (at * (q * a)) + (1.0 - delta) * (q * a + at * q);
  const Matrix top_left = (2.0 * rate) * p - (2.0 * delta) * (bt * (q * plant.b));
  const Matrix off = z - y * plant.c;
  return block2x2(top_left, off, off.transpose(), -1.0 * r);
}

}  // namespace detail

/// [[2 c_r P - 2 delta B^T Q B, Z - Y C], [(Z - Y C)^T, -R]] with A = I - W,
/// Z = B^T Q ((1 - delta) I + 2 delta A), R = 2 delta A^T Q A + (1 - delta)(Q A + A^T Q).
inline SymMatrix assemble_gain_lmi(const PlantModel& plant, const SymMatrix& p, const DiagMatrix& q, const Matrix& y,
                                   double rate) {
  validate(plant);
  require(p.size() == plant.inputs() && q.size() == plant.states() && y.rows() == plant.inputs() &&
              y.cols() == plant.outputs(),
          ErrorCode::DimensionMismatch, "P, Q, Y do not match the plant");
  return SymMatrix(detail::gain_lmi_raw(plant, p.matrix(), q.matrix(), y, rate));
}

inline FeasibilityProblem gain_problem(const PlantModel& plant, double rate) {
  validate(plant);
  require(std::isfinite(rate) && rate > 0.0, ErrorCode::InvalidRate, "c_r must be positive");
  FeasibilityProblem prob;
  prob.add_symmetric("P", plant.inputs());
  prob.add_diagonal("Q", plant.states());
  prob.add_free("Y", plant.inputs(), plant.outputs());
  prob.set_map([&](const FeasibilityProblem::Values& v) { return detail::gain_lmi_raw(plant, v[0], v[1], v[2], rate); });
  return prob;
}

/// Solves for (P, Q, Y) jointly; empty when no strictly feasible point was found.
inline std::optional<GainResult> try_synthesize_gain(const PlantModel& plant, double rate,
                                                     const SolverOptions& opts = {}) {
  const FeasibilityResult res = min_lambda_max(gain_problem(plant, rate), opts);
  if (res.status != FeasibilityStatus::Feasible) return std::nullopt;

  GainResult out;
  out.p = SymMatrix(res.values[0]);
  require(lambda_min(out.p) > kSpdFloor * std::max(1.0, out.p.max_abs()), ErrorCode::SingularP, "P is singular");
  Vector qd(plant.states());
  for (std::size_t i = 0; i < qd.size(); ++i) qd[i] = res.values[1](i, i);
  out.q = DiagMatrix(qd);
  out.y = res.values[2];

  // (s P, s Y) keeps K = P^{-1} Y only up to 1/s; the LMI sees s P through
  // 2 c_r s P alone, so grow s while half the margin survives. This gives the
  // smallest gain along the ray and avoids needlessly stiff reduced dynamics.
  const double target = 0.5 * lambda_max(assemble_gain_lmi(plant, out.p, out.q, out.y, rate));
  auto holds = [&](double scale) {
    return lambda_max(SymMatrix(detail::gain_lmi_raw(plant, scale * out.p.matrix(), out.q.matrix(), out.y, rate))) <=
           target;
  };
  double lo = 1.0, hi = 2.0;
  while (hi < 1e12 && holds(hi)) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 60 && hi - lo > 1e-6 * lo; ++i) {
    const double mid = 0.5 * (lo + hi);
    (holds(mid) ? lo : hi) = mid;
  }
  out.p = SymMatrix(lo * out.p.matrix());
  out.k = solve(out.p.matrix(), out.y);
  out.rate = rate;
  out.margin = lambda_max(assemble_gain_lmi(plant, out.p, out.q, out.y, rate));
  require(out.margin <= opts.strict_tol, ErrorCode::ReCheckFailed, "gain LMI failed its re-check");
  return out;
}

inline GainResult synthesize_gain(const PlantModel& plant, double rate, const SolverOptions& opts = {}) {
  auto res = try_synthesize_gain(plant, rate, opts);
  require(res.has_value(), ErrorCode::NotFound, "no gain found at c_r = " + std::to_string(rate));
  return *std::move(res);
}

/// Largest c_r (relative tolerance rel_tol) for which a gain is found, by
/// doubling then bisection. Throws NotFound if none exists down to min_rate.
/// The LMI depends on (c_r, P) only through c_r P, so when any rate is
/// feasible the bound is set by the P >= eps I floor under the trace
/// normalization; it measures solver headroom, not a plant property.
inline double max_reduced_rate(const PlantModel& plant, const SolverOptions& opts = {}, double rel_tol = 1e-3,
                               double min_rate = 1e-6, double max_rate = 1e6) {
  auto found = [&](double r) { return try_synthesize_gain(plant, r, opts).has_value(); };
  double lo = 1e-2;
  double hi = 0.0;
  if (found(lo)) {
    hi = 2.0 * lo;
    while (found(hi)) {
      lo = hi;
      hi *= 2.0;
      if (hi > max_rate) return lo;
    }
  } else {
    hi = lo;
    lo *= 0.5;
    while (!found(lo)) {
      hi = lo;
      lo *= 0.5;
      require(lo >= min_rate, ErrorCode::NotFound, "no gain found at any reduced rate");
    }
  }
  while (hi - lo > rel_tol * lo) {
    const double mid = 0.5 * (lo + hi);
    (found(mid) ? lo : hi) = mid;
  }
  return lo;
}

struct DcGainCheck {
  bool lmi_holds = false;   ///< P G + G^T P > 2 c_r P for G = K C A^{-1} B
  bool hurwitz = false;     ///< every eigenvalue of -G has negative real part
  double witness = 0.0;     ///< lambda_min(P G + G^T P - 2 c_r P)
  double max_real = 0.0;    ///< largest real part among eigenvalues of -G

  bool passed() const noexcept { return lmi_holds && hurwitz; }
};

inline DcGainCheck dc_gain_check(const PlantModel& plant, const GainResult& gain) {
  validate(plant);
  Matrix a_inv_b;
  try {
    a_inv_b = solve(plant.a(), plant.b);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularMatrix) throw;
    fail(ErrorCode::SingularA, "I - W is singular");
  }
  const Matrix g = gain.k * (plant.c * a_inv_b);
  const Matrix pg = gain.p.matrix() * g;

  DcGainCheck out;
  out.witness = lambda_min(SymMatrix(pg + pg.transpose() - (2.0 * gain.rate) * gain.p.matrix()));
  out.lmi_holds = out.witness > 0.0;

  Eigen::MatrixXd neg(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) neg(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -g(i, j);
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(neg, false).eigenvalues();
  out.max_real = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) out.max_real = std::max(out.max_real, ev[i].real());
  out.hurwitz = out.max_real < 0.0;
  return out;
}

}  // namespace contractnet
