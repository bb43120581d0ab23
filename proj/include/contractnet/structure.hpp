#pragma once

// Transforms between contractivity cells and a few constructive
// certificates / refutations.

#include <cmath>
#include <optional>

#include "contractnet/conditions.hpp"
#include "contractnet/feasibility.hpp"
#include "contractnet/linalg.hpp"
#include "contractnet/sdp.hpp"

namespace contractnet {

namespace detail {

inline double recheck_tol(const Certificate& cert) {
  const SymMatrix m = assemble(cert.cond, cert.w, cert.p, cert.q, cert.rate);
  return default_nsd_tol(m.size()) * std::max(1.0, m.max_abs());
}

inline void require_valid(const Certificate& cert) {
  require(check(cert, recheck_tol(cert)).holds, ErrorCode::InvalidArgument,
          "input certificate does not satisfy " + cert.cond.name());
}

inline Certificate rechecked(Certificate cert) {
  const CheckResult r = check(cert, recheck_tol(cert));
  require(r.holds, ErrorCode::ReCheckFailed,
          cert.cond.name() + " re-check failed, lambda_max = " + std::to_string(r.margin));
  cert.margin = r.margin;
  return cert;
}

}  // namespace detail

/// The CONE cell is contained in the MONE cell with the same (W, P, Q, rate).
inline Certificate cone_to_mone(const Certificate& cert) {
  require(cert.cond.nonlinearity == Nonlinearity::Cone, ErrorCode::InvalidArgument, "expected a CONE certificate");
  detail::require_valid(cert);
  Certificate out = cert;
  out.cond.nonlinearity = Nonlinearity::Mone;
  return detail::rechecked(std::move(out));
}

/// A discrete-time certificate at factor rho certifies the continuous-time
/// cell at c = (1 - rho^2) / 2 with the same (W, P, Q).
inline Certificate disc_to_cts(const Certificate& cert) {
  require(cert.cond.time == TimeDomain::Discrete, ErrorCode::InvalidArgument, "expected a discrete-time certificate");
  detail::require_valid(cert);
  const double rho = cert.rate.value;
  Certificate out = cert;
  out.cond.time = TimeDomain::Continuous;
  out.rate = Rate::ct(0.5 * (1.0 - rho * rho));
  return detail::rechecked(std::move(out));
}

enum class DualDirection { FRtoHop, HopToFR };

/// Variable transform taking a certificate to the other architecture:
/// W -> W^T, P -> p_scale * P^{-1}, Q -> Q^{-1}. Discrete-time cells use
/// p_scale = rho^{-2}, which makes the map its own inverse.
struct DualityMap {
  DualDirection direction = DualDirection::FRtoHop;
  bool transpose_w = true;
  bool invert_p = true;
  bool invert_q = true;
  double p_scale = 1.0;
};

inline DualityMap duality_map(const Certificate& cert) {
  DualityMap m;
  m.direction =
      cert.cond.architecture == Architecture::FiringRate ? DualDirection::FRtoHop : DualDirection::HopToFR;
  if (cert.cond.time == TimeDomain::Discrete) {
    const double rho = cert.rate.value;
    require(rho > 0.0, ErrorCode::DegenerateRate, "discrete-time duality needs rho > 0");
    m.p_scale = 1.0 / (rho * rho);
  }
  return m;
}

inline Certificate apply_duality(const DualityMap& map, const Certificate& cert) {
  const Architecture expected =
      map.direction == DualDirection::FRtoHop ? Architecture::FiringRate : Architecture::Hopfield;
  require(cert.cond.architecture == expected, ErrorCode::InvalidArgument, "duality direction does not match");
  const auto chol = cholesky(cert.p.matrix());
  require(chol.has_value() && lambda_min(cert.p) > kSpdFloor * std::max(1.0, cert.p.max_abs()),
          ErrorCode::SingularP, "P is not invertible");

  Certificate out = cert;
  out.cond.architecture =
      cert.cond.architecture == Architecture::FiringRate ? Architecture::Hopfield : Architecture::FiringRate;
  if (map.transpose_w) out.w = cert.w.transpose();
  if (map.invert_p) out.p = SymMatrix(map.p_scale * cholesky_inverse(*chol));
  if (map.invert_q) out.q = cert.q.inverse();
  return out;
}

/// Maps a certificate to the dual architecture with the same rate.
inline Certificate dualize(const Certificate& cert) {
  detail::require_valid(cert);
  return detail::rechecked(apply_duality(duality_map(cert), cert));
}

struct SchurStability {
  bool stable = false;
  FeasibilityStatus status = FeasibilityStatus::NotFound;
  double margin = 0.0;                    ///< lambda_max(W^T Q W - rho^2 Q) at the returned Q
  std::optional<DiagMatrix> q;            ///< witness, trace(Q) = n
  std::optional<Certificate> firing_rate;  ///< FR/DT/CONE with P = Q
  std::optional<Certificate> hopfield;     ///< HOP/DT/CONE with P = Q / rho^2 (needs rho > 0)
};

/// Searches a diagonal Q > 0 with W^T Q W <= rho^2 Q. Such a Q exists exactly
/// when the discrete-time CONE cells hold at factor rho.
inline SchurStability schur_diag_stability(const Matrix& w, double rho, const SolverOptions& opts = {}) {
  require(w.is_square() && w.rows() >= 1, ErrorCode::DimensionMismatch, "W must be square");
  require(std::isfinite(rho) && rho >= 0.0 && rho < 1.0, ErrorCode::InvalidRate, "rho must lie in [0, 1)");
  const std::size_t n = w.rows();
  FeasibilityProblem prob;
  prob.add_diagonal("Q", n);
  prob.set_normalization(static_cast<double>(n));
  const Matrix wt = w.transpose();
  prob.set_map([&](const FeasibilityProblem::Values& v) { return wt * (v[0] * w) - (rho * rho) * v[0]; });
  const FeasibilityResult res = min_lambda_max(prob, opts);

  SchurStability out;
  out.status = res.status;
  out.margin = res.margin;
  if (res.status == FeasibilityStatus::NotFound) return out;

  Vector qd(n);
  for (std::size_t i = 0; i < n; ++i) qd[i] = res.values[0](i, i);
  const DiagMatrix q(qd);
  const double tol = std::max(opts.strict_tol, default_nsd_tol(2 * n));

  Certificate fr{{Architecture::FiringRate, TimeDomain::Discrete, Nonlinearity::Cone}, w, SymMatrix(q.matrix()), q,
                 Rate::dt(rho), 0.0};
  const CheckResult fr_check = check(fr, tol);
  require(fr_check.holds, ErrorCode::ReCheckFailed, "FR/DT/CONE construction failed its re-check");
  fr.margin = fr_check.margin;
  out.firing_rate = std::move(fr);

  if (rho > 0.0) {
    Certificate hop{{Architecture::Hopfield, TimeDomain::Discrete, Nonlinearity::Cone}, w,
                    SymMatrix((1.0 / (rho * rho)) * q.matrix()), q, Rate::dt(rho), 0.0};
    const CheckResult hop_check = check(hop, tol * std::max(1.0, 1.0 / (rho * rho)));
    require(hop_check.holds, ErrorCode::ReCheckFailed, "HOP/DT/CONE construction failed its re-check");
    hop.margin = hop_check.margin;
    out.hopfield = std::move(hop);
  }
  out.q = q;
  out.stable = true;
  return out;
}

/// For an FR/CT/MONE certificate: W^T Q + Q W - 2Q + 2cP <= 0 (the
/// multiplier-weighted sum of the LMI blocks) and hence W - I is strictly
/// Lyapunov diagonally stable with weight Q.
inline bool lds_necessary(const Certificate& cert) {
  const ConditionId fr_ct_mone{Architecture::FiringRate, TimeDomain::Continuous, Nonlinearity::Mone};
  require(cert.cond == fr_ct_mone, ErrorCode::InvalidArgument, "expected an FR/CT/MONE certificate");
  const Matrix& q = cert.q.matrix();
  const Matrix lyap = cert.w.transpose() * q + q * cert.w - 2.0 * q;
  const SymMatrix weighted(lyap + (2.0 * cert.rate.value) * cert.p.matrix());
  const double tol = default_nsd_tol(cert.w.rows()) * std::max(1.0, weighted.max_abs());
  if (lambda_max(weighted) > tol) return false;
  return lambda_max(SymMatrix(lyap)) <= -1e-10;
}

struct SkewVertices {
  bool v1_pd = false;
  bool v2_pd = false;
  SymMatrix m1;
  SymMatrix m2;
};

/// M(D) = 2P - P D W - W^T D P for W = [[0, 4], [-4, 0]] at D = diag(1, 0)
/// and D = diag(0, 1). Both must be positive definite for W to admit a
/// certificate in the norm of P; they never are simultaneously.
inline SkewVertices skew_counterexample_vertices(const SymMatrix& p) {
  require(p.size() == 2, ErrorCode::DimensionMismatch, "P must be 2x2");
  require(cholesky(p.matrix()).has_value(), ErrorCode::NotPositiveDefinite, "P must be positive definite");
  const Matrix w{{0.0, 4.0}, {-4.0, 0.0}};
  auto vertex = [&](double d1, double d2) {
    const Matrix d{{d1, 0.0}, {0.0, d2}};
    const Matrix pdw = p.matrix() * (d * w);
    return SymMatrix(2.0 * p.matrix() - pdw - pdw.transpose());
  };
  SkewVertices out{false, false, vertex(1.0, 0.0), vertex(0.0, 1.0)};
  out.v1_pd = lambda_min(out.m1) > 0.0;
  out.v2_pd = lambda_min(out.m2) > 0.0;
  return out;
}

/// Largest eigenvalue of a symmetric matrix.
inline double spectral_abscissa(const SymMatrix& w) { return lambda_max(w); }

/// FR/CT/MONE certificate for symmetric W at the best rate min(1, 1 - alpha).
/// alpha < 0: P = -W, Q = I, c = 1. 0 < alpha < 1: P solves
/// W = P^{1/2} - P / (4 alpha), Q = 4 alpha I, c = 1 - alpha.
inline Certificate symmetric_construction(const SymMatrix& w) {
  const std::size_t n = w.size();
  const SymEig e = sym_eig(w);
  const double alpha = e.values.back();
  const ConditionId cell{Architecture::FiringRate, TimeDomain::Continuous, Nonlinearity::Mone};
  constexpr double kZero = 1e-12;

  if (alpha < -kZero) {
    Certificate cert{cell, w.matrix(), SymMatrix(-w.matrix()), DiagMatrix::identity(n), Rate::ct(1.0), 0.0};
    return with_margin(std::move(cert));
  }
  require(alpha > kZero && alpha < 1.0, ErrorCode::AlphaOutOfRange,
          "largest eigenvalue " + std::to_string(alpha) + " is outside (-inf, 0) U (0, 1)");

  // Eigenvalues s of P^{1/2} solve s^2 / (4 alpha) - s + lambda = 0. The
  // larger root is used for every lambda: it is >= 2 alpha, so P is well
  // conditioned and P^{1/2} is the principal root.
  SymEig root{Vector(n), e.vectors};
  for (std::size_t i = 0; i < n; ++i) {
    double disc = 1.0 - e.values[i] / alpha;
    require(disc > -1e-12, ErrorCode::NoRealRoot, "quadratic for P has no real root");
    disc = std::max(0.0, disc);
    const double s = 2.0 * alpha * (1.0 + std::sqrt(disc));
    require(std::abs(s - s * s / (4.0 * alpha) - e.values[i]) <= 1e-9 * std::max(1.0, std::abs(e.values[i])),
            ErrorCode::NoRealRoot, "root failed substitute-back");
    root.values[i] = s * s;
  }
  const SymMatrix p(spectral_apply(root, [](double x) { return x; }));
  Certificate cert{cell, w.matrix(), p, DiagMatrix::constant(n, 4.0 * alpha), Rate::ct(1.0 - alpha), 0.0};
  return with_margin(std::move(cert));
}

}  // namespace contractnet
