#pragma once

#include <optional>

#include "contractnet/conditions.hpp"
#include "contractnet/multipliers.hpp"
#include "contractnet/sdp.hpp"

namespace contractnet {

/// Lur'e form of a network cell: firing-rate uses B = I, C = W; Hopfield uses
/// B = W, C = I. A is -I in continuous time and 0 in discrete time.
inline LureSystem lure_form(const ConditionId& cond, const Matrix& w) {
  require(w.is_square(), ErrorCode::DimensionMismatch, "W must be square");
  const std::size_t n = w.rows();
  Matrix a = cond.time == TimeDomain::Continuous ? -Matrix::identity(n) : Matrix(n, n);
  if (cond.architecture == Architecture::FiringRate) return {std::move(a), Matrix::identity(n), w};
  return {std::move(a), w, Matrix::identity(n)};
}

namespace detail {

inline Matrix multiplier_raw(Nonlinearity nl, const Matrix& q) {
  const std::size_t n = q.rows();
  if (nl == Nonlinearity::Cone) return block_diag(q, -q);
  return block2x2(Matrix(n, n), q, q, -2.0 * q);
}

}  // namespace detail

/// Lur'e specialization of a cell (multiplier weight lambda = 1). Agrees
/// with `assemble` entry for entry.
inline SymMatrix assemble_via_lure(const ConditionId& cond, const Matrix& w, const SymMatrix& p,
                                   const DiagMatrix& q, const Rate& rate) {
  validate_rate(cond, rate);
  const LureSystem sys = lure_form(cond, w);
  const MultiplierMatrix m = cond.nonlinearity == Nonlinearity::Cone ? cone_multiplier(q) : mone_multiplier(q);
  if (cond.time == TimeDomain::Continuous) return assemble_lure_ct(sys, p, m, rate.value, 1.0);
  return assemble_lure_dt(sys, p, m, rate.value, 1.0);
}

/// Decision variables (P symmetric, Q diagonal) with trace(P) + trace(Q) = 2n;
/// the affine map is built from the Lur'e specialization.
inline FeasibilityProblem certificate_problem(const ConditionId& cond, const Matrix& w, const Rate& rate) {
  validate_rate(cond, rate);
  const std::size_t n = w.rows();
  const LureSystem sys = lure_form(cond, w);
  FeasibilityProblem prob;
  prob.add_symmetric("P", n);
  prob.add_diagonal("Q", n);
  prob.set_map([&](const FeasibilityProblem::Values& v) {
    const Matrix m = detail::multiplier_raw(cond.nonlinearity, v[1]);
    if (cond.time == TimeDomain::Continuous) return detail::lure_ct_raw(sys, v[0], m, rate.value, 1.0);
    return detail::lure_dt_raw(sys, v[0], m, rate.value, 1.0);
  });
  return prob;
}

struct CertificateSearch {
  FeasibilityResult solver;
  FeasibilityStatus status = FeasibilityStatus::NotFound;
  std::optional<Certificate> certificate;  ///< present for Feasible and Marginal
};

/// Searches (P, Q) for the cell; any returned certificate has been
/// re-assembled and re-checked through the direct block formulas.
inline CertificateSearch find_certificate(const ConditionId& cond, const Matrix& w, const Rate& rate,
                                          const SolverOptions& opts = {}) {
  CertificateSearch out;
  out.solver = min_lambda_max(certificate_problem(cond, w, rate), opts);
  out.status = out.solver.status;
  if (out.status == FeasibilityStatus::NotFound) return out;

  const Matrix& pm = out.solver.values[0];
  const Matrix& qm = out.solver.values[1];
  Vector qd(qm.rows());
  for (std::size_t i = 0; i < qm.rows(); ++i) qd[i] = qm(i, i);
  Certificate cert{cond, w, SymMatrix(pm), DiagMatrix(qd), rate, 0.0};
  cert.margin = check(cert, opts.strict_tol).margin;
  if (cert.margin > opts.strict_tol) {
    out.status = FeasibilityStatus::NotFound;
    return out;
  }
  if (cert.margin > -opts.strict_tol) out.status = FeasibilityStatus::Marginal;
  out.certificate = std::move(cert);
  return out;
}

}  // namespace contractnet
