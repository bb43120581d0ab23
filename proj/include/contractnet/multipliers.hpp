#pragma once

#include <string>

#include "contractnet/error.hpp"
#include "contractnet/matrix.hpp"

namespace contractnet {

/// Elementwise slope restriction [k1, k2].
struct SlopeInterval {
  double k1 = 0.0;
  double k2 = 1.0;

  SlopeInterval() = default;
  SlopeInterval(double lo, double hi) : k1(lo), k2(hi) {
    require(lo <= hi, ErrorCode::InvalidArgument, "slope interval requires k1 <= k2");
  }

  static SlopeInterval cone() { return {-1.0, 1.0}; }
  static SlopeInterval mone() { return {0.0, 1.0}; }

  bool contains(const SlopeInterval& inner) const { return k1 <= inner.k1 && inner.k2 <= k2; }
};

enum class MultiplierKind { GeneralSlope, Cone, Mone };

/// Incremental multiplier for an n-dimensional elementwise map; M is 2n x 2n
/// and acts on stacked increments [dx; dPsi].
struct MultiplierMatrix {
  std::size_t n = 0;
  Matrix m;
  MultiplierKind kind = MultiplierKind::GeneralSlope;
};

/// [[-2 k1 k2 Q, (k1+k2) Q], [(k1+k2) Q, -2 Q]]
inline MultiplierMatrix imm_slope(const DiagMatrix& q, const SlopeInterval& s) {
  const std::size_t n = q.size();
  const Matrix qm = q.matrix();
  return {n,
          block2x2((-2.0 * s.k1 * s.k2) * qm, (s.k1 + s.k2) * qm, (s.k1 + s.k2) * qm, -2.0 * qm),
          MultiplierKind::GeneralSlope};
}

/// [[Q, 0], [0, -Q]] for nonlinearities slope-restricted in [-1, 1].
inline MultiplierMatrix cone_multiplier(const DiagMatrix& q) {
  const Matrix qm = q.matrix();
  return {q.size(), block_diag(qm, -qm), MultiplierKind::Cone};
}

/// [[0, Q], [Q, -2Q]] for nonlinearities slope-restricted in [0, 1].
inline MultiplierMatrix mone_multiplier(const DiagMatrix& q) {
  const std::size_t n = q.size();
  const Matrix qm = q.matrix();
  return {n, block2x2(Matrix(n, n), qm, qm, -2.0 * qm), MultiplierKind::Mone};
}

/// x' = A x + B Psi(C x) (continuous) or x+ = A x + B Psi(C x) (discrete).
struct LureSystem {
  Matrix a;  // n x n
  Matrix b;  // n x m
  Matrix c;  // m x n

  LureSystem(Matrix a_, Matrix b_, Matrix c_) : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)) {
    require(a.is_square() && b.rows() == a.rows() && c.cols() == a.rows() && c.rows() == b.cols(),
            ErrorCode::DimensionMismatch,
            "Lur'e dimensions A " + a.shape() + ", B " + b.shape() + ", C " + c.shape());
  }

  std::size_t states() const { return a.rows(); }
  std::size_t channels() const { return b.cols(); }
};

namespace detail {

// Gamma^T M Gamma with Gamma = blockdiag(C, I_m).
inline Matrix lure_multiplier_term(const Matrix& c, const Matrix& m) {
  const Matrix gamma = block_diag(c, Matrix::identity(c.rows()));
  return gamma.transpose() * (m * gamma);
}

inline void check_lure_args(const LureSystem& sys, const Matrix& p, const Matrix& m) {
  require(p.rows() == sys.states() && p.cols() == sys.states(), ErrorCode::DimensionMismatch,
          "P must be " + std::to_string(sys.states()) + "x" + std::to_string(sys.states()));
  require(m.rows() == 2 * sys.channels() && m.cols() == 2 * sys.channels(), ErrorCode::DimensionMismatch,
          "multiplier must be 2m x 2m");
}

// Raw assemblies without positivity preconditions; linear in (P, M) so the
// feasibility builders can probe them with basis elements.
inline Matrix lure_ct_raw(const LureSystem& sys, const Matrix& p, const Matrix& m, double rate, double lambda) {
  check_lure_args(sys, p, m);
  const Matrix at = sys.a.transpose();
  const Matrix pb = p * sys.b;
  Matrix top_left = p * sys.a + at * p + (2.0 * rate) * p;
  Matrix base = block2x2(top_left, pb, pb.transpose(), Matrix(sys.channels(), sys.channels()));
  return base + lambda * lure_multiplier_term(sys.c, m);
}

inline Matrix lure_dt_raw(const LureSystem& sys, const Matrix& p, const Matrix& m, double factor, double lambda) {
  check_lure_args(sys, p, m);
  const Matrix at = sys.a.transpose();
  const Matrix bt = sys.b.transpose();
  const Matrix atpb = at * (p * sys.b);
  Matrix top_left = at * (p * sys.a) - (factor * factor) * p;
  Matrix base = block2x2(top_left, atpb, atpb.transpose(), bt * (p * sys.b));
  return base + lambda * lure_multiplier_term(sys.c, m);
}

}  // namespace detail

/// [[PA + A^T P + 2cP, PB], [B^T P, 0]] + lambda Gamma^T M Gamma.
inline SymMatrix assemble_lure_ct(const LureSystem& sys, const SymMatrix& p, const MultiplierMatrix& m,
                                  double rate, double lambda) {
  require(rate > 0.0, ErrorCode::InvalidRate, "continuous-time rate must be positive");
  require(lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be non-negative");
  return SymMatrix(detail::lure_ct_raw(sys, p.matrix(), m.m, rate, lambda));
}

/// [[A^T P A - rho^2 P, A^T P B], [B^T P A, B^T P B]] + lambda Gamma^T M Gamma.
inline SymMatrix assemble_lure_dt(const LureSystem& sys, const SymMatrix& p, const MultiplierMatrix& m,
                                  double factor, double lambda) {
  require(factor >= 0.0 && factor < 1.0, ErrorCode::InvalidRate, "discrete factor must lie in [0, 1)");
  require(lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be non-negative");
  return SymMatrix(detail::lure_dt_raw(sys, p.matrix(), m.m, factor, lambda));
}

}  // namespace contractnet
