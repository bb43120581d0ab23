#pragma once

// Direct parameterization of the weights admitting an FR/CT/MONE certificate:
//   W = 2 sqrt(1 - c) diag(e^d) S G - diag(e^{2d}) G^2,   G = V^T V,
// with P = G^2 and Q = diag(e^{-2d}).

#include <cmath>
#include <limits>

#include "contractnet/conditions.hpp"
#include "contractnet/linalg.hpp"
#include "contractnet/matrix.hpp"

namespace contractnet {

/// S = X (I + X^T X)^{-1/2}, so that S^T S <= I.
inline Matrix squash(const Matrix& x) {
  require(x.all_finite(), ErrorCode::NumericalFailure, "X is not finite");
  const std::size_t n = x.cols();
  const SymMatrix gram(Matrix::identity(n) + x.transpose() * x);
  return x * spd_inv_sqrt(gram).matrix();
}

/// Y^T Y + eps I, a full-rank stand-in for the Gram matrix V^T V.
inline SymMatrix psd_shift(const Matrix& y, double eps) {
  require(eps > 0.0 && std::isfinite(eps), ErrorCode::InvalidArgument, "eps must be positive");
  const std::size_t n = y.cols();
  return SymMatrix(y.transpose() * y + eps * Matrix::identity(n));
}

/// Default eps for psd_shift: 1e-4 of the average diagonal of Y^T Y, with a
/// floor for Y = 0.
inline double default_shift(const Matrix& y) {
  const double tr = (y.transpose() * y).trace();
  return 1e-4 * std::max(tr / static_cast<double>(std::max<std::size_t>(1, y.cols())), 1.0);
}

struct ParamSeed {
  Vector d;
  Matrix s;
  Matrix v;
  double c = 0.0;

  /// Seed from unconstrained variables: S = squash(X), V^T V = psd_shift(Y, eps).
  static ParamSeed from_free(Vector d, const Matrix& x, const Matrix& y, double eps, double c) {
    return {std::move(d), squash(x), spd_sqrt(psd_shift(y, eps)).matrix(), c};
  }

  std::size_t size() const noexcept { return d.size(); }
};

inline void validate(const ParamSeed& seed) {
  const std::size_t n = seed.size();
  require(n >= 1, ErrorCode::DimensionMismatch, "empty seed");
  require(seed.s.rows() == n && seed.s.cols() == n && seed.v.rows() == n && seed.v.cols() == n,
          ErrorCode::DimensionMismatch, "S and V must be n x n");
  for (double x : seed.d) require(std::isfinite(x), ErrorCode::InvalidArgument, "d is not finite");
  require(seed.s.all_finite() && seed.v.all_finite(), ErrorCode::InvalidArgument, "S or V is not finite");
  require(std::isfinite(seed.c) && seed.c >= 0.0 && seed.c <= 1.0, ErrorCode::InvalidRate, "c must lie in [0, 1]");
  require(spectral_norm(seed.s) <= 1.0 + 1e-9, ErrorCode::SlopeBoundViolated, "||S|| exceeds 1");
}

struct Generated {
  Matrix w;
  SymMatrix p;
  DiagMatrix q;
  Rate rate;
  bool boundary = false;  ///< the certificate is not strict (||S|| = 1 or c = 1)

  Certificate certificate() const {
    return {{Architecture::FiringRate, TimeDomain::Continuous, Nonlinearity::Mone}, w, p, q, rate, 0.0};
  }
};

inline Generated generate(const ParamSeed& seed) {
  validate(seed);
  const std::size_t n = seed.size();
  const Matrix g = seed.v.transpose() * seed.v;
  const double sigma_min = std::sqrt(std::max(0.0, lambda_min(SymMatrix(g))));
  require(sigma_min >= 1e-8, ErrorCode::RankDeficient, "V is rank deficient");

  Vector e(n), e2(n), qd(n);
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = std::exp(seed.d[i]);
    e2[i] = std::exp(2.0 * seed.d[i]);
    qd[i] = std::exp(-2.0 * seed.d[i]);
  }
  const Matrix g2 = g * g;
  const Matrix w = (2.0 * std::sqrt(1.0 - seed.c)) * (Matrix::diagonal(e) * (seed.s * g)) - Matrix::diagonal(e2) * g2;
  const bool boundary = seed.c == 1.0 || spectral_norm(seed.s) >= 1.0 - 1e-9;
  // c = 0 is outside the continuous-time rate domain; report it as the
  // smallest representable positive rate.
  const double c = seed.c > 0.0 ? seed.c : std::numeric_limits<double>::min();
  return {w, SymMatrix(g2), DiagMatrix(qd), Rate::ct(c), boundary};
}

/// Recovers a seed from a strictly feasible FR/CT/MONE certificate with c < 1:
/// d = -log(diag Q) / 2, V = (P^{1/2})^{1/2}, S = Q^{-1/2} (P + Q W) P^{-1/2} / (2 sqrt(1 - c)).
inline ParamSeed invert(const Certificate& cert) {
  const ConditionId cell{Architecture::FiringRate, TimeDomain::Continuous, Nonlinearity::Mone};
  require(cert.cond == cell, ErrorCode::InvalidArgument, "expected an FR/CT/MONE certificate");
  const double c = cert.rate.value;
  require(c < 1.0, ErrorCode::DegenerateRate, "invert needs c < 1");
  const std::size_t n = cert.w.rows();

  Vector d(n), q_inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double qi = cert.q.diag()[i];
    d[i] = -0.5 * std::log(qi);
    q_inv_sqrt[i] = 1.0 / std::sqrt(qi);
  }
  const SymMatrix g = spd_sqrt(cert.p);
  const SymMatrix v = spd_sqrt(g);
  const Matrix lhs = cert.p.matrix() + cert.q.matrix() * cert.w;
  const Matrix s = (1.0 / (2.0 * std::sqrt(1.0 - c))) * (Matrix::diagonal(q_inv_sqrt) * (lhs * spd_inverse(g).matrix()));
  const double norm = spectral_norm(s);
  require(norm <= 1.0 + 1e-6, ErrorCode::SlopeBoundViolated,
          "recovered ||S|| = " + std::to_string(norm) + " exceeds 1");
  Matrix s_clamped = s;
  if (norm > 1.0) s_clamped = (1.0 / norm) * s;
  return {std::move(d), std::move(s_clamped), v.matrix(), c};
}

}  // namespace contractnet
