#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "contractnet/error.hpp"
#include "contractnet/matrix.hpp"

namespace contractnet {

struct SymEig {
  Vector values;    ///< ascending
  Matrix vectors;   ///< orthonormal eigenvectors stored as columns: M = V diag(values) V^T
};

namespace detail {

// Householder reduction to tridiagonal form (EISPACK tred2). On return `v`
// holds the accumulated orthogonal transform, `d` the diagonal and `e` the
// sub-diagonal (e[0] unused).
inline void tridiagonalize(Matrix& v, Vector& d, Vector& e) {
  const std::size_t n = v.rows();
  for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit QL iteration on the tridiagonal form (EISPACK tql2).
inline void tridiagonal_ql(Matrix& v, Vector& d, Vector& e, std::size_t sweep_cap) {
  const std::size_t n = v.rows();
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  std::size_t sweeps = 0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      do {
        if (++sweeps > sweep_cap)
          fail(ErrorCode::NumericalFailure, "symmetric eigensolver did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          const std::size_t i = ii;
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (std::size_t k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

}  // namespace detail

/// Eigen-decomposition of a symmetric matrix by Householder tridiagonalization
/// followed by implicit QL. Eigenvalues ascending; the sweep cap is 64 n.
inline SymEig sym_eig(const SymMatrix& m) {
  const std::size_t n = m.size();
  SymEig out{Vector(n), m.matrix()};
  if (n == 1) {
    out.values[0] = m(0, 0);
    out.vectors = Matrix::identity(1);
    return out;
  }
  Vector e(n, 0.0);
  detail::tridiagonalize(out.vectors, out.values, e);
  detail::tridiagonal_ql(out.vectors, out.values, e, 64 * n);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.values[a] < out.values[b]; });
  SymEig sorted{Vector(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    sorted.values[j] = out.values[order[j]];
    for (std::size_t i = 0; i < n; ++i) sorted.vectors(i, j) = out.vectors(i, order[j]);
  }
  return sorted;
}

inline double lambda_max(const SymMatrix& m) { return sym_eig(m).values.back(); }
inline double lambda_min(const SymMatrix& m) { return sym_eig(m).values.front(); }

inline double default_nsd_tol(std::size_t n) { return 1e-9 * static_cast<double>(n); }

struct Definiteness {
  bool verdict;
  double lambda_max;
};

/// M is negative semidefinite up to `tol`: lambda_max(M) <= tol.
inline Definiteness is_nsd(const SymMatrix& m, double tol) {
  require(tol >= 0.0, ErrorCode::InvalidArgument, "tolerance must be non-negative");
  const double lm = lambda_max(m);
  return {lm <= tol, lm};
}
inline Definiteness is_nsd(const SymMatrix& m) { return is_nsd(m, default_nsd_tol(m.size())); }

/// V f(diag) V^T for a spectral function f.
template <typename F>
Matrix spectral_apply(const SymEig& eig, F&& f) {
  const std::size_t n = eig.values.size();
  Matrix out(n, n);
  Vector fv(n);
  for (std::size_t k = 0; k < n; ++k) fv[k] = f(eig.values[k]);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += eig.vectors(i, k) * fv[k] * eig.vectors(j, k);
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

inline constexpr double kSpdFloor = 1e-12;

/// Unique symmetric positive definite square root.
inline SymMatrix spd_sqrt(const SymMatrix& m) {
  const SymEig eig = sym_eig(m);
  require(eig.values.front() >= kSpdFloor, ErrorCode::NotPositiveDefinite,
          "lambda_min " + std::to_string(eig.values.front()) + " below 1e-12");
  return SymMatrix(spectral_apply(eig, [](double x) { return std::sqrt(x); }));
}

inline SymMatrix spd_inv_sqrt(const SymMatrix& m) {
  const SymEig eig = sym_eig(m);
  require(eig.values.front() >= kSpdFloor, ErrorCode::NotPositiveDefinite,
          "lambda_min " + std::to_string(eig.values.front()) + " below 1e-12");
  return SymMatrix(spectral_apply(eig, [](double x) { return 1.0 / std::sqrt(x); }));
}

/// Lower Cholesky factor, or nullopt when a pivot is not strictly positive.
inline std::optional<Matrix> cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = a(j, j);
    for (std::size_t k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
    if (!(s > 0.0) || !std::isfinite(s)) return std::nullopt;
    const double ljj = std::sqrt(s);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double t = a(i, j);
      for (std::size_t k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
      l(i, j) = t / ljj;
    }
  }
  return l;
}

/// Inverse from a lower Cholesky factor.
inline Matrix cholesky_inverse(const Matrix& l) {
  const std::size_t n = l.rows();
  Matrix linv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    linv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= l(i, k) * linv(k, j);
      linv(i, j) = s / l(i, i);
    }
  }
  Matrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = j; k < n; ++k) s += linv(k, i) * linv(k, j);
      inv(i, j) = s;
      inv(j, i) = s;
    }
  }
  return inv;
}

inline SymMatrix spd_inverse(const SymMatrix& m) {
  auto l = cholesky(m.matrix());
  if (!l) fail(ErrorCode::NotPositiveDefinite, "matrix is not positive definite");
  return SymMatrix(cholesky_inverse(*l));
}

/// LU factorization with partial pivoting.
class Lu {
 public:
  explicit Lu(const Matrix& a) : lu_(a), perm_(a.rows()) {
    require(a.is_square(), ErrorCode::DimensionMismatch, "LU needs a square matrix");
    const std::size_t n = a.rows();
    const double scale = std::max(a.max_abs(), std::numeric_limits<double>::min());
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      for (std::size_t i = k + 1; i < n; ++i)
        if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
      min_pivot_ = std::min(min_pivot_, std::abs(lu_(p, k)) / scale);
      if (p != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu_(p, j), lu_(k, j));
        std::swap(perm_[p], perm_[k]);
        sign_ = -sign_;
      }
      if (lu_(k, k) == 0.0) continue;
      for (std::size_t i = k + 1; i < n; ++i) {
        lu_(i, k) /= lu_(k, k);
        const double f = lu_(i, k);
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
      }
    }
  }

  /// Smallest pivot relative to max|entry|; a cheap singularity indicator.
  double relative_min_pivot() const noexcept { return min_pivot_; }

  double determinant() const {
    double d = sign_;
    for (std::size_t i = 0; i < lu_.rows(); ++i) d *= lu_(i, i);
    return d;
  }

  Matrix solve(const Matrix& b) const {
    const std::size_t n = lu_.rows();
    require(b.rows() == n, ErrorCode::DimensionMismatch, "LU solve rhs rows");
    Matrix x(n, b.cols());
    for (std::size_t c = 0; c < b.cols(); ++c) {
      Vector y(n);
      for (std::size_t i = 0; i < n; ++i) {
        double s = b(perm_[i], c);
        for (std::size_t k = 0; k < i; ++k) s -= lu_(i, k) * y[k];
        y[i] = s;
      }
      for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= lu_(ii, k) * x(k, c);
        x(ii, c) = s / lu_(ii, ii);
      }
    }
    return x;
  }

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  double sign_ = 1.0;
  double min_pivot_ = std::numeric_limits<double>::infinity();
};

inline constexpr double kSingularTol = 1e-12;

/// Solve A X = B, failing with SingularMatrix when A is numerically singular.
inline Matrix solve(const Matrix& a, const Matrix& b) {
  Lu lu(a);
  require(lu.relative_min_pivot() >= kSingularTol, ErrorCode::SingularMatrix, "matrix is singular");
  return lu.solve(b);
}

inline Matrix inverse(const Matrix& a) { return solve(a, Matrix::identity(a.rows())); }

enum class SchurBlock { Eliminate11, Eliminate22 };

/// Schur complement of a symmetric 2x2-block matrix. `split` is the size of
/// the leading block. Eliminate22 returns A - B D^{-1} B^T; Eliminate11
/// returns D - B^T A^{-1} B.
inline SymMatrix schur_complement(const SymMatrix& m, std::size_t split, SchurBlock which) {
  const std::size_t n = m.size();
  require(split >= 1 && split < n, ErrorCode::DimensionMismatch, "invalid block split");
  const Matrix a = m.matrix().block(0, 0, split, split);
  const Matrix b = m.matrix().block(0, split, split, n - split);
  const Matrix d = m.matrix().block(split, split, n - split, n - split);
  const Matrix& eliminated = which == SchurBlock::Eliminate22 ? d : a;
  Lu lu(eliminated);
  require(lu.relative_min_pivot() >= kSingularTol && std::abs(lu.determinant()) >= kSingularTol,
          ErrorCode::SingularBlock, "eliminated block is singular");
  if (which == SchurBlock::Eliminate22) return SymMatrix(a - b * lu.solve(b.transpose()));
  return SymMatrix(d - b.transpose() * lu.solve(b));
}

/// Spectral norm via the largest eigenvalue of A^T A.
inline double spectral_norm(const Matrix& a) {
  const double lm = lambda_max(SymMatrix(a.transpose() * a));
  return std::sqrt(std::max(lm, 0.0));
}

}  // namespace contractnet
