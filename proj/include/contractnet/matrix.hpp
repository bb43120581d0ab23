#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "contractnet/error.hpp"

namespace contractnet {

/// Dense row-major real matrix. Products accumulate in a fixed k-order so
/// that two algebraically identical assemblies built from the same products
/// agree bit-for-bit.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, ErrorCode::DimensionMismatch,
            "data length does not match rows*cols");
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      require(r.size() == cols_, ErrorCode::DimensionMismatch, "ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  static Matrix column(std::span<const double> v) {
    return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    require(r0 + nr <= rows_ && c0 + nc <= cols_, ErrorCode::DimensionMismatch, "block out of range");
    Matrix b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
  }

  void set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
    require(r0 + b.rows() <= rows_ && c0 + b.cols() <= cols_, ErrorCode::DimensionMismatch,
            "set_block out of range");
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
  }

  Matrix& operator+=(const Matrix& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator-(Matrix a) {
    for (double& v : a.data_) v = -v;
    return a;
  }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    require(a.cols_ == b.rows_, ErrorCode::DimensionMismatch,
            "product of " + a.shape() + " and " + b.shape());
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      for (std::size_t j = 0; j < b.cols_; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.cols_; ++k) s += a(i, k) * b(k, j);
        c(i, j) = s;
      }
    }
    return c;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  std::string shape() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

 private:
  void check_same_shape(const Matrix& o) const {
    require(rows_ == o.rows_ && cols_ == o.cols_, ErrorCode::DimensionMismatch,
            "shape " + shape() + " vs " + o.shape());
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using Vector = std::vector<double>;

inline std::ostream& operator<<(std::ostream& os, const Matrix& m) {
  os << '[';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << (i ? "; " : "");
    for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << m(i, j);
  }
  return os << ']';
}

inline Vector operator*(const Matrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), ErrorCode::DimensionMismatch, "matrix-vector size");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * x[k];
    y[i] = s;
  }
  return y;
}
inline Vector operator*(const Matrix& a, const Vector& x) { return a * std::span<const double>(x); }

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).max_abs(); }

/// Assemble a 2x2 block matrix [[a, b], [c, d]].
inline Matrix block2x2(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d) {
  require(a.rows() == b.rows() && c.rows() == d.rows() && a.cols() == c.cols() && b.cols() == d.cols(),
          ErrorCode::DimensionMismatch, "incompatible 2x2 block layout");
  Matrix m(a.rows() + c.rows(), a.cols() + b.cols());
  m.set_block(0, 0, a);
  m.set_block(0, a.cols(), b);
  m.set_block(a.rows(), 0, c);
  m.set_block(a.rows(), a.cols(), d);
  return m;
}

inline Matrix block_diag(const Matrix& a, const Matrix& d) {
  return block2x2(a, Matrix(a.rows(), d.cols()), Matrix(d.rows(), a.cols()), d);
}

/// Symmetric matrix. Construction symmetrizes (M + M^T)/2 and rejects inputs
/// whose asymmetry exceeds 1e-8 * max|entry|.
class SymMatrix {
 public:
  static constexpr double kAsymmetryTol = 1e-8;

  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m) : m_(m.rows(), m.cols()) {
    require(m.is_square() && m.rows() >= 1, ErrorCode::DimensionMismatch,
            "symmetric matrix must be square and non-empty, got " + m.shape());
    const double scale = m.max_abs();
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = i; j < m.cols(); ++j) {
        const double a = m(i, j);
        const double b = m(j, i);
        const double diff = std::abs(a - b);
        asymmetry_ = std::max(asymmetry_, diff);
        // Exactly symmetric input is copied verbatim.
        const double v = (a == b) ? a : 0.5 * (a + b);
        m_(i, j) = v;
        m_(j, i) = v;
      }
    }
    require(asymmetry_ <= kAsymmetryTol * scale, ErrorCode::InvalidArgument,
            "matrix asymmetry " + std::to_string(asymmetry_) + " exceeds tolerance");
  }
  SymMatrix(std::initializer_list<std::initializer_list<double>> rows) : SymMatrix(Matrix(rows)) {}

  static SymMatrix identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }
  static SymMatrix diagonal(std::span<const double> d) { return SymMatrix(Matrix::diagonal(d)); }

  std::size_t size() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }
  operator const Matrix&() const noexcept { return m_; }
  double asymmetry() const noexcept { return asymmetry_; }
  double max_abs() const { return m_.max_abs(); }
  double trace() const { return m_.trace(); }

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) { return a.m_ == b.m_; }

 private:
  Matrix m_;
  double asymmetry_ = 0.0;
};

inline std::ostream& operator<<(std::ostream& os, const SymMatrix& m) { return os << m.matrix(); }

/// Diagonal matrix with strictly positive entries.
class DiagMatrix {
 public:
  DiagMatrix() = default;
  explicit DiagMatrix(Vector d) : d_(std::move(d)) {
    require(!d_.empty(), ErrorCode::DimensionMismatch, "empty diagonal");
    for (double v : d_)
      require(std::isfinite(v) && v > 0.0, ErrorCode::NotPositiveDefinite,
              "diagonal entry " + std::to_string(v) + " is not strictly positive");
  }
  DiagMatrix(std::initializer_list<double> d) : DiagMatrix(Vector(d)) {}

  static DiagMatrix identity(std::size_t n) { return DiagMatrix(Vector(n, 1.0)); }
  static DiagMatrix constant(std::size_t n, double v) { return DiagMatrix(Vector(n, v)); }

  std::size_t size() const noexcept { return d_.size(); }
  double operator[](std::size_t i) const { return d_[i]; }
  const Vector& diag() const noexcept { return d_; }
  Matrix matrix() const { return Matrix::diagonal(d_); }
  double trace() const {
    double s = 0.0;
    for (double v : d_) s += v;
    return s;
  }
  DiagMatrix inverse() const {
    Vector r(d_.size());
    for (std::size_t i = 0; i < d_.size(); ++i) r[i] = 1.0 / d_[i];
    return DiagMatrix(std::move(r));
  }
  DiagMatrix sqrt() const {
    Vector r(d_.size());
    for (std::size_t i = 0; i < d_.size(); ++i) r[i] = std::sqrt(d_[i]);
    return DiagMatrix(std::move(r));
  }
  DiagMatrix scaled(double s) const {
    Vector r(d_);
    for (double& v : r) v *= s;
    return DiagMatrix(std::move(r));
  }

  friend bool operator==(const DiagMatrix& a, const DiagMatrix& b) { return a.d_ == b.d_; }

 private:
  Vector d_;
};

inline SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) { return SymMatrix(a.matrix() + b.matrix()); }
inline SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) { return SymMatrix(a.matrix() - b.matrix()); }
inline SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(s * a.matrix()); }

}  // namespace contractnet
