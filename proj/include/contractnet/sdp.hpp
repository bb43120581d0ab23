#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "contractnet/error.hpp"
#include "contractnet/linalg.hpp"
#include "contractnet/matrix.hpp"
#include "contractnet/rng.hpp"

namespace contractnet {

enum class BlockKind { Symmetric, Diagonal, Free };

/// One matrix-valued decision variable. Symmetric blocks are constrained to
/// P >= eps I, diagonal blocks to q_i >= eps, free blocks are unconstrained.
struct VariableBlock {
  std::string name;
  BlockKind kind = BlockKind::Free;
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool normalized = false;  ///< contributes its trace to the normalization
  std::size_t offset = 0;
  std::size_t count = 0;
};

struct SparseEntry {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Sparse symmetric matrix; both triangles are stored.
using SparseSym = std::vector<SparseEntry>;

namespace detail {

inline SparseSym to_sparse(const Matrix& m) {
  SparseSym s;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) s.push_back({i, j, m(i, j)});
  return s;
}

}  // namespace detail

/// Affine matrix map theta -> L(theta) over blocked decision variables,
/// together with the positivity constraints of its blocks and an optional
/// trace normalization sum(trace of normalized blocks) = constant.
class FeasibilityProblem {
 public:
  using Values = std::vector<Matrix>;
  using AffineMap = std::function<Matrix(const Values&)>;

  std::size_t add_symmetric(std::string name, std::size_t n, bool normalized = true) {
    return add_block({std::move(name), BlockKind::Symmetric, n, n, normalized, 0, n * (n + 1) / 2});
  }
  std::size_t add_diagonal(std::string name, std::size_t n, bool normalized = true) {
    return add_block({std::move(name), BlockKind::Diagonal, n, n, normalized, 0, n});
  }
  std::size_t add_free(std::string name, std::size_t rows, std::size_t cols) {
    return add_block({std::move(name), BlockKind::Free, rows, cols, false, 0, rows * cols});
  }

  /// The map must be affine in the block values; it is sampled once at zero
  /// and at every basis element.
  void set_map(const AffineMap& map) {
    const Vector zero(num_vars_, 0.0);
    constant_ = map(unpack(zero));
    require(constant_.is_square(), ErrorCode::DimensionMismatch, "affine map must return a square matrix");
    coefficients_.assign(num_vars_, {});
    Vector e(num_vars_, 0.0);
    for (std::size_t i = 0; i < num_vars_; ++i) {
      e[i] = 1.0;
      const Matrix li = map(unpack(e)) - constant_;
      e[i] = 0.0;
      require(li.rows() == constant_.rows(), ErrorCode::DimensionMismatch, "affine map changed size");
      coefficients_[i] = detail::to_sparse(li);
    }
  }

  /// Direct sparse form: L(theta) = constant + sum theta_i coefficient_i.
  void set_affine(Matrix constant, std::vector<SparseSym> coefficients) {
    require(coefficients.size() == num_vars_, ErrorCode::DimensionMismatch, "one coefficient per variable");
    constant_ = std::move(constant);
    coefficients_ = std::move(coefficients);
  }

  void set_normalization(double total) { normalization_ = total; }

  double normalization() const {
    if (normalization_ > 0.0) return normalization_;
    double n = 0.0;
    for (const auto& b : blocks_)
      if (b.normalized) n += static_cast<double>(b.rows);
    return n;
  }
  bool has_normalization() const {
    return std::any_of(blocks_.begin(), blocks_.end(), [](const VariableBlock& b) { return b.normalized; });
  }

  std::size_t num_vars() const noexcept { return num_vars_; }
  std::size_t dim() const noexcept { return constant_.rows(); }
  const std::vector<VariableBlock>& blocks() const noexcept { return blocks_; }
  const Matrix& constant() const noexcept { return constant_; }
  const std::vector<SparseSym>& coefficients() const noexcept { return coefficients_; }

  Values unpack(const Vector& theta) const {
    Values out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) {
      Matrix m(b.rows, b.cols);
      std::size_t k = b.offset;
      switch (b.kind) {
        case BlockKind::Symmetric:
          for (std::size_t i = 0; i < b.rows; ++i)
            for (std::size_t j = i; j < b.rows; ++j) {
              m(i, j) = theta[k];
              m(j, i) = theta[k];
              ++k;
            }
          break;
        case BlockKind::Diagonal:
          for (std::size_t i = 0; i < b.rows; ++i) m(i, i) = theta[k++];
          break;
        case BlockKind::Free:
          for (std::size_t i = 0; i < b.rows; ++i)
            for (std::size_t j = 0; j < b.cols; ++j) m(i, j) = theta[k++];
          break;
      }
      out.push_back(std::move(m));
    }
    return out;
  }

  Vector pack(const Values& values) const {
    require(values.size() == blocks_.size(), ErrorCode::DimensionMismatch, "one value per block");
    Vector theta(num_vars_, 0.0);
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& b = blocks_[bi];
      const Matrix& m = values[bi];
      require(m.rows() == b.rows && m.cols() == b.cols, ErrorCode::DimensionMismatch, "block " + b.name);
      std::size_t k = b.offset;
      switch (b.kind) {
        case BlockKind::Symmetric:
          for (std::size_t i = 0; i < b.rows; ++i)
            for (std::size_t j = i; j < b.rows; ++j) theta[k++] = 0.5 * (m(i, j) + m(j, i));
          break;
        case BlockKind::Diagonal:
          for (std::size_t i = 0; i < b.rows; ++i) theta[k++] = m(i, i);
          break;
        case BlockKind::Free:
          for (std::size_t i = 0; i < b.rows; ++i)
            for (std::size_t j = 0; j < b.cols; ++j) theta[k++] = m(i, j);
          break;
      }
    }
    return theta;
  }

  Matrix evaluate(const Vector& theta) const {
    Matrix l = constant_;
    for (std::size_t i = 0; i < num_vars_; ++i) {
      if (theta[i] == 0.0) continue;
      for (const auto& e : coefficients_[i]) l(e.row, e.col) += theta[i] * e.value;
    }
    return l;
  }

 private:
  std::size_t add_block(VariableBlock b) {
    b.offset = num_vars_;
    num_vars_ += b.count;
    blocks_.push_back(std::move(b));
    return blocks_.size() - 1;
  }

  std::vector<VariableBlock> blocks_;
  std::size_t num_vars_ = 0;
  Matrix constant_;
  std::vector<SparseSym> coefficients_;
  double normalization_ = 0.0;
};

enum class FeasibilityStatus { Feasible, Marginal, NotFound };

inline std::string_view to_string(FeasibilityStatus s) {
  switch (s) {
    case FeasibilityStatus::Feasible: return "Feasible";
    case FeasibilityStatus::Marginal: return "Marginal";
    case FeasibilityStatus::NotFound: return "NotFound";
  }
  return "Unknown";
}

struct SolverOptions {
  double strict_tol = 1e-7;
  double epsilon = 1e-6;       ///< floor for P >= eps I and q_i >= eps
  int restarts = 8;            ///< attempts, the first from the neutral start
  std::uint64_t seed = 0;
  double gap_tol = 1e-10;      ///< absolute duality-gap target, scaled by max(1, |L|)
  double barrier_growth = 8.0;
  int max_newton = 80;         ///< per centering step
  int max_outer = 60;
};

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::NotFound;
  Vector theta;
  FeasibilityProblem::Values values;
  double margin = std::numeric_limits<double>::infinity();  ///< lambda_max(L(theta))
  double lower_bound = -std::numeric_limits<double>::infinity();
  int attempts = 0;
  int newton_steps = 0;
};

namespace detail {

// One LMI constraint F(x) = F0 + sum_i x_i F_i > 0 over the extended
// variable x = (theta, t).
struct LmiConstraint {
  Matrix f0;
  std::vector<std::pair<std::size_t, SparseSym>> terms;

  Matrix evaluate(const Vector& x) const {
    Matrix f = f0;
    for (const auto& [var, coef] : terms)
      for (const auto& e : coef) f(e.row, e.col) += x[var] * e.value;
    return f;
  }
};

class BarrierSolver {
 public:
  BarrierSolver(const FeasibilityProblem& problem, const SolverOptions& opts) : problem_(problem), opts_(opts) {
    const std::size_t nv = problem.num_vars();
    t_index_ = nv;

    // t I - L(theta) > 0
    LmiConstraint epi;
    epi.f0 = -problem.constant();
    for (std::size_t i = 0; i < nv; ++i) {
      if (problem.coefficients()[i].empty()) continue;
      SparseSym neg = problem.coefficients()[i];
      for (auto& e : neg) e.value = -e.value;
      epi.terms.emplace_back(i, std::move(neg));
    }
    SparseSym ident;
    for (std::size_t i = 0; i < problem.dim(); ++i) ident.push_back({i, i, 1.0});
    epi.terms.emplace_back(t_index_, std::move(ident));
    constraints_.push_back(std::move(epi));

    for (const auto& b : problem.blocks()) {
      if (b.kind == BlockKind::Free) continue;
      LmiConstraint c;
      c.f0 = -opts.epsilon * Matrix::identity(b.rows);
      std::size_t k = b.offset;
      if (b.kind == BlockKind::Symmetric) {
        for (std::size_t i = 0; i < b.rows; ++i)
          for (std::size_t j = i; j < b.rows; ++j) {
            SparseSym e = {{i, j, 1.0}};
            if (i != j) e.push_back({j, i, 1.0});
            c.terms.emplace_back(k++, std::move(e));
          }
      } else {
        for (std::size_t i = 0; i < b.rows; ++i) c.terms.emplace_back(k++, SparseSym{{i, i, 1.0}});
      }
      constraints_.push_back(std::move(c));
    }

    equality_.assign(nv + 1, 0.0);
    for (const auto& b : problem.blocks()) {
      if (!b.normalized || b.kind == BlockKind::Free) continue;
      std::size_t k = b.offset;
      for (std::size_t i = 0; i < b.rows; ++i) {
        if (b.kind == BlockKind::Symmetric) {
          equality_[k] = 1.0;
          k += b.rows - i;
        } else {
          equality_[k++] = 1.0;
        }
      }
    }
    has_equality_ = problem.has_normalization();
    barrier_order_ = 0.0;
    for (const auto& c : constraints_) barrier_order_ += static_cast<double>(c.f0.rows());
  }

  FeasibilityResult solve(const Vector& theta0) {
    FeasibilityResult res;
    Vector x(theta0);
    x.push_back(0.0);
    const Matrix l0 = problem_.evaluate(theta0);
    const double lm0 = lambda_max(SymMatrix(l0));
    const double scale = std::max(1.0, l0.max_abs());
    x[t_index_] = lm0 + std::max(1.0, 0.5 * std::abs(lm0));
    const double gap_target = opts_.gap_tol * scale;

    double s = barrier_order_ / std::max(1.0, std::abs(x[t_index_]));
    for (int outer = 0; outer < opts_.max_outer; ++outer) {
      res.newton_steps += center(x, s);
      const double gap = barrier_order_ / s;
      const double t = x[t_index_];
      res.lower_bound = t - gap;
      if (gap <= gap_target) break;
      if (res.lower_bound > 10.0 * opts_.strict_tol) break;           // certainly infeasible
      if (t < -opts_.strict_tol && gap <= 1e-3 * std::abs(t)) break;  // deep enough
      s *= opts_.barrier_growth;
    }

    res.theta.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(t_index_));
    return res;
  }

 private:
  // Newton centering for s t + barrier(x) on the normalization plane.
  int center(Vector& x, double s) {
    const std::size_t nx = x.size();
    int steps = 0;
    double f = objective(x, s);
    for (; steps < opts_.max_newton; ++steps) {
      Vector g(nx, 0.0);
      Matrix h(nx, nx);
      g[t_index_] += s;
      for (const auto& c : constraints_) accumulate(c, x, g, h);

      const Vector dx = newton_direction(h, g);
      double slope = 0.0;
      for (std::size_t i = 0; i < nx; ++i) slope += g[i] * dx[i];
      if (!(slope < 0.0) || -slope / 2.0 < 1e-12) break;

      double alpha = 1.0;
      bool moved = false;
      Vector trial(nx);
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        for (std::size_t i = 0; i < nx; ++i) trial[i] = x[i] + alpha * dx[i];
        const double ft = objective(trial, s);
        if (std::isfinite(ft) && ft <= f + 0.01 * alpha * slope) {
          x = trial;
          f = ft;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    return steps;
  }

  double objective(const Vector& x, double s) const {
    double f = s * x[t_index_];
    for (const auto& c : constraints_) {
      const auto l = cholesky(c.evaluate(x));
      if (!l) return std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < l->rows(); ++i) f -= 2.0 * std::log((*l)(i, i));
    }
    return f;
  }

  // Gradient and Hessian of -log det F(x).
  static void accumulate(const LmiConstraint& c, const Vector& x, Vector& g, Matrix& h) {
    const auto l = cholesky(c.evaluate(x));
    if (!l) fail(ErrorCode::NumericalFailure, "iterate left the interior");
    const Matrix finv = cholesky_inverse(*l);
    const std::size_t d = finv.rows();

    std::vector<Matrix> x_terms;
    x_terms.reserve(c.terms.size());
    for (const auto& [var, coef] : c.terms) {
      double tr = 0.0;
      for (const auto& e : coef) tr += e.value * finv(e.col, e.row);
      g[var] -= tr;

      // X = F^{-1} A F^{-1}, using the sparse rows of A.
      std::vector<std::size_t> rows;
      for (const auto& e : coef)
        if (std::find(rows.begin(), rows.end(), e.row) == rows.end()) rows.push_back(e.row);
      Matrix t(rows.size(), d);
      for (const auto& e : coef) {
        const std::size_t r = static_cast<std::size_t>(std::find(rows.begin(), rows.end(), e.row) - rows.begin());
        for (std::size_t j = 0; j < d; ++j) t(r, j) += e.value * finv(e.col, j);
      }
      Matrix xm(d, d);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t r = 0; r < rows.size(); ++r) {
          const double fir = finv(i, rows[r]);
          if (fir == 0.0) continue;
          for (std::size_t j = 0; j < d; ++j) xm(i, j) += fir * t(r, j);
        }
      x_terms.push_back(std::move(xm));
    }
    for (std::size_t a = 0; a < c.terms.size(); ++a) {
      const Matrix& xa = x_terms[a];
      const std::size_t va = c.terms[a].first;
      for (std::size_t b = a; b < c.terms.size(); ++b) {
        double v = 0.0;
        for (const auto& e : c.terms[b].second) v += e.value * xa(e.col, e.row);
        const std::size_t vb = c.terms[b].first;
        h(va, vb) += v;
        if (va != vb) h(vb, va) += v;
      }
    }
  }

  Vector newton_direction(const Matrix& h, const Vector& g) const {
    const std::size_t n = g.size();
    double diag_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag_max = std::max(diag_max, h(i, i));
    double ridge = 1e-14 * std::max(1.0, diag_max);
    for (int attempt = 0; attempt < 12; ++attempt, ridge *= 100.0) {
      Matrix hr = h;
      for (std::size_t i = 0; i < n; ++i) hr(i, i) += ridge;
      const auto l = cholesky(hr);
      if (!l) continue;
      const Vector hg = chol_solve(*l, g);
      Vector dx(n);
      for (std::size_t i = 0; i < n; ++i) dx[i] = -hg[i];
      if (has_equality_) {
        const Vector ha = chol_solve(*l, equality_);
        double ag = 0.0;
        double aa = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          ag += equality_[i] * hg[i];
          aa += equality_[i] * ha[i];
        }
        const double w = -ag / aa;
        for (std::size_t i = 0; i < n; ++i) dx[i] -= w * ha[i];
      }
      bool finite = true;
      for (double v : dx) finite = finite && std::isfinite(v);
      if (finite) return dx;
    }
    fail(ErrorCode::NumericalFailure, "Newton system could not be factored");
  }

  static Vector chol_solve(const Matrix& l, const Vector& b) {
    const std::size_t n = b.size();
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
      y[i] = s / l(i, i);
    }
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
      double s = y[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
      x[ii] = s / l(ii, ii);
    }
    return x;
  }

  const FeasibilityProblem& problem_;
  SolverOptions opts_;
  std::vector<LmiConstraint> constraints_;
  Vector equality_;
  bool has_equality_ = false;
  double barrier_order_ = 0.0;
  std::size_t t_index_ = 0;
};

inline Vector neutral_start(const FeasibilityProblem& problem) {
  FeasibilityProblem::Values v;
  const double norm = problem.normalization();
  double trace_units = 0.0;
  for (const auto& b : problem.blocks())
    if (b.normalized) trace_units += static_cast<double>(b.rows);
  const double s = trace_units > 0.0 ? norm / trace_units : 1.0;
  for (const auto& b : problem.blocks()) {
    if (b.kind == BlockKind::Free) v.push_back(Matrix(b.rows, b.cols));
    else v.push_back(s * Matrix::identity(b.rows));
  }
  return problem.pack(v);
}

inline Vector random_start(const FeasibilityProblem& problem, SplitMix64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  FeasibilityProblem::Values v;
  double trace_norm = 0.0;
  for (const auto& b : problem.blocks()) {
    if (b.kind == BlockKind::Free) {
      v.push_back(Matrix(b.rows, b.cols));
      continue;
    }
    Matrix m(b.rows, b.rows);
    if (b.kind == BlockKind::Symmetric) {
      Matrix g(b.rows, b.rows);
      for (double& x : g.data()) x = normal(rng);
      m = (1.0 / static_cast<double>(b.rows)) * (g * g.transpose()) + 0.5 * Matrix::identity(b.rows);
    } else {
      for (std::size_t i = 0; i < b.rows; ++i) m(i, i) = std::exp(0.5 * normal(rng));
    }
    if (b.normalized) trace_norm += m.trace();
    v.push_back(std::move(m));
  }
  if (problem.has_normalization() && trace_norm > 0.0) {
    const double s = problem.normalization() / trace_norm;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (problem.blocks()[i].normalized) v[i] *= s;
  }
  return problem.pack(v);
}

}  // namespace detail

/// Approximately minimizes lambda_max(L(theta)) over the constraint set by a
/// log-barrier interior-point method on the epigraph form, then classifies
/// the exactly re-evaluated lambda_max.
inline FeasibilityResult min_lambda_max(const FeasibilityProblem& problem, const SolverOptions& opts = {}) {
  require(problem.num_vars() > 0 && problem.dim() > 0, ErrorCode::InvalidArgument, "empty feasibility problem");
  SplitMix64 rng(opts.seed);
  FeasibilityResult best;
  bool any_success = false;
  std::string last_error;
  const int attempts = std::max(1, opts.restarts);
  int ran = 0;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    ++ran;
    const Vector start = attempt == 0 ? detail::neutral_start(problem) : detail::random_start(problem, rng);
    FeasibilityResult res;
    try {
      detail::BarrierSolver solver(problem, opts);
      res = solver.solve(start);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NumericalFailure) throw;
      last_error = e.what();
      continue;
    }
    res.margin = lambda_max(SymMatrix(problem.evaluate(res.theta)));
    res.values = problem.unpack(res.theta);
    if (!any_success || res.margin < best.margin) best = std::move(res);
    any_success = true;
    if (best.margin <= -opts.strict_tol) break;
    // Convex problem: a certified positive lower bound settles it.
    if (best.lower_bound > 10.0 * opts.strict_tol) break;
  }
  if (!any_success) fail(ErrorCode::NumericalFailure, "solver failed on every restart: " + last_error);
  best.attempts = ran;
  if (best.margin <= -opts.strict_tol) best.status = FeasibilityStatus::Feasible;
  else if (std::abs(best.margin) <= opts.strict_tol) best.status = FeasibilityStatus::Marginal;
  else best.status = FeasibilityStatus::NotFound;
  return best;
}

}  // namespace contractnet
