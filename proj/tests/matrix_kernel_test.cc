#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "contractnet/linalg.hpp"
#include "contractnet/rng.hpp"
#include "support/random_instances.hpp"

namespace contractnet {
namespace {

double reconstruction_tol(const Matrix& m) { return 1e-10 * static_cast<double>(m.rows()) * std::max(1.0, m.max_abs()); }

Matrix reconstruct(const SymEig& eig) {
  return spectral_apply(eig, [](double x) { return x; });
}

TEST(SymEig, IdentityHasUnitSpectrum) {
  const SymEig eig = sym_eig(SymMatrix::identity(3));
  for (double v : eig.values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(SymEig, DiagonalIsSortedAscending) {
  const SymEig eig = sym_eig(SymMatrix{{5, 0}, {0, -2}});
  EXPECT_DOUBLE_EQ(eig.values[0], -2.0);
  EXPECT_DOUBLE_EQ(eig.values[1], 5.0);
}

TEST(SymEig, SkewGramMatrix) {
  const Matrix w{{0, 4}, {-4, 0}};
  const SymEig eig = sym_eig(SymMatrix(w.transpose() * w));
  EXPECT_NEAR(eig.values[0], 16.0, 1e-12);
  EXPECT_NEAR(eig.values[1], 16.0, 1e-12);
}

TEST(SymEig, MatchesEigenOnRandomMatrices) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 16;
    const SymMatrix m = testing_support::random_symmetric(n, rng);
    const SymEig eig = sym_eig(m);

    Eigen::MatrixXd e(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) e(i, j) = m(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(e);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(eig.values[i], ref.eigenvalues()(i), 1e-10 * n);

    EXPECT_LE(max_abs_diff(reconstruct(eig), m.matrix()), reconstruction_tol(m.matrix()));
    const Matrix vtv = eig.vectors.transpose() * eig.vectors;
    EXPECT_LE(max_abs_diff(vtv, Matrix::identity(n)), 1e-12 * n);
    for (std::size_t i = 1; i < n; ++i) EXPECT_LE(eig.values[i - 1], eig.values[i]);
  }
}

TEST(IsNsd, ZeroMatrixAtZeroTolerance) {
  const auto d = is_nsd(SymMatrix(Matrix(2, 2)), 0.0);
  EXPECT_TRUE(d.verdict);
  EXPECT_EQ(d.lambda_max, 0.0);
}

TEST(IsNsd, TwoByTwoByDeterminantAndTrace) {
  const auto d = is_nsd(SymMatrix{{-0.02, 1}, {1, -200}});
  EXPECT_TRUE(d.verdict);
  EXPECT_LT(d.lambda_max, 0.0);
}

TEST(IsNsd, PositiveDiagonal) {
  const auto d = is_nsd(SymMatrix{{6.7, 0}, {0, 6.7}});
  EXPECT_FALSE(d.verdict);
  EXPECT_NEAR(d.lambda_max, 6.7, 1e-14);
}

TEST(IsNsd, AgreesWithFullSpectrum) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const SymMatrix m = testing_support::random_symmetric(1 + trial % 8, rng);
    const double tol = 0.1 * (trial % 4);
    const auto eig = sym_eig(m);
    const bool all_below = std::all_of(eig.values.begin(), eig.values.end(), [&](double v) { return v <= tol; });
    EXPECT_EQ(is_nsd(m, tol).verdict, all_below);
  }
}

TEST(SpdSqrt, KnownRoots) {
  EXPECT_EQ(max_abs_diff(spd_sqrt(SymMatrix::identity(2)).matrix(), Matrix::identity(2)), 0.0);
  const SymMatrix r = spd_sqrt(SymMatrix{{4, 0}, {0, 9}});
  EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
}

TEST(SpdSqrt, RoundTripOnRandomSpd) {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 16;
    const SymMatrix a = testing_support::random_spd(n, rng, 0.5, 3.0);
    const SymMatrix root = spd_sqrt(SymMatrix(a.matrix() * a.matrix()));
    EXPECT_LE(max_abs_diff(root.matrix(), a.matrix()), 1e-10 * n * a.max_abs());
    EXPECT_LE(max_abs_diff(root.matrix() * root.matrix(), a.matrix() * a.matrix()),
              reconstruction_tol(a.matrix() * a.matrix()));
  }
}

TEST(SpdSqrt, RejectsIndefinite) {
  try {
    spd_sqrt(SymMatrix{{1, 0}, {0, -1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
}

TEST(SchurComplement, ScalarBlocks) {
  const SymMatrix m{{-2, 1}, {1, -2}};
  EXPECT_NEAR(schur_complement(m, 1, SchurBlock::Eliminate22)(0, 0), -1.5, 1e-15);
  EXPECT_NEAR(schur_complement(SymMatrix{{-1, 2}, {2, -4}}, 1, SchurBlock::Eliminate22)(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(schur_complement(m, 1, SchurBlock::Eliminate11)(0, 0), -1.5, 1e-15);
}

TEST(SchurComplement, BlockDiagonalReturnsLeadingBlock) {
  const Matrix a{{1, 2}, {2, 5}};
  const Matrix d{{-3}};
  const SymMatrix s = schur_complement(SymMatrix(block_diag(a, d)), 2, SchurBlock::Eliminate22);
  EXPECT_EQ(s.matrix(), a);
}

TEST(SchurComplement, SingularBlockIsRejected) {
  try {
    schur_complement(SymMatrix{{1, 1}, {1, 0}}, 1, SchurBlock::Eliminate22);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularBlock);
  }
}

TEST(SchurComplement, SignLawAgainstDirectCheck) {
  SplitMix64 rng(13);
  int agree = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + trial % 4;
    const std::size_t l = 1 + (trial / 4) % 4;
    const Matrix d = -testing_support::random_spd(l, rng, 0.2, 2.0).matrix();
    const Matrix a = testing_support::random_symmetric(k, rng).matrix() - 1.5 * Matrix::identity(k);
    const Matrix b = 0.5 * testing_support::random_matrix(k, l, rng);
    const SymMatrix m(block2x2(a, b, b.transpose(), d));
    const bool direct = is_nsd(m, 0.0).verdict;
    const bool via_schur = is_nsd(schur_complement(m, k, SchurBlock::Eliminate22), 0.0).verdict;
    EXPECT_EQ(direct, via_schur) << "trial " << trial;
    agree += direct == via_schur;
  }
  EXPECT_EQ(agree, 200);
}

TEST(SymMatrix, RejectsLargeAsymmetry) {
  EXPECT_THROW(SymMatrix(Matrix{{1, 2}, {3, 1}}), Error);
  const SymMatrix s(Matrix{{1, 2}, {2 + 1e-12, 1}});
  EXPECT_GT(s.asymmetry(), 0.0);
  EXPECT_EQ(s(0, 1), s(1, 0));
}

TEST(DiagMatrix, RejectsNonPositiveEntries) {
  EXPECT_THROW(DiagMatrix({1.0, 0.0}), Error);
  EXPECT_THROW(DiagMatrix({-1.0}), Error);
}

}  // namespace
}  // namespace contractnet
