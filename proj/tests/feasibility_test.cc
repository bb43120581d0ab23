#include <gtest/gtest.h>

#include <chrono>

#include "contractnet/feasibility.hpp"
#include "support/random_instances.hpp"

namespace contractnet {
namespace {

constexpr ConditionId kFrCtMone{Architecture::FiringRate, TimeDomain::Continuous, Nonlinearity::Mone};
constexpr ConditionId kFrDtCone{Architecture::FiringRate, TimeDomain::Discrete, Nonlinearity::Cone};

TEST(MinLambdaMax, ScalarToy) {
  // L(x) = [[x - 1]] with x >= eps and x = 1 normalization -> margin 0.
  FeasibilityProblem prob;
  prob.add_diagonal("x", 1);
  prob.set_map([](const FeasibilityProblem::Values& v) { return Matrix{{v[0](0, 0) - 2.0}}; });
  const auto r = min_lambda_max(prob);
  EXPECT_NEAR(r.margin, -1.0, 1e-9);
  EXPECT_EQ(r.status, FeasibilityStatus::Feasible);
}

TEST(MinLambdaMax, FreeVariableReachesOptimum) {
  // lambda_max of [[y, 1], [1, -y]] is sqrt(1 + y^2); minimum 1 at y = 0.
  FeasibilityProblem prob;
  prob.add_free("y", 1, 1);
  prob.set_map([](const FeasibilityProblem::Values& v) {
    const double y = v[0](0, 0);
    return Matrix{{y, 1.0}, {1.0, -y}};
  });
  const auto r = min_lambda_max(prob);
  EXPECT_NEAR(r.margin, 1.0, 1e-3);
  EXPECT_EQ(r.status, FeasibilityStatus::NotFound);
  EXPECT_GT(r.lower_bound, 0.0);
  EXPECT_LE(r.lower_bound, r.margin);
  EXPECT_EQ(r.attempts, 1);
}

TEST(MinLambdaMax, MarginalBoundary) {
  FeasibilityProblem prob;
  prob.add_free("y", 1, 1);
  prob.set_map([](const FeasibilityProblem::Values& v) {
    const double y = v[0](0, 0);
    return Matrix{{-y * y * 0.0 + y, 0.0}, {0.0, -y}};
  });
  EXPECT_EQ(min_lambda_max(prob).status, FeasibilityStatus::Marginal);
}

TEST(FindCertificate, NegativeIdentityIsFeasible) {
  const auto r = find_certificate(kFrCtMone, -Matrix::identity(2), Rate::ct(0.9));
  ASSERT_EQ(r.status, FeasibilityStatus::Feasible);
  ASSERT_TRUE(r.certificate);
  EXPECT_TRUE(check(*r.certificate, 0.0).holds);
}

TEST(FindCertificate, SkewWeightIsNotFound) {
  const auto r = find_certificate(kFrCtMone, Matrix{{0, 4}, {-4, 0}}, Rate::ct(0.01));
  EXPECT_EQ(r.status, FeasibilityStatus::NotFound);
  EXPECT_FALSE(r.certificate);
  EXPECT_GT(r.solver.margin, 0.0);
}

TEST(FindCertificate, DiscreteConeSmallWeight) {
  const auto r = find_certificate(kFrDtCone, Matrix{{0, 0.5}, {0.3, 0}}, Rate::dt(0.6));
  ASSERT_EQ(r.status, FeasibilityStatus::Feasible);
  EXPECT_TRUE(check(*r.certificate, 0.0).holds);
}

TEST(FindCertificate, DiscreteConeTooFast) {
  // rho must exceed the spectral radius 0.5 * sqrt(0.6) under diagonal scaling.
  const auto r = find_certificate(kFrDtCone, Matrix{{0, 0.5}, {0.3, 0}}, Rate::dt(0.3));
  EXPECT_EQ(r.status, FeasibilityStatus::NotFound);
}

TEST(FindCertificate, RecoversPlantedCertificates) {
  SplitMix64 rng(77);
  int found = 0;
  int total = 0;
  for (const ConditionId& cond : kAllConditions) {
    for (int trial = 0; trial < 6; ++trial) {
      const Certificate planted = testing_support::random_certificate(cond, 2 + trial % 4, rng);
      const auto r = find_certificate(cond, planted.w, planted.rate);
      ++total;
      if (r.status == FeasibilityStatus::Feasible) {
        ++found;
        EXPECT_TRUE(check(*r.certificate, 0.0).holds) << cond.name();
      }
    }
  }
  EXPECT_EQ(found, total);
}

TEST(FindCertificate, Deterministic) {
  const Matrix w{{0.2, -0.7, 0.1}, {0.4, -0.3, 0.5}, {-0.6, 0.2, 0.1}};
  const auto a = find_certificate(kFrCtMone, w, Rate::ct(0.2));
  const auto b = find_certificate(kFrCtMone, w, Rate::ct(0.2));
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.solver.theta, b.solver.theta);
}

TEST(CertificateProblem, MapMatchesAssembly) {
  SplitMix64 rng(5);
  for (const ConditionId& cond : kAllConditions) {
    const Matrix w = testing_support::random_matrix(3, 3, rng);
    const Rate rate = cond.time == TimeDomain::Continuous ? Rate::ct(0.4) : Rate::dt(0.7);
    const FeasibilityProblem prob = certificate_problem(cond, w, rate);
    const SymMatrix p = testing_support::random_spd(3, rng, 0.5, 2);
    const DiagMatrix q = testing_support::random_diag(3, rng, 0.5, 2);
    const Matrix l = prob.evaluate(prob.pack({p.matrix(), q.matrix()}));
    EXPECT_LE(max_abs_diff(l, assemble(cond, w, p, q, rate).matrix()), 1e-12) << cond.name();
  }
}

TEST(MinLambdaMax, SeparableToyIsMarginal) {
  FeasibilityProblem prob;
  prob.add_diagonal("t", 2);
  prob.set_normalization(2.0);
  prob.set_map([](const FeasibilityProblem::Values& v) {
    return Matrix{{v[0](0, 0) - 1.0, 0.0}, {0.0, v[0](1, 1) - 1.0}};
  });
  const auto r = min_lambda_max(prob);
  EXPECT_EQ(r.status, FeasibilityStatus::Marginal);
  EXPECT_NEAR(r.values[0](0, 0), 1.0, 1e-6);
  EXPECT_NEAR(r.values[0](1, 1), 1.0, 1e-6);
}

TEST(MinLambdaMax, OffDiagonalToyIsNotFound) {
  FeasibilityProblem prob;
  prob.add_free("t", 1, 1);
  prob.set_map([](const FeasibilityProblem::Values& v) {
    const double t = v[0](0, 0);
    return Matrix{{t, 2.0}, {2.0, -t}};
  });
  const auto r = min_lambda_max(prob);
  EXPECT_EQ(r.status, FeasibilityStatus::NotFound);
  EXPECT_GE(r.margin, 2.0 - 1e-12);
}

TEST(FindCertificate, DiscreteConeMarginIsLarge) {
  const auto r = find_certificate(kFrDtCone, Matrix{{0, 0.5}, {0.3, 0}}, Rate::dt(0.6));
  EXPECT_LE(r.solver.margin, -0.1);
  EXPECT_LE(r.certificate->margin, -0.1);
}

TEST(MinLambdaMax, NormalizationScaleLeavesDecisionInvariant) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const ConditionId cond = kAllConditions[static_cast<std::size_t>(trial) % kAllConditions.size()];
    const Certificate planted = testing_support::random_certificate(cond, 2 + trial % 3, rng);
    FeasibilityProblem base = certificate_problem(cond, planted.w, planted.rate);
    FeasibilityProblem scaled = certificate_problem(cond, planted.w, planted.rate);
    const double k = 3.0;
    scaled.set_normalization(k * base.normalization());
    const auto a = min_lambda_max(base);
    const auto b = min_lambda_max(scaled);
    EXPECT_EQ(a.status, b.status) << cond.name();
    EXPECT_EQ(a.margin < 0.0, b.margin < 0.0) << cond.name();
    EXPECT_NEAR(b.margin, k * a.margin, 1e-4 * k * std::max(1.0, std::abs(a.margin))) << cond.name();
  }
}

}  // namespace
}  // namespace contractnet
