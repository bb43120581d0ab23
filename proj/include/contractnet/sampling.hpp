#pragma once

// Seeded random instances: matrices, certificates for every cell and
// contracting plants. Used by the self-test and the property suites.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "contractnet/conditions.hpp"
#include "contractnet/integral_control.hpp"
#include "contractnet/linalg.hpp"
#include "contractnet/matrix.hpp"
#include "contractnet/parameterization.hpp"
#include "contractnet/rng.hpp"

namespace contractnet::sampling {

/// Box-Muller, so streams do not depend on the standard library.
inline double normal(SplitMix64& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double uniform(SplitMix64& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline Matrix random_matrix(std::size_t r, std::size_t c, SplitMix64& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

inline SymMatrix random_symmetric(std::size_t n, SplitMix64& rng) {
  const Matrix g = random_matrix(n, n, rng);
  return SymMatrix(0.5 * (g + g.transpose()));
}

/// Random orthogonal basis with eigenvalues uniform in [lo, hi].
inline SymMatrix random_spd(std::size_t n, SplitMix64& rng, double lo, double hi) {
  const SymEig basis = sym_eig(random_symmetric(n, rng));
  SymEig e{Vector(n), basis.vectors};
  for (double& v : e.values) v = uniform(rng, lo, hi);
  std::sort(e.values.begin(), e.values.end());
  return SymMatrix(spectral_apply(e, [](double x) { return x; }));
}

inline DiagMatrix random_diag(std::size_t n, SplitMix64& rng, double lo, double hi) {
  Vector d(n);
  for (double& v : d) v = uniform(rng, lo, hi);
  return DiagMatrix(d);
}

/// A strictly feasible certificate for `cond`: P, Q are drawn so that W = 0 is
/// strictly feasible at the drawn rate, then a random direction for W is
/// scaled to a fraction of the largest feasible step (the feasible set in W
/// is convex and contains 0).
inline Certificate random_certificate(const ConditionId& cond, std::size_t n, SplitMix64& rng) {
  const bool ct = cond.time == TimeDomain::Continuous;
  const Rate rate = ct ? Rate::ct(uniform(rng, 0.05, 0.6)) : Rate::dt(uniform(rng, 0.4, 0.95));
  const SymMatrix p = random_spd(n, rng, 0.5, 2.0);
  const auto eig = sym_eig(p);
  const double pmax = eig.values.back();
  const double pmin = eig.values.front();
  const double c = rate.value;
  const bool fr = cond.architecture == Architecture::FiringRate;
  const bool cone = cond.nonlinearity == Nonlinearity::Cone;

  double qlo = 0.0;
  double qhi = 0.0;
  if (fr) {
    // Q must dominate a multiple of P.
    double need = 0.0;
    if (ct) need = cone ? pmax / (2.0 * (1.0 - c)) : pmax / (4.0 * (1.0 - c));
    else need = cone ? pmax : 0.5 * pmax;
    qlo = 1.2 * need;
    qhi = 2.0 * need;
  } else {
    // Q must be dominated by a multiple of P.
    double cap = 0.0;
    if (ct) cap = cone ? 2.0 * (1.0 - c) * pmin : 4.0 * (1.0 - c) * pmin;
    else cap = cone ? c * c * pmin : 2.0 * c * c * pmin;
    qlo = 0.3 * cap;
    qhi = 0.8 * cap;
  }
  const DiagMatrix q = random_diag(n, rng, qlo, qhi);

  const Matrix dir = random_matrix(n, n, rng);
  auto feasible = [&](double s) { return check(cond, s * dir, p, q, rate, 0.0).margin < 0.0; };
  double lo = 0.0;
  double hi = 1.0;
  while (feasible(hi) && hi < 1e6) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  const double s = lo * uniform(rng, 0.3, 0.9);
  Certificate cert{cond, s * dir, p, q, rate, 0.0};
  return with_margin(cert);
}

/// Free variables d, X, Y drawn from a standard normal; eps <= 0 selects
/// default_shift(Y).
inline ParamSeed random_param_seed(std::size_t n, double c, SplitMix64& rng, double eps = 0.0) {
  Vector d(n);
  for (double& x : d) x = normal(rng);
  const Matrix x = random_matrix(n, n, rng);
  const Matrix y = random_matrix(n, n, rng);
  return ParamSeed::from_free(std::move(d), x, y, eps > 0.0 ? eps : default_shift(y), c);
}

/// Contracting plant: W from the direct parameterization at rate c, with
/// random B and C scaled by 1/sqrt(n).
inline PlantModel random_plant(std::size_t n, std::size_t m, std::size_t p, double delta, double c, SplitMix64& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Vector d(n);
  for (double& x : d) x = uniform(rng, -0.3, 0.3);
  const Matrix y = Matrix::identity(n) + 0.3 * scale * random_matrix(n, n, rng);
  const Generated g = generate(ParamSeed::from_free(std::move(d), scale * random_matrix(n, n, rng), y, 1e-2, c));
  PlantModel plant{g.w, scale * random_matrix(n, m, rng), scale * random_matrix(p, n, rng), delta, g.certificate()};
  return plant;
}

/// Near-collocated plant, C = B^T + perturbation. With p < n and delta < 1,
/// generic (B, C) pairs leave a residual in the gain LMI that Y cannot cancel;
/// aligning the outputs with the inputs removes it.
inline PlantModel random_tracking_plant(std::size_t n, std::size_t m, double delta, double c, SplitMix64& rng) {
  PlantModel plant = random_plant(n, m, m, delta, c, rng);
  plant.c = plant.b.transpose() + (0.3 / std::sqrt(static_cast<double>(n))) * random_matrix(m, n, rng);
  return plant;
}

}  // namespace contractnet::sampling
