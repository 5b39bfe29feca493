#ifndef CROSSDIFF_TESTS_SYSTEMS_HPP
#define CROSSDIFF_TESTS_SYSTEMS_HPP

// Random coefficient systems that satisfy the hypotheses of one lower bound.

#include "crossdiff/mobility.hpp"

#include <cmath>

namespace crossdiff::testing {

struct WeightedSystem {
  CoefficientSystem sys;
  Vector pi;
};

inline Matrix random_nonnegative(Random& rng, int n, double density = 0.7) {
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.uniform() < density) a(i, j) = rng.log_uniform(0.05, 5);
  return a;
}

/// pi_i a_ij = pi_j a_ji with random pi.
inline WeightedSystem random_detailed_balance(Random& rng, int n, double s, double density = 0.8) {
  WeightedSystem w{CoefficientSystem::zeros(n, s), Vector(n)};
  for (int i = 0; i < n; ++i) w.pi[i] = rng.log_uniform(0.2, 5);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < density) {
        const double c = rng.log_uniform(0.05, 5);
        w.sys.a(i, j) = c / w.pi[i];
        w.sys.a(j, i) = c / w.pi[j];
      }
  for (int i = 0; i < n; ++i) {
    w.sys.a(i, i) = rng.log_uniform(0.1, 3);
    w.sys.a0[i] = rng.uniform() < 0.5 ? 0.0 : rng.log_uniform(0.01, 2);
  }
  return w;
}

inline void random_a0(Random& rng, CoefficientSystem& sys) {
  for (int i = 0; i < sys.n; ++i) sys.a0[i] = rng.uniform() < 0.5 ? 0.0 : rng.log_uniform(0.01, 2);
}

/// Generic nonnegative coefficients with diagonal large enough for eta0 > 0.
inline WeightedSystem random_eta0(Random& rng, int n, double s) {
  WeightedSystem w{CoefficientSystem::zeros(n, s), Vector::Ones(n)};
  w.sys.a = random_nonnegative(rng, n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = std::sqrt(w.sys.a(i, j)) - std::sqrt(w.sys.a(j, i));
      sum += d * d;
    }
    w.sys.a(i, i) = s / (2 * (s + 1)) * sum + rng.log_uniform(0.01, 2);
  }
  random_a0(rng, w.sys);
  return w;
}

inline WeightedSystem random_eta2(Random& rng, int n, double s) {
  WeightedSystem w{CoefficientSystem::zeros(n, s), Vector::Ones(n)};
  w.sys.a = random_nonnegative(rng, n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) sum += s * (w.sys.a(i, j) + w.sys.a(j, i)) - 2 * std::sqrt(w.sys.a(i, j) * w.sys.a(j, i));
    w.sys.a(i, i) = sum / (2 * (s + 1)) + rng.log_uniform(0.01, 2);
  }
  random_a0(rng, w.sys);
  return w;
}

inline WeightedSystem random_db_superlinear(Random& rng, int n, double s) {
  WeightedSystem w = random_detailed_balance(rng, n, s);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) sum += w.sys.a(i, j);
    w.sys.a(i, i) = (s - 1) / (s + 1) * sum + rng.log_uniform(0.01, 2);
  }
  return w;
}

/// Every pair communicates in both directions; s drawn below s0.
inline WeightedSystem random_small_exponent(Random& rng, int n) {
  WeightedSystem w{CoefficientSystem::zeros(n, 1.0), Vector::Ones(n)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) w.sys.a(i, j) = rng.log_uniform(0.1, 5);
  for (int i = 0; i < n; ++i) w.sys.a(i, i) = rng.uniform() < 0.3 ? 0.0 : rng.log_uniform(0.05, 3);
  double s0 = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      s0 = std::min(s0, 2 * std::sqrt(w.sys.a(i, j) * w.sys.a(j, i)) / (w.sys.a(i, j) + w.sys.a(j, i)));
  w.sys.s = s0 * rng.uniform(0.05, 1.0);
  random_a0(rng, w.sys);
  return w;
}

/// A system satisfying the hypotheses of `bound`; draw index k picks sizes
/// and exponents deterministically.
inline WeightedSystem random_for_bound(LowerBound bound, Random& rng, int k) {
  const int n = 2 + k % 4;
  switch (bound) {
    case LowerBound::general: {
      WeightedSystem w{CoefficientSystem::zeros(n, rng.log_uniform(0.2, 4)), Vector(n)};
      w.sys.a = random_nonnegative(rng, n);
      for (int i = 0; i < n; ++i) {
        w.sys.a(i, i) = rng.log_uniform(0.01, 3);
        w.pi[i] = rng.log_uniform(0.2, 5);
      }
      random_a0(rng, w.sys);
      return w;
    }
    case LowerBound::db_sublinear:
      return random_detailed_balance(rng, n, k % 3 == 0 ? 1.0 : rng.uniform(0.1, 1.0));
    case LowerBound::weak_cross_sublinear:
      return random_eta0(rng, n, k % 3 == 0 ? 1.0 : rng.uniform(0.1, 1.0));
    case LowerBound::small_exponent:
      return random_small_exponent(rng, n);
    case LowerBound::db_superlinear:
      return random_db_superlinear(rng, n, rng.uniform(1.05, 3.0));
    case LowerBound::weak_cross_superlinear:
      return random_eta2(rng, n, rng.uniform(1.05, 3.0));
    case LowerBound::regularized:
      return k % 2 ? random_detailed_balance(rng, n, rng.log_uniform(0.2, 3)) : random_eta0(rng, n, rng.uniform(0.2, 1.0));
  }
  return {};
}

}  // namespace crossdiff::testing

#endif  // CROSSDIFF_TESTS_SYSTEMS_HPP
