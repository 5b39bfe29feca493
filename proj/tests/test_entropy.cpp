#include "crossdiff/entropy.hpp"
#include "crossdiff/grid.hpp"

#include <catch_amalgamated.hpp>

using namespace crossdiff;
using Catch::Approx;

namespace {

EntropyParams params(double s, int n, double eps = 0.0, double pi = 1.0) { return {s, Vector::Constant(n, pi), eps}; }

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

}  // namespace

TEST_CASE("entropy density examples") {
  for (double s : {0.3, 1.0, 2.5})
    for (double eps : {0.0, 0.1}) CHECK(entropy_density(params(s, 3, eps), Vector::Ones(3)) == Approx(0.0).margin(1e-15));
  CHECK(entropy_density(params(1.0, 1), vec({std::exp(1.0)})) == Approx(1.0).epsilon(1e-15));
  CHECK(entropy_density(params(2.0, 1), vec({2.0})) == Approx(1.0).epsilon(1e-15));
  CHECK(entropy_density(params(1.0, 1), vec({0.0})) == 1.0);
  CHECK(entropy_density(params(0.5, 1), vec({0.0})) == Approx(1.0));
  CHECK_THROWS_AS(entropy_density(params(1.0, 1), vec({-1.0})), Error);
}

TEST_CASE("entropy variable examples") {
  for (double s : {0.5, 1.0, 3.0}) CHECK(entropy_variable(params(s, 2, 0.2, 1.7), Vector::Ones(2)).isZero(1e-15));
  CHECK(entropy_variable(params(1.0, 1, 0.0, 2.0), vec({std::exp(1.0)}))[0] == Approx(2.0).epsilon(1e-15));
  CHECK(entropy_variable(params(2.0, 1), vec({3.0}))[0] == Approx(4.0).epsilon(1e-15));
  CHECK_THROWS_AS(entropy_variable(params(1.0, 1), vec({0.0})), Error);
}

TEST_CASE("hessian examples") {
  const Vector h = hessian(params(1.0, 2), vec({2.0, 4.0}));
  CHECK(h[0] == Approx(0.5));
  CHECK(h[1] == Approx(0.25));
  const Vector at_one = hessian(params(1.5, 2, 0.3, 2.0), Vector::Ones(2));
  CHECK(at_one[0] == Approx(1.5 * 2.0 + 0.3));
  CHECK(hessian(params(2.0, 1), vec({3.0}))[0] == Approx(2.0));
  CHECK_THROWS_AS(hessian(params(1.0, 1), vec({0.0})), Error);
}

TEST_CASE("inverse transform examples") {
  CHECK(inverse_transform(params(0.5, 3, 0.1), Vector::Zero(3)).isApprox(Vector::Ones(3), 1e-14));
  CHECK(inverse_transform(params(1.0, 1), vec({std::log(5.0)}))[0] == Approx(5.0).epsilon(1e-14));
  const auto p = params(0.5, 1, 0.1);
  const Vector w = entropy_variable(p, vec({4.0}));
  CHECK(std::abs(inverse_transform(p, w)[0] - 4.0) <= 1e-12);
  CHECK_THROWS_AS(inverse_transform(params(2.0, 1, 0.0), vec({1.0})), Error);
  // exp(-2e5) is not a double.
  CHECK_THROWS_AS(inverse_transform(params(2.0, 1, 1e-4), vec({-20.0})), ConvergenceError);
}

TEST_CASE("finite-difference gradient and Hessian") {
  Random rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 4;
    EntropyParams p{rng.log_uniform(0.2, 4.0), Vector(n), trial % 2 ? rng.log_uniform(1e-4, 0.5) : 0.0};
    for (int i = 0; i < n; ++i) p.pi[i] = rng.log_uniform(0.1, 10);
    Vector u(n);
    for (int i = 0; i < n; ++i) u[i] = rng.log_uniform(1e-2, 1e2);
    const Vector w = entropy_variable(p, u);
    const Vector H = hessian(p, u);
    for (int i = 0; i < n; ++i) {
      // The density is a sum over species; differentiate the i-th summand
      // with the five-point stencil.
      const EntropyParams pi_only{p.s, Vector::Constant(1, p.pi[i]), p.eps};
      const double h = 1e-3 * u[i];
      auto density = [&](double v) { return entropy_density(pi_only, Vector::Constant(1, u[i] + v)); };
      auto variable = [&](double v) { return entropy_variable(pi_only, Vector::Constant(1, u[i] + v))[0]; };
      auto stencil = [&](auto f) { return (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h); };
      CHECK(std::abs(stencil(density) - w[i]) <= 1e-6 * std::max(std::abs(w[i]), 1e-2));
      CHECK(stencil(variable) == Approx(H[i]).epsilon(1e-6));
      CHECK(H[i] > 0);
    }
  }
}

TEST_CASE("inverse transform round trips") {
  Random rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const double s = trial % 3 == 0 ? 1.0 : rng.log_uniform(0.2, 4.0);
    const double eps = s == 1.0 && trial % 2 ? 0.0 : rng.log_uniform(1e-4, 0.9);
    EntropyParams p{s, Vector::Constant(3, rng.log_uniform(0.1, 10)), eps};
    // For s > 1 values of w below -s pi/(s-1) are reached only through
    // eps log u; keep u = exp((w + s pi/(s-1))/eps) inside the double range.
    // Likewise for s < 1 above s pi/(1-s).
    const double bound = s * p.pi[0] / std::abs(s - 1.0) + 600.0 * eps;
    const double w_min = s > 1.0 ? std::max(-20.0, -bound) : -20.0;
    const double w_max = s < 1.0 ? std::min(20.0, bound) : 20.0;
    Vector u(3), w(3);
    for (int i = 0; i < 3; ++i) {
      u[i] = rng.log_uniform(1e-3, 1e3);
      w[i] = rng.uniform(w_min, w_max);
    }
    const Vector back = inverse_transform(p, entropy_variable(p, u));
    for (int i = 0; i < 3; ++i) CHECK(back[i] == Approx(u[i]).epsilon(1e-10));
    const Vector forth = entropy_variable(p, inverse_transform(p, w));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(forth[i] - w[i]) <= 1e-10 * std::max(1.0, std::abs(w[i])));
  }
}

TEST_CASE("entropy is nonnegative and vanishes only at one") {
  Random rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = params(rng.log_uniform(0.2, 4), 2, trial % 2 ? 0.1 : 0.0, rng.log_uniform(0.1, 10));
    Vector u(2);
    u << rng.log_uniform(1e-3, 1e3), rng.log_uniform(1e-3, 1e3);
    CHECK(entropy_density(p, u) > 0);
  }
}

TEST_CASE("exponents near one use the logarithmic branch") {
  const double z = 3.7;
  CHECK(entropy_scalar(1.0 + 1e-9, z) == entropy_scalar(1.0, z));
  // Continuity across the band edge.
  CHECK(entropy_scalar(1.0 + 1e-6, z) == Approx(entropy_scalar(1.0, z)).epsilon(1e-5));
  CHECK(entropy_variable_scalar(1.0 - 1e-6, 1.0, 0.0, z) == Approx(std::log(z)).epsilon(1e-5));
}

TEST_CASE("entropy_total on constant fields") {
  DomainConfig dom;
  dom.length = 2.0;
  dom.cells = 7;
  const auto p = params(1.5, 2, 0.01);
  CHECK(entropy_total(p, GridState::from_density(dom, Matrix::Ones(7, 2))) == Approx(0.0).margin(1e-15));
  const Matrix c = Matrix::Constant(7, 2, 3.0);
  CHECK(entropy_total(p, GridState::from_density(dom, c)) ==
        Approx(2.0 * entropy_density(p, Vector::Constant(2, 3.0))).epsilon(1e-14));
}
