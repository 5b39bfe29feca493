#include "crossdiff/balance.hpp"
#include "crossdiff/symmetry.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <functional>
#include <numeric>

using namespace crossdiff;
using Catch::Approx;

namespace {

Matrix cycle_matrix() {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 2) = a(2, 1) = a(1, 0) = 1.0;
  return a;
}

Matrix kolmogorov_example() {
  Matrix a(3, 3);
  a << 0, 1, 3, 2, 0, 6, 1, 1, 0;
  return a;
}

// Reference answer by enumerating every simple directed cycle: reversible iff
// every edge has its reverse and the two rate products agree on every cycle.
bool reversible_by_enumeration(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && (a(i, j) > 0) != (a(j, i) > 0)) return false;
  bool ok = true;
  std::vector<int> path;
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> dfs = [&](int start, int v) {
    for (int w = start; w < n && ok; ++w) {
      if (w == v || !(a(v, w) > 0)) continue;
      if (w == start && path.size() >= 3) {
        double fwd = 1, bwd = 1;
        for (std::size_t k = 0; k < path.size(); ++k) {
          const int x = path[k], y = path[(k + 1) % path.size()];
          fwd *= a(x, y);
          bwd *= a(y, x);
        }
        if (std::abs(fwd - bwd) > 1e-12 * std::max(fwd, bwd)) ok = false;
      } else if (w > start && !used[static_cast<std::size_t>(w)]) {
        used[static_cast<std::size_t>(w)] = 1;
        path.push_back(w);
        dfs(start, w);
        path.pop_back();
        used[static_cast<std::size_t>(w)] = 0;
      }
    }
  };
  for (int s = 0; s < n && ok; ++s) {
    path = {s};
    used.assign(static_cast<std::size_t>(n), 0);
    used[static_cast<std::size_t>(s)] = 1;
    dfs(s, s);
  }
  return ok;
}

Matrix random_reversible(Random& rng, int n, double density) {
  Vector pi(n);
  for (int i = 0; i < n; ++i) pi[i] = rng.log_uniform(0.1, 10);
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = rng.uniform(0, 2);
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < density) {
        const double c = rng.log_uniform(0.1, 10);
        a(i, j) = c / pi[i];
        a(j, i) = c / pi[j];
      }
  }
  return a;
}

}  // namespace

TEST_CASE("communicating classes") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = a(1, 0) = 1;
  CHECK(communicating_classes(TransitionGraph(a)) == Partition{{0, 1}, {2}});
  CHECK(communicating_classes(TransitionGraph(cycle_matrix())) == Partition{{0, 1, 2}});
  Matrix one_way = Matrix::Zero(2, 2);
  one_way(0, 1) = 1;
  CHECK(communicating_classes(TransitionGraph(one_way)) == Partition{{0}, {1}});
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 1) = -1;
  CHECK_THROWS_AS(TransitionGraph(neg), Error);
}

TEST_CASE("communicating classes are permutation equivariant") {
  Random rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 6;
    Matrix a = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && rng.uniform() < 0.3) a(i, j) = 1.0;
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int k = n - 1; k > 0; --k) std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(rng.uniform(0, k + 1))]);
    Matrix b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) b(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) = a(i, j);

    Partition mapped;
    for (auto cls : communicating_classes(TransitionGraph(a))) {
      for (auto& v : cls) v = perm[static_cast<std::size_t>(v)];
      std::sort(cls.begin(), cls.end());
      mapped.push_back(cls);
    }
    std::sort(mapped.begin(), mapped.end());
    auto direct = communicating_classes(TransitionGraph(b));
    std::sort(direct.begin(), direct.end());
    CHECK(mapped == direct);
  }
}

TEST_CASE("check_conditions examples") {
  Matrix sym(3, 3);
  sym << 1, 2, 3, 2, 1, 4, 3, 4, 1;
  auto c = check_conditions(sym);
  CHECK(c.detailed_balance());
  REQUIRE(c.measure);
  for (int i = 0; i < 3; ++i) CHECK(c.measure->pi[i] == Approx(1.0 / 3).epsilon(1e-14));

  c = check_conditions(cycle_matrix());
  CHECK_FALSE(c.a1_holds);
  REQUIRE(c.a1_witness);
  CHECK(*c.a1_witness == std::make_pair(0, 2));
  CHECK_FALSE(c.measure);

  const Matrix k = kolmogorov_example();
  CHECK(k(0, 1) * k(1, 2) * k(2, 0) == 6.0);
  CHECK(k(0, 2) * k(2, 1) * k(1, 0) == 6.0);
  c = check_conditions(k);
  CHECK(c.detailed_balance());
  CHECK_FALSE(c.a1_witness);
  CHECK_FALSE(c.a2_witness);
}

TEST_CASE("check_conditions reports a violating cycle") {
  Matrix a = kolmogorov_example();
  a(1, 2) = 7.0;  // forward product 7, backward 6
  const auto c = check_conditions(a);
  CHECK(c.a1_holds);
  CHECK_FALSE(c.a2_holds);
  REQUIRE(c.a2_witness);
  const auto& w = *c.a2_witness;
  CHECK(w.states.size() == 3);
  double fwd = 1, bwd = 1;
  for (std::size_t k = 0; k < w.states.size(); ++k) {
    const int i = w.states[k], j = w.states[(k + 1) % w.states.size()];
    fwd *= a(i, j);
    bwd *= a(j, i);
  }
  CHECK(fwd == Approx(w.forward));
  CHECK(bwd == Approx(w.backward));
  CHECK(std::abs(w.forward - w.backward) > 0.5);
}

TEST_CASE("invariant measure examples") {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = 2;
  a(1, 0) = 1;
  auto m = invariant_measure(a);
  CHECK(m.pi[0] == Approx(1.0 / 3).epsilon(1e-14));
  CHECK(m.pi[1] == Approx(2.0 / 3).epsilon(1e-14));

  m = invariant_measure(kolmogorov_example());
  CHECK(m.pi[0] == Approx(2.0 / 9).epsilon(1e-14));
  CHECK(m.pi[1] == Approx(1.0 / 9).epsilon(1e-14));
  CHECK(m.pi[2] == Approx(6.0 / 9).epsilon(1e-14));
  CHECK(m.normalized);

  CHECK_THROWS_AS(invariant_measure(cycle_matrix()), Error);
}

TEST_CASE("three-species measure from rate ratios") {
  Random rng(21);
  for (int k = 0; k < 100; ++k) {
    const double a12 = rng.log_uniform(0.01, 100), a21 = rng.log_uniform(0.01, 100);
    const double a13 = rng.log_uniform(0.01, 100), a31 = rng.log_uniform(0.01, 100);
    const double a23 = rng.log_uniform(0.01, 100);
    Matrix a(3, 3);
    a << rng.uniform(), a12, a13, a21, rng.uniform(), a23, a31, a12 * a23 * a31 / (a13 * a21), rng.uniform();
    const Vector pi = invariant_measure(a).pi;
    const double c = 1.0 / (1.0 + a12 / a21 + a13 / a31);
    CHECK(pi[0] == Approx(c).epsilon(1e-12));
    CHECK(pi[1] == Approx(c * a12 / a21).epsilon(1e-12));
    CHECK(pi[2] == Approx(c * a13 / a31).epsilon(1e-12));
  }
}

TEST_CASE("constructed measure satisfies every balance equation") {
  Random rng(7);
  for (int k = 0; k < 200; ++k) {
    const Matrix a = random_reversible(rng, 2 + k % 7, 0.6);
    const auto c = check_conditions(a);
    REQUIRE(c.measure);
    CHECK(detailed_balance_defect(a, c.measure->pi) <= 1e-12);
    CHECK(c.measure->pi.sum() == Approx(1.0));
    CHECK((c.measure->pi.array() > 0).all());
  }
}

TEST_CASE("tree-potential verdict agrees with cycle enumeration") {
  Random rng(13);
  int reversible = 0, not_reversible = 0;
  for (int k = 0; k < 400; ++k) {
    const int n = 2 + k % 5;
    Matrix a = random_reversible(rng, n, 0.7);
    const double mode = rng.uniform();
    if (mode < 0.3) {
      // Break one rate of an existing pair.
      const int i = static_cast<int>(rng.uniform(0, n)), j = (i + 1) % n;
      if (a(i, j) > 0) a(i, j) *= rng.uniform(1.5, 3);
    } else if (mode < 0.45) {
      const int i = static_cast<int>(rng.uniform(0, n)), j = (i + 1) % n;
      a(i, j) = 1.0;
      a(j, i) = 0.0;
    } else if (mode < 0.6) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j) a(i, j) = rng.uniform() < 0.5 ? rng.uniform(0.1, 2) : 0.0;
    }
    const bool expected = reversible_by_enumeration(a);
    (expected ? reversible : not_reversible)++;
    CHECK(check_conditions(a).detailed_balance() == expected);
  }
  CHECK(reversible > 50);
  CHECK(not_reversible > 50);
}

TEST_CASE("symmetry_check examples") {
  auto sys = CoefficientSystem::zeros(3, 1.0);
  sys.a = kolmogorov_example();
  sys.a0.setOnes();
  CHECK(symmetry_check(sys, invariant_measure(sys.a).pi, 200).passed());

  auto cyc = CoefficientSystem::zeros(3, 1.0);
  cyc.a = cycle_matrix();
  const auto rep = symmetry_check(cyc, Vector::Ones(3), 50);
  CHECK_FALSE(rep.passed());
  CHECK(rep.witness_u);
  CHECK(rep.witness_pair);

  auto single = CoefficientSystem::zeros(1, 0.5);
  single.a << 2;
  CHECK(symmetry_check(single, Vector::Ones(1), 10).passed());

  CHECK_THROWS_AS(symmetry_check(sys, Vector::Zero(3), 10), Error);
  CHECK_THROWS_AS(symmetry_check(sys, Vector::Ones(3), 0), Error);
}

TEST_CASE("H(u)A(u) is symmetric exactly under detailed balance") {
  Random rng(17);
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + k % 4;
    auto sys = CoefficientSystem::zeros(n, std::vector<double>{0.5, 1.0, 2.0}[static_cast<std::size_t>(k % 3)]);
    sys.a = random_reversible(rng, n, 0.8);
    if (k % 2 == 1) {
      const int i = static_cast<int>(rng.uniform(0, n)), j = (i + 1) % n;
      sys.a(i, j) = sys.a(i, j) * 2.0 + 0.5;
    }
    const auto cert = check_conditions(sys.a);
    const Vector pi = cert.measure ? cert.measure->pi : Vector::Ones(n);
    CHECK(symmetry_check(sys, pi, 100, static_cast<std::uint64_t>(k)).passed() == cert.detailed_balance());
  }
}
