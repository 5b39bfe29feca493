#include "crossdiff/config.hpp"

#include <catch_amalgamated.hpp>

using namespace crossdiff;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

const char* kMinimal = R"(
[system]
n = 2
a = 1 2; 3 4
)";

}  // namespace

TEST_CASE("minimal configuration uses defaults") {
  const auto cfg = parse_config(kMinimal);
  CHECK(cfg.sys.n == 2);
  CHECK(cfg.sys.s == 1.0);
  CHECK(cfg.sys.a == (Matrix(2, 2) << 1, 2, 3, 4).finished());
  CHECK(cfg.sys.a0.isZero());
  CHECK_FALSE(cfg.sys.has_reaction());
  CHECK_FALSE(cfg.pi);
  CHECK(cfg.dom.cells == DomainConfig{}.cells);
  CHECK(cfg.initial.n() == 2);
  CHECK(cfg.run.seed == 1);
  // pi_1 a_12 = pi_2 a_21.
  CHECK(cfg.weights().isApprox((Vector(2) << 0.6, 0.4).finished()));
}

TEST_CASE("both matrix syntaxes give the same matrix") {
  const auto inline_rows = parse_config(kMinimal);
  const auto continued = parse_config(R"(
[system]
n = 2
a =
  1 2
  3 4   # trailing comment
)");
  CHECK(inline_rows.sys.a == continued.sys.a);
}

TEST_CASE("full example") {
  const auto cfg = parse_config(R"(
[system]
n = 3
s = 0.5
a0 = 0.1
a =
  1 0 1
  0 1 0
  1 0 1
b0 = 1 2 3
b = 1 0 0; 0 1 0; 0 0 1
sigma = 0.5
pi = 1 2 3

[domain]
length = 2
cells = 40
T = 0.5
tau = 0.01
eps = 0.02
eta = 0.3

[initial]
type = piecewise
u1 = 0:1 2:3
u2 = 0:2
u3 = 0:1 1:1 1.5:4

[run]
seed = 42
samples = 500
lemma = general
output = out/x
record_every = 5
jobs = 3
)");
  CHECK(cfg.sys.s == 0.5);
  CHECK(cfg.sys.a0 == Vector::Constant(3, 0.1));
  CHECK(cfg.sys.b0 == (Vector(3) << 1, 2, 3).finished());
  CHECK(cfg.sys.b == Matrix::Identity(3, 3));
  CHECK(cfg.sys.sigma == 0.5);
  REQUIRE(cfg.pi);
  CHECK(*cfg.pi == (Vector(3) << 1, 2, 3).finished());
  CHECK(cfg.dom.length == 2);
  CHECK(cfg.dom.cells == 40);
  CHECK(cfg.dom.eta == 0.3);
  const Matrix u = cfg.initial.sample(cfg.dom);
  CHECK(u(0, 0) == Approx(1.025));
  CHECK(u(39, 1) == 2);
  CHECK(u(39, 2) == 4);
  CHECK(cfg.run.seed == 42);
  CHECK(cfg.run.samples == 500);
  CHECK(cfg.run.lemma == "general");
  CHECK(cfg.run.output == "out/x");
  CHECK(cfg.run.record_every == 5);
  CHECK(cfg.run.jobs == 3);
}

TEST_CASE("initial data types") {
  auto cfg = parse_config(std::string(kMinimal) + "[initial]\ntype = constant\nvalues = 2 3\n");
  CHECK(cfg.initial.sample(cfg.dom).col(1).isConstant(3.0));

  cfg = parse_config(std::string(kMinimal) + "[domain]\ncells = 4\n[initial]\ntype = sampled\nu1 = 1 2 3 4\nu2 = 4 3 2 1\n");
  CHECK(cfg.initial.sample(cfg.dom)(2, 1) == 2);

  cfg = parse_config(std::string(kMinimal) + "[initial]\ntype = cosine\nmean = 1\namplitude = 0.5 0\nmode = 2\n");
  const Matrix u = cfg.initial.sample(cfg.dom);
  CHECK(u(0, 0) == Approx(1 + 0.5 * std::cos(2 * std::numbers::pi * cfg.dom.centers()[0])));
  CHECK(u.col(1).isConstant(1.0));
}

TEST_CASE("counterexample data implies the cyclic system") {
  auto cfg = parse_config("[domain]\ncells = 256\neps = 0\n[initial]\ntype = counterexample\nvariant = 2\na20 = 2\na30 = 0.5\n");
  CHECK(cfg.sys.n == 3);
  CHECK(cfg.sys.a(0, 2) == 1);
  CHECK(cfg.sys.a0 == (Vector(3) << 1, 2, 0.5).finished());
  REQUIRE(cfg.counterexample);
  CHECK(cfg.counterexample->variant == CounterexampleVariant::positive_a0);
  CHECK(cfg.weights() == Vector::Ones(3));

  CHECK_THROWS_WITH(parse_config("[domain]\ncells = 16\n[initial]\ntype = counterexample\n"),
                    ContainsSubstring("resolve"));
}

TEST_CASE("errors carry line numbers") {
  CHECK_THROWS_WITH(parse_config("[system]\nn = 2\na = 1 2; 3\n"), ContainsSubstring("line 3"));
  CHECK_THROWS_WITH(parse_config("[system]\nn = 2\na = 1 x; 3 4\n"), ContainsSubstring("line 3"));
  CHECK_THROWS_WITH(parse_config("[system]\nn = 1\na = 1\nfoo = 2\n"), ContainsSubstring("line 4"));
  CHECK_THROWS_WITH(parse_config("[system]\nn = 1\na = 1\n[domain]\ncells = 2.5\n"), ContainsSubstring("line 5"));
  CHECK_THROWS_WITH(parse_config("[sys]\n"), ContainsSubstring("line 1"));
  CHECK_THROWS_WITH(parse_config("n = 1\n"), ContainsSubstring("outside a section"));
  CHECK_THROWS_WITH(parse_config("[system]\nn = 1\nn = 2\n"), ContainsSubstring("duplicate key"));
  CHECK_THROWS_WITH(parse_config("[system]\nn = 1\njunk\n"), ContainsSubstring("line 3"));
  CHECK_THROWS_WITH(parse_config("[system]\nn = 1\n"), ContainsSubstring("missing key 'a'"));
  CHECK_THROWS_WITH(parse_config(std::string(kMinimal) + "[initial]\ntype = spline\n"), ContainsSubstring("unknown type"));
  CHECK_THROWS_WITH(parse_config("[system]\nn = 2\na = 1 1; 1 1\npi = 1 -1\n"), ContainsSubstring("positive"));
  CHECK_THROWS_WITH(parse_config(std::string(kMinimal) + "[initial]\ntype = piecewise\nu1 = 0:1 0:2\nu2 = 0:1\n"),
                    ContainsSubstring("increase"));
  CHECK_THROWS_AS(load_config("/nonexistent/path.cfg"), ConfigError);
}

TEST_CASE("shipped configurations parse") {
  for (const char* name : {"docs/example.cfg", "docs/configs/heat.cfg", "docs/configs/cycle.cfg",
                           "docs/configs/kolmogorov.cfg"}) {
    INFO(name);
    CHECK_NOTHROW(load_config(std::string(CROSSDIFF_SOURCE_DIR) + "/" + name));
  }
}
