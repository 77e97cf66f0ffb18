#include <catch2/catch_amalgamated.hpp>

#include "orbiflow/exactness.hpp"
#include "orbiflow/fields.hpp"

using namespace orbiflow;

namespace {
const char* kOddWave = "(sum (prod (sinx 0) (cosx 1)) (prod (cosx 0) (sinx 1)))";
}

TEST_CASE("combinator parsing and evaluation") {
  ScalarField f("(sum (const 0.5) (scale -0.5 (cosx 0)))");  // sin^2(pi x)
  for (double x : {0.0, 0.1, 0.25, 0.7}) {
    double expect = std::sin(M_PI * x) * std::sin(M_PI * x);
    CHECK(f(Vec{x, 0.3}) == Catch::Approx(expect).margin(1e-14));
  }
  ScalarField g("(cosx 1 0.25)");
  CHECK(g(Vec{0.0, 0.25}) == Catch::Approx(1.0).margin(1e-14));
  ScalarField b("(bumpx 0 0.5 0.1)");
  CHECK(b(Vec{0.5, 0.0}) == Catch::Approx(1.0).margin(1e-14));
  CHECK(b(Vec{0.61, 0.0}) == 0.0);
  CHECK(b(Vec{0.45, 0.0}) > 0.0);

  // parse errors
  REQUIRE_THROWS_AS(ScalarField("(unknown 1)"), Error);
  REQUIRE_THROWS_AS(ScalarField("(sum (const 1))"), Error);
  REQUIRE_THROWS_AS(ScalarField("(bumpx 0 0.5 -1)"), Error);
}

TEST_CASE("expression serialization round-trips") {
  std::string src = "(sum (prod (sinx 0) (cosx 1)) (scale -0.5 (bumpx 1 0.25 0.125)))";
  auto tree = expr::parse(src);
  std::string printed = expr::to_string(tree);
  auto tree2 = expr::parse(printed);
  REQUIRE(expr::to_string(tree2) == printed);
  ScalarField f(src), g(printed);
  SplitMix64 rng(5);
  for (int i = 0; i < 100; ++i) {
    Vec p{rng.uniform(), rng.uniform()};
    REQUIRE(f(p) == Catch::Approx(g(p)).margin(1e-15));
  }
}

TEST_CASE("equivariance validation") {
  auto pc = QuotientPresentation::pillowcase();
  // odd components are equivariant for the half-turn
  REQUIRE_NOTHROW(EquivariantVectorField(
      pc, {std::string("(scale 0.2 ") + kOddWave + ")", std::string("(scale 0.4 ") + kOddWave + ")"}));
  // constants are not
  REQUIRE_THROWS_AS(EquivariantVectorField(pc, {"(const 1)", "(const 0)"}), Error);
}

TEST_CASE("form invariance and closedness validation") {
  auto t2 = QuotientPresentation::torus(2);
  auto pc = QuotientPresentation::pillowcase();
  // d(sin(2 pi y)) has no dx part; (sin(2 pi y), 0) is not closed
  REQUIRE_THROWS_AS(BasicOneForm(t2, {"(sinx 1)", "(const 0)"}), Error);
  // constant forms are closed on the torus but not invariant on the quotient
  REQUIRE_NOTHROW(BasicOneForm(t2, {"(const 1)", "(const 0)"}));
  REQUIRE_THROWS_AS(BasicOneForm(pc, {"(const 1)", "(const 0)"}), Error);
  // odd-coefficient closed form passes on the quotient
  REQUIRE_NOTHROW(BasicOneForm(
      pc, {std::string("(scale -1 ") + kOddWave + ")", std::string("(scale -1 ") + kOddWave + ")"}));
}

TEST_CASE("cohomology class periods") {
  auto t2 = QuotientPresentation::torus(2);
  CohomologyClass c1(BasicOneForm(t2, {"(const 1)", "(const 2)"}));
  CHECK(c1.period_vector()[0] == Catch::Approx(1.0).margin(1e-8));
  CHECK(c1.period_vector()[1] == Catch::Approx(2.0).margin(1e-8));
  CHECK(c1.integral());

  // exact form: d(cos(2 pi x)/(2 pi)) = -sin(2 pi x) dx
  CohomologyClass c2(BasicOneForm(t2, {"(scale -1 (sinx 0))", "(const 0)"}));
  CHECK(c2.period_vector()[0] == Catch::Approx(0.0).margin(1e-8));
  CHECK(c2.zero_class());

  CohomologyClass c3(BasicOneForm(t2, {"(const -1.6180339887498949)", "(const 1)"}));
  CHECK_FALSE(c3.integral());
}

TEST_CASE("contraction") {
  auto t2 = QuotientPresentation::torus(2);
  // odd speed times slope, paired against matching coefficients:
  // h*(a f1 + b f2) with h = f1 = f2 = odd wave, (a,b) = (1,2)
  auto pc = QuotientPresentation::pillowcase();
  EquivariantVectorField v(pc, {std::string("(scale 0.2 ") + kOddWave + ")",
                                std::string("(scale 0.4 ") + kOddWave + ")"});
  BasicOneForm w(pc, {std::string("(scale -1 ") + kOddWave + ")",
                      std::string("(scale -1 ") + kOddWave + ")"});
  auto f = contraction(v, w);
  SplitMix64 rng(17);
  for (int i = 0; i < 200; ++i) {
    Vec p{rng.uniform(), rng.uniform()};
    double h = std::sin(kTwoPi * p[0]) * std::cos(kTwoPi * p[1]) +
               std::cos(kTwoPi * p[0]) * std::sin(kTwoPi * p[1]);
    double expect = 0.2 * h * (-h) + 0.4 * h * (-h);  // h*(a f1 + b f2)
    REQUIRE(f(p) == Catch::Approx(expect).margin(1e-12));
    REQUIRE(f(p) <= 1e-12);  // nonpositive everywhere
    // group invariance of the contraction
    for (const auto& g : pc.group())
      REQUIRE(f(g.apply_mod1(p)) == Catch::Approx(f(p)).margin(1e-9));
  }

  EquivariantVectorField v2(t2, {"(const 1)", "(const 2)"});
  BasicOneForm w2(t2, {"(const 3)", "(const 4)"});
  CHECK(contraction(v2, w2)(Vec{0.3, 0.9}) == Catch::Approx(11.0));

  EquivariantVectorField v3(t2, {"(const 0)", "(cosx 1)"});
  BasicOneForm w3(t2, {"(const 1)", "(const 0)"});
  SplitMix64 rng2(9);
  for (int i = 0; i < 50; ++i) {
    Vec p{rng2.uniform(), rng2.uniform()};
    REQUIRE(contraction(v3, w3)(p) == Catch::Approx(0.0).margin(1e-15));
  }
}

TEST_CASE("scale of a class") {
  auto t2 = QuotientPresentation::torus(2);
  CohomologyClass c(BasicOneForm(t2, {"(const 1)", "(const 0)"}));
  auto [eps, delta] = c.compute_scale();
  CHECK(eps == Catch::Approx(0.125));
  CHECK(delta == Catch::Approx(0.125));

  auto pc = QuotientPresentation::pillowcase();
  CohomologyClass cp(BasicOneForm(
      pc, {std::string("(scale -1 ") + kOddWave + ")", std::string("(scale -1 ") + kOddWave + ")"}));
  auto [e2, d2] = cp.compute_scale();
  CHECK(e2 == Catch::Approx(0.0625));
  CHECK(d2 == Catch::Approx(0.0625));

  auto t3 = QuotientPresentation::torus(3);
  CohomologyClass c3(BasicOneForm(t3, {"(const 1)", "(const 0)", "(const 0)"}));
  CHECK(c3.compute_scale().first == Catch::Approx(0.125));
}

TEST_CASE("exactness on regions") {
  auto t2 = QuotientPresentation::torus(2);
  BoxCover cover(t2, 32);

  SECTION("globally exact form recovers its antiderivative") {
    // omega = -2 pi sin(2 pi x) dx = d cos(2 pi x)
    BasicOneForm w(t2, {"(scale -6.2831853071795865 (sinx 0))", "(const 0)"});
    std::vector<int> region;
    for (int o = 0; o < cover.orbit_count(); ++o) region.push_back(o);
    auto res = exactness_on_region(cover, w, region);
    REQUIRE(res.potential.has_value());
    // potential matches cos(2 pi x) up to one constant
    Vec base{0.11, 0.21};
    double c0 = (*res.potential)(base) - std::cos(kTwoPi * base[0]);
    SplitMix64 rng(23);
    for (int i = 0; i < 200; ++i) {
      Vec p{rng.uniform(), rng.uniform()};
      double got = (*res.potential)(p);
      double expect = std::cos(kTwoPi * p[0]) + c0;
      REQUIRE(got == Catch::Approx(expect).margin(1e-6));
    }
  }

  SECTION("winding region rejects a form with periods") {
    BasicOneForm w(t2, {"(const 0)", "(const 1)"});  // dy
    std::vector<int> region;
    for (int o = 0; o < cover.orbit_count(); ++o) region.push_back(o);
    auto res = exactness_on_region(cover, w, region);
    REQUIRE_FALSE(res.potential.has_value());
    CHECK(std::fabs(res.violating_period) == Catch::Approx(1.0).margin(1e-6));
    CHECK_FALSE(res.violating_loop_cells.empty());
  }

  SECTION("annulus with an exact form") {
    BasicOneForm w(t2, {"(scale -6.2831853071795865 (sinx 0))", "(const 0)"});
    std::vector<int> region;
    for (int o = 0; o < cover.orbit_count(); ++o) {
      double x = cover.orbit_center(o)[0];
      if (x > 0.1 && x < 0.4) region.push_back(o);
    }
    auto res = exactness_on_region(cover, w, region);
    REQUIRE(res.potential.has_value());
    Vec base{0.2, 0.5};
    double c0 = (*res.potential)(base) - std::cos(kTwoPi * base[0]);
    SplitMix64 rng(29);
    for (int i = 0; i < 100; ++i) {
      Vec p{0.12 + 0.26 * rng.uniform(), rng.uniform()};
      REQUIRE((*res.potential)(p) ==
              Catch::Approx(std::cos(kTwoPi * p[0]) + c0).margin(1e-6));
    }
  }

  SECTION("invariant potential on the quotient") {
    auto pc = QuotientPresentation::pillowcase();
    BoxCover qcover(pc, 32);
    BasicOneForm w(pc, {std::string("(scale -1 ") + kOddWave + ")",
                        std::string("(scale -1 ") + kOddWave + ")"});
    std::vector<int> region;
    for (int o = 0; o < qcover.orbit_count(); ++o) region.push_back(o);
    auto res = exactness_on_region(qcover, w, region);
    REQUIRE(res.potential.has_value());
    SplitMix64 rng(31);
    for (int i = 0; i < 50; ++i) {
      Vec p{rng.uniform(), rng.uniform()};
      for (const auto& g : pc.group())
        REQUIRE((*res.potential)(g.apply_mod1(p)) ==
                Catch::Approx((*res.potential)(p)).margin(1e-9));
      // gradient matches the coefficients
      Vec grad = res.potential->gradient(p);
      Vec wp = w(p);
      REQUIRE(norm(grad - wp) < 2e-4);
    }
  }
}
