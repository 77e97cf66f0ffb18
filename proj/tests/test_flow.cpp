#include <catch2/catch_amalgamated.hpp>

#include "orbiflow/flow.hpp"
#include "orbiflow/scenarios.hpp"

using namespace orbiflow;

namespace {
QuotientPresentation& torus2() {
  static QuotientPresentation t = QuotientPresentation::torus(2);
  return t;
}
}  // namespace

TEST_CASE("linear flow integrates exactly") {
  EquivariantVectorField v(torus2(), {"(const 1)", "(const 2)"});
  auto tr = integrate(v, Vec{0, 0}, 1.0);
  CHECK(tr.endpoint_lifted()[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(tr.endpoint_lifted()[1] == Catch::Approx(2.0).margin(1e-12));
  CHECK(torus_dist(tr.endpoint_torus(), Vec{0, 0}) < 1e-9);
}

TEST_CASE("rest points stay put") {
  EquivariantVectorField v(torus2(), {"(const 0)", "(const 0)"});
  auto tr = integrate(v, Vec{0.37, 0.84}, 10.0);
  CHECK(norm(tr.displacement()) < 1e-14);
}

TEST_CASE("circle flow converges to its attractor") {
  Scenario sc = builtin("circle-attractor");
  Vec z = sc.named_points["attractor"];
  auto tr = integrate(*sc.field, Vec{0.0}, 60.0, 1e-3);
  CHECK(std::fabs(wrapped_offset(tr.endpoint_torus()[0], z[0])) < 1e-6);
  // endpoint agrees with a finer-step run (independent of the step choice)
  auto fine = integrate(*sc.field, Vec{0.0}, 60.0, 2.5e-4);
  CHECK(std::fabs(tr.endpoint_lifted()[0] - fine.endpoint_lifted()[0]) < 1e-9);
}

TEST_CASE("winding alias guard") {
  EquivariantVectorField v(torus2(), {"(const 600)", "(const 0)"});
  REQUIRE_THROWS_AS(integrate(v, Vec{0, 0}, 1.0, 1e-3), Error);
}

TEST_CASE("time averages") {
  EquivariantVectorField v(torus2(), {"(const 1)", "(const 2)"});
  BasicOneForm w(torus2(), {"(const 3)", "(const 5)"});
  for (double T : {0.5, 1.0, 7.0, 40.0})
    CHECK(birkhoff_average(v, w, Vec{0.2, 0.9}, T) ==
          Catch::Approx(13.0).margin(1e-10));

  // rest point
  EquivariantVectorField z(torus2(), {"(const 0)", "(const 0)"});
  CHECK(birkhoff_average(z, w, Vec{0.5, 0.5}, 5.0) == Catch::Approx(0.0).margin(1e-14));

  // vertical flow with x frozen: the average equals the pointwise speed
  EquivariantVectorField vert(torus2(),
                              {"(const 0)", "(sum (const 0.5) (scale -0.5 (cosx 0)))"});
  BasicOneForm mdy(torus2(), {"(const 0)", "(const -1)"});
  double expect = -std::pow(std::sin(M_PI * 0.25), 2);
  REQUIRE(expect == Catch::Approx(-0.5).margin(1e-12));
  CHECK(birkhoff_average(vert, mdy, Vec{0.25, 0.0}, 50.0) ==
        Catch::Approx(expect).margin(1e-4));
}

TEST_CASE("displacement additivity") {
  Scenario sc = builtin("product-construction");
  SplitMix64 rng(3);
  for (int it = 0; it < 10; ++it) {
    Vec x0{rng.uniform(), rng.uniform()};
    double t1 = 0.4 + rng.uniform(), t2 = 0.3 + rng.uniform();
    auto a = integrate(*sc.field, x0, t1 + t2, 1e-3);
    auto b = integrate(*sc.field, x0, t1, 1e-3);
    auto c = integrate(*sc.field, b.endpoint_torus(), t2, 1e-3);
    Vec total = b.displacement() + c.displacement();
    REQUIRE(norm(a.displacement() - total) < 1e-8);
  }
}

TEST_CASE("flow equivariance on the quotient") {
  Scenario sc = builtin("pillowcase-rational");
  const auto& pres = *sc.presentation;
  SplitMix64 rng(5);
  for (int it = 0; it < 10; ++it) {
    Vec x0{rng.uniform(), rng.uniform()};
    auto base = integrate(*sc.field, x0, 2.0, 1e-3);
    for (const auto& g : pres.group()) {
      auto moved = integrate(*sc.field, g.apply_mod1(x0), 2.0, 1e-3);
      Vec expect = g.apply_linear(base.displacement());
      REQUIRE(norm(moved.displacement() - expect) < 1e-6);
    }
  }
}

TEST_CASE("representative independence of time averages") {
  // adding dF changes the average by at most 2 sup|F| / T
  EquivariantVectorField v(torus2(), {"(const 1)", "(const 2)"});
  BasicOneForm w(torus2(), {"(const 1)", "(const 0)"});
  BasicOneForm w_dF(torus2(), {"(sum (const 1) (scale -1 (prod (sinx 0) (cosx 1))))",
                               "(scale -1 (prod (cosx 0) (sinx 1)))"});
  double supF = 1.0 / kTwoPi;
  for (double T : {2.0, 10.0, 50.0}) {
    double d = std::fabs(birkhoff_average(v, w_dF, Vec{0.1, 0.3}, T) -
                         birkhoff_average(v, w, Vec{0.1, 0.3}, T));
    REQUIRE(d <= 2 * supF / T + 1e-9);
  }
}

TEST_CASE("cycle detection on the linear flow") {
  EquivariantVectorField v(torus2(), {"(const 1)", "(const 2)"});
  CohomologyClass cls(BasicOneForm(torus2(), {"(const 1)", "(const 2)"}));
  auto cyc = detect_cycle(v, cls, Vec{0.3, 0.6}, 0.1, 0.5, 3.0);
  REQUIRE(cyc.has_value());
  CHECK(cyc->tau > 0.9);
  CHECK(cyc->tau <= 1.001);
  REQUIRE(cyc->integer_class.has_value());
  CHECK((*cyc->integer_class)[0] == Catch::Approx(1.0));
  CHECK((*cyc->integer_class)[1] == Catch::Approx(2.0));
  CHECK(cyc->pairing == Catch::Approx(5.0).margin(1e-6));  // 1*1 + 2*2
  CHECK(cyc->closing_gap < 0.1);

  // step halving leaves the pairing unchanged
  auto cyc2 = detect_cycle(v, cls, Vec{0.3, 0.6}, 0.1, 0.5, 3.0, 5e-4);
  REQUIRE(cyc2.has_value());
  CHECK(cyc->pairing == Catch::Approx(cyc2->pairing).margin(1e-6));
}

TEST_CASE("rest points close immediately") {
  EquivariantVectorField v(torus2(), {"(const 0)", "(const 0)"});
  CohomologyClass cls(BasicOneForm(torus2(), {"(const 1)", "(const 0)"}));
  auto cyc = detect_cycle(v, cls, Vec{0.4, 0.4}, 0.05, 1.0, 2.0);
  REQUIRE(cyc.has_value());
  CHECK(cyc->tau == Catch::Approx(1.0 + 1e-3).margin(2e-3));
  CHECK(cyc->pairing == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("vertical flow cycles pair with the fiber class") {
  EquivariantVectorField v(torus2(),
                           {"(const 0)", "(sum (const 0.5) (scale -0.5 (cosx 0)))"});
  CohomologyClass cls(BasicOneForm(torus2(), {"(const 0)", "(const -1)"}));
  auto cyc = detect_cycle(v, cls, Vec{0.25, 0.0}, 0.1, 1.0, 4.0);
  REQUIRE(cyc.has_value());
  // vertical period 1 / sin^2(pi/4) = 2
  CHECK(cyc->tau > 1.75);
  CHECK(cyc->tau <= 2.05);
  CHECK(cyc->pairing == Catch::Approx(-1.0).margin(1e-6));
  REQUIRE(cyc->integer_class.has_value());
  CHECK((*cyc->integer_class)[1] == Catch::Approx(1.0));

  // integral class: pairing near an integer
  REQUIRE(std::fabs(cyc->pairing - std::round(cyc->pairing)) < 1e-3);

  // absence is a valid result: no return within a short horizon
  auto none = detect_cycle(v, cls, Vec{0.25, 0.0}, 0.01, 1.0, 1.5);
  REQUIRE_FALSE(none.has_value());
}

TEST_CASE("delta above the scale is rejected") {
  EquivariantVectorField v(torus2(), {"(const 1)", "(const 2)"});
  CohomologyClass cls(BasicOneForm(torus2(), {"(const 1)", "(const 2)"}));
  REQUIRE_THROWS_AS(detect_cycle(v, cls, Vec{0, 0}, 0.3, 0.5, 3.0), Error);
}

TEST_CASE("trajectory CSV export") {
  EquivariantVectorField v(torus2(), {"(const 1)", "(const 2)"});
  auto tr = integrate(v, Vec{0.25, 0.5}, 0.01, 1e-3);
  std::string csv = trajectory_csv(tr);
  CHECK(csv.rfind("t,lift0,lift1,torus0,torus1\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);  // header + 11 rows
}
