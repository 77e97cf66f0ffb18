#include <catch2/catch_amalgamated.hpp>

#include "orbiflow/gpath.hpp"

using namespace orbiflow;

TEST_CASE("straight segment against a constant form") {
  auto t2 = QuotientPresentation::torus(2);
  BasicOneForm w(t2, {"(const 3)", "(const 5)"});
  GPath path;
  path.segments.push_back(make_segment(Vec{0, 0}, Vec{1, 0}));
  CHECK(gpath_integral(path, w) == Catch::Approx(3.0).margin(1e-10));
}

TEST_CASE("forward-backward cancellation") {
  auto t2 = QuotientPresentation::torus(2);
  BasicOneForm w(t2, {"(sum (const 1) (prod (cosx 0) (cosx 1)))",
                      "(sum (const 2) (scale -1 (prod (sinx 0) (sinx 1))))"});
  GPath path;
  Segment fwd = make_segment(Vec{0.1, 0.2}, Vec{0.7, 0.55});
  Segment bwd = fwd;
  std::reverse(bwd.nodes.begin(), bwd.nodes.end());
  path.segments.push_back(fwd);
  path.segments.push_back(bwd);
  path.arrows.push_back(identity_element(2));
  CHECK(gpath_integral(path, w) == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("quotient loop closed by a half-turn arrow") {
  auto pc = QuotientPresentation::pillowcase();
  // odd coefficient so the form lives on the quotient
  BasicOneForm w(pc, {"(scale -6.2831853071795865 (sinx 0))", "(const 0)"});
  GPath path;
  path.segments.push_back(make_segment(Vec{0.1, 0.0}, Vec{0.9, 0.0}));
  GroupElement flip;
  flip.linear = IMat::identity(2);
  flip.linear.at(0, 0) = -1;
  flip.linear.at(1, 1) = -1;
  path.closing_arrow = flip;  // maps (0.9,0) back to (0.1,0)
  path.validate();
  REQUIRE(path.is_loop());
  // antiderivative: cos(2 pi 0.9) - cos(2 pi 0.1) = 0
  double expect = std::cos(kTwoPi * 0.9) - std::cos(kTwoPi * 0.1);
  REQUIRE(expect == Catch::Approx(0.0).margin(1e-12));
  CHECK(gpath_integral(path, w) == Catch::Approx(expect).margin(1e-8));
}

TEST_CASE("malformed words are rejected") {
  GPath path;
  path.segments.push_back(make_segment(Vec{0.0, 0.0}, Vec{0.5, 0.0}));
  path.segments.push_back(make_segment(Vec{0.3, 0.3}, Vec{0.6, 0.3}));
  path.arrows.push_back(identity_element(2));  // endpoint mismatch
  auto t2 = QuotientPresentation::torus(2);
  BasicOneForm w(t2, {"(const 1)", "(const 0)"});
  REQUIRE_THROWS_AS(gpath_integral(path, w), Error);
}

TEST_CASE("period pairing") {
  auto t2 = QuotientPresentation::torus(2);
  CohomologyClass cls(BasicOneForm(t2, {"(const 1)", "(const 2)"}));

  GPath xloop;
  xloop.segments.push_back(make_segment(Vec{0.25, 0.25}, Vec{1.25, 0.25}));
  CHECK(period_pairing(cls, xloop) == Catch::Approx(1.0).margin(1e-8));

  // diagonal loop with class (1,1): pairing is the sum of the periods
  GPath diag;
  diag.segments.push_back(make_segment(Vec{0.0, 0.0}, Vec{1.0, 1.0}, 2049));
  CHECK(period_pairing(cls, diag) == Catch::Approx(3.0).margin(1e-8));

  // exact class pairs to zero on any loop
  CohomologyClass exact(BasicOneForm(t2, {"(scale -1 (sinx 0))", "(const 0)"}));
  CHECK(period_pairing(exact, diag) == Catch::Approx(0.0).margin(1e-8));
  CHECK(period_pairing(exact, xloop) == Catch::Approx(0.0).margin(1e-8));

  // open paths are rejected
  GPath open;
  open.segments.push_back(make_segment(Vec{0.0, 0.0}, Vec{0.5, 0.1}));
  REQUIRE_THROWS_AS(period_pairing(cls, open), Error);
}

TEST_CASE("integral classes pair integrally with quotient loops") {
  auto t2 = QuotientPresentation::torus(2);
  CohomologyClass cls(BasicOneForm(t2, {"(const 2)", "(const -1)"}));
  REQUIRE(cls.integral());
  SplitMix64 rng(13);
  for (int it = 0; it < 20; ++it) {
    int px = static_cast<int>(rng.next() % 3) - 1;
    int py = static_cast<int>(rng.next() % 3) - 1;
    Vec start{rng.uniform(), rng.uniform()};
    GPath loop;
    loop.segments.push_back(
        make_segment(start, Vec{start[0] + px, start[1] + py}, 1025));
    double val = period_pairing(cls, loop);
    REQUIRE(std::fabs(val - std::round(val)) < 1e-6);
    REQUIRE(val == Catch::Approx(2.0 * px - 1.0 * py).margin(1e-6));
  }
}

TEST_CASE("integral is stable under the word equivalences") {
  auto t2 = QuotientPresentation::torus(2);
  BasicOneForm w(t2, {"(sum (const 0.3) (prod (cosx 0) (cosx 1)))",
                      "(scale -1 (prod (sinx 0) (sinx 1)))"});
  GPath path;
  path.segments.push_back(make_segment(Vec{0.05, 0.6}, Vec{0.8, 0.35}, 513));
  path.segments.push_back(make_segment(Vec{0.8, 0.35}, Vec{1.1, 0.9}, 513));
  path.arrows.push_back(identity_element(2));
  double base = gpath_integral(path, w);

  // reparametrization: doubled sampling
  CHECK(gpath_integral(resample_segments(path, 2), w) == Catch::Approx(base).margin(1e-8));
  // concatenation equivalence: split a segment at an identity arrow
  CHECK(gpath_integral(split_segment(path, 0), w) == Catch::Approx(base).margin(1e-8));
  // multiplication equivalence: constant segments next to identity arrows drop
  GPath padded = path;
  padded.segments.push_back(constant_segment(path.end()));
  padded.arrows.push_back(identity_element(2));
  CHECK(gpath_integral(padded, w) == Catch::Approx(base).margin(1e-8));
  GPath simplified = simplify_word(padded);
  CHECK(simplified.segments.size() == 1);
  CHECK(gpath_integral(simplified, w) == Catch::Approx(base).margin(1e-8));
}

TEST_CASE("adding an exact term shifts integrals by boundary values") {
  auto t2 = QuotientPresentation::torus(2);
  BasicOneForm w(t2, {"(const 1)", "(const -2)"});
  // F = cos(2 pi x) cos(2 pi y) / (2 pi): dF computed analytically
  BasicOneForm w_plus_dF(
      t2, {"(sum (const 1) (scale -1 (prod (sinx 0) (cosx 1))))",
           "(sum (const -2) (scale -1 (prod (cosx 0) (sinx 1))))"});
  auto F = [](const Vec& p) {
    return std::cos(kTwoPi * p[0]) * std::cos(kTwoPi * p[1]) / kTwoPi;
  };
  SplitMix64 rng(37);
  for (int it = 0; it < 30; ++it) {
    Vec a{rng.uniform(), rng.uniform()};
    Vec b{a[0] + rng.uniform() - 0.5, a[1] + rng.uniform() - 0.5};
    GPath path;
    path.segments.push_back(make_segment(a, b, 1025));
    double d = gpath_integral(path, w_plus_dF) - gpath_integral(path, w);
    REQUIRE(d == Catch::Approx(F(path.end()) - F(path.start())).margin(1e-8));
  }
}

TEST_CASE("short connecting paths stay inside a scale ball") {
  auto pc = QuotientPresentation::pillowcase();
  BasicOneForm w(pc, {"(scale -1 (sum (prod (sinx 0) (cosx 1)) (prod (cosx 0) (sinx 1))))",
                      "(scale -1 (sum (prod (sinx 0) (cosx 1)) (prod (cosx 0) (sinx 1))))"});
  CohomologyClass cls(std::move(w));
  auto [eps, delta] = cls.compute_scale();
  SplitMix64 rng(41);
  int accepted = 0;
  while (accepted < 1000) {
    Vec p{rng.uniform(), rng.uniform()};
    Vec q(2);
    q[0] = wrap01(p[0] + (rng.uniform() - 0.5) * 2 * delta);
    q[1] = wrap01(p[1] + (rng.uniform() - 0.5) * 2 * delta);
    if (pc.quotient_distance(p, q) >= delta) continue;
    ++accepted;
    GPath path = connecting_path(pc, p, q);
    REQUIRE(path.is_loop() == false);
    for (const auto& seg : path.segments)
      for (const auto& node : seg.nodes)
        REQUIRE(pc.quotient_distance(p, node) <= eps + 1e-12);
  }
}
