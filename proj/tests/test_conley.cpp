#include <catch2/catch_amalgamated.hpp>

#include "orbiflow/conley.hpp"
#include "orbiflow/scenarios.hpp"

using namespace orbiflow;

namespace {

// independent longest-path depths on the condensation, by direct relaxation
std::vector<int> condensation_depth_oracle(const TransitionGraph& g,
                                           const SccDecomposition& scc) {
  int ncomp = static_cast<int>(scc.members.size());
  std::vector<int> depth(ncomp, 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int v = 0; v < g.node_count(); ++v)
      for (const auto& e : g.out(v)) {
        int a = scc.comp_of[v], b = scc.comp_of[e.to];
        if (a != b && depth[b] < depth[a] + 1) {
          depth[b] = depth[a] + 1;
          changed = true;
        }
      }
  }
  return depth;
}

void require_strict_decrease(const TransitionGraph& g, const SccDecomposition& scc,
                             const DiscreteLyapunov& L) {
  REQUIRE(L.edge_gap > 0);
  for (int v = 0; v < g.node_count(); ++v)
    for (const auto& e : g.out(v)) {
      if (scc.comp_of[v] == scc.comp_of[e.to]) continue;
      REQUIRE(L.values[v] - L.values[e.to] >= L.edge_gap / 2 - 1e-12);
    }
}

}  // namespace

TEST_CASE("two-point condensation on the circle") {
  Scenario sc = builtin("circle-attractor");
  sc.params.resolution = 128;
  auto g = build_graph(*sc.field, *sc.cls, sc.params);
  auto R = chain_recurrent_set(g);
  auto L = conley_function(g, R, 0);
  auto scc = scc_decompose(g);
  int att = g.cover().orbit_of_point(sc.named_points["attractor"]);
  int repl = g.cover().orbit_of_point(sc.named_points["repeller"]);
  // repeller at the top of the order, attractor at the bottom
  CHECK(L.values[repl] == Catch::Approx(1.0));
  CHECK(L.values[att] == Catch::Approx(0.0));
  require_strict_decrease(g, scc, L);
}

TEST_CASE("rest field gives a constant function") {
  auto t2 = QuotientPresentation::torus(2);
  EquivariantVectorField v(t2, {"(const 0)", "(const 0)"});
  CohomologyClass cls(BasicOneForm(t2, {"(const 0)", "(const 0)"}));
  GraphParams gp;
  gp.resolution = 16;
  auto g = build_graph(v, cls, gp);
  auto R = chain_recurrent_set(g);
  auto L = conley_function(g, R);
  for (double val : L.values) REQUIRE(val == Catch::Approx(0.0));
}

TEST_CASE("gradient flow levels order the critical boxes") {
  Scenario sc = builtin("gradient-torus");
  sc.params.resolution = 64;
  auto g = build_graph(*sc.field, *sc.cls, sc.params);
  auto R = chain_recurrent_set(g);
  auto scc = scc_decompose(g);
  auto L = conley_function(g, R, 2);

  // the implementation agrees with the independent depth relaxation
  auto depth = condensation_depth_oracle(g, scc);
  int max_depth = *std::max_element(depth.begin(), depth.end());
  auto L0 = conley_function(g, R, 0);
  for (int v = 0; v < g.node_count(); ++v)
    REQUIRE(L0.values[v] ==
            Catch::Approx(1.0 - static_cast<double>(depth[scc.comp_of[v]]) / max_depth)
                .margin(1e-12));

  int source = g.cover().orbit_of_point(sc.named_points["source"]);
  int sink = g.cover().orbit_of_point(sc.named_points["sink"]);
  int sa = g.cover().orbit_of_point(sc.named_points["saddle_a"]);
  int sb = g.cover().orbit_of_point(sc.named_points["saddle_b"]);
  CHECK(L.values[source] > L.values[sa]);
  CHECK(L.values[source] > L.values[sb]);
  CHECK(L.values[sa] > L.values[sink]);
  CHECK(L.values[sb] > L.values[sink]);

  // surviving passes always preserve half the pre-smoothing gap
  require_strict_decrease(g, scc, L);
  REQUIRE(L.smoothing_passes >= 0);
  REQUIRE(L.smoothing_passes <= 2);
}

TEST_CASE("group averaging") {
  auto pc = QuotientPresentation::pillowcase();

  auto even = group_average(pc, [](const Vec& p) { return std::cos(kTwoPi * p[0]); });
  auto odd = group_average(pc, [](const Vec& p) { return std::sin(kTwoPi * p[0]); });
  ScalarField bump("(bump 0.1 0.2 0.05)");
  auto bumpavg = group_average(pc, [&](const Vec& p) { return bump(p); });

  SplitMix64 rng(77);
  for (int it = 0; it < 100; ++it) {
    Vec p{rng.uniform(), rng.uniform()};
    // even functions are fixed points of the average
    REQUIRE(even(p) == Catch::Approx(std::cos(kTwoPi * p[0])).margin(1e-12));
    // odd functions cancel
    REQUIRE(odd(p) == Catch::Approx(0.0).margin(1e-12));
    // the output is invariant and averaging is idempotent
    for (const auto& g : pc.group())
      REQUIRE(bumpavg(g.apply_mod1(p)) == Catch::Approx(bumpavg(p)).margin(1e-12));
  }
  auto twice = group_average(pc, bumpavg);
  for (int it = 0; it < 20; ++it) {
    Vec p{rng.uniform(), rng.uniform()};
    REQUIRE(twice(p) == Catch::Approx(bumpavg(p)).margin(1e-12));
  }
  // half-weight copies at the point and its mirror
  CHECK(bumpavg(Vec{0.1, 0.2}) == Catch::Approx(0.5 * bump(Vec{0.1, 0.2})).margin(1e-12));
  CHECK(bumpavg(Vec{0.9, 0.8}) == Catch::Approx(bumpavg(Vec{0.1, 0.2})).margin(1e-12));
}

TEST_CASE("interpolant flat cores kill the gradient on targets") {
  auto t2 = QuotientPresentation::torus(2);
  BoxCover cover(t2, 32);
  std::vector<double> vals(cover.orbit_count());
  for (int o = 0; o < cover.orbit_count(); ++o) {
    Vec c = cover.orbit_center(o);
    vals[o] = std::sin(kTwoPi * c[0]) + 0.3 * std::cos(kTwoPi * c[1]);
  }
  std::vector<int> flat{cover.orbit_of_point(Vec{0.25, 0.25})};
  BoxInterpolant f(cover, vals, flat);
  Vec center = cover.orbit_center(flat[0]);
  REQUIRE(norm(f.gradient(center)) < 1e-12);
  // near but outside the core the interpolant matches multilinear data
  BoxInterpolant plain(cover, vals);
  Vec far{0.6, 0.6};
  REQUIRE(f(far) == Catch::Approx(plain(far)).margin(1e-15));
  // continuity across the collar
  Vec edge = center;
  edge[0] += 0.45 * cover.width();
  REQUIRE(std::fabs(f(edge) - plain(edge)) < 1e-12);
}
