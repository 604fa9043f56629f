#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include "percolab/environments.hpp"
#include "percolab/graph.hpp"

using namespace percolab;

namespace {

// pair of small all-closed events placed so the far support clears B(x,2r)
EventPairBuilder small_pair_builder(const Graph& g, Vertex x) {
  return [&g, x](int r) {
    PathSeq ray = geodesic_ray(g, x, 3 * r + 1);
    return std::make_pair(all_closed_event(g, x, 1),
                          all_closed_event(g, ray.vertices().back(), 1));
  };
}

double mean_open(const Configuration& c) {
  return double(c.open_count()) / double(c.region.size());
}

}  // namespace

TEST_CASE("environment spec validation") {
  CHECK_THROWS_AS(EnvironmentSpec::bernoulli(-0.1), config_error);
  CHECK_THROWS_AS(EnvironmentSpec::bernoulli(1.5), config_error);
  CHECK_THROWS_AS(EnvironmentSpec::finitely_dependent(0.5, 0), config_error);
  CHECK_THROWS_AS(EnvironmentSpec::long_range(0.5, 1.0), config_error);
  CHECK_THROWS_AS(EnvironmentSpec::long_range(0.5, 0.5), config_error);

  auto b = EnvironmentSpec::bernoulli(0.7);
  CHECK(b.c_alpha == 0.0);
  CHECK(std::isinf(b.alpha));
  auto f = EnvironmentSpec::finitely_dependent(0.7, 2);
  CHECK(f.alpha == 4.0);
  CHECK(f.c_alpha == 256.0);
  auto l = EnvironmentSpec::long_range(0.7, 6.0);
  CHECK(l.alpha == 4.0);
  CHECK(l.c_alpha == 4.0);
}

TEST_CASE("degenerate densities") {
  Graph g = grid_zd(2, 8);
  VertexSet region = ball(g, 0, 4);
  for (auto spec : {EnvironmentSpec::bernoulli(1.0),
                    EnvironmentSpec::finitely_dependent(1.0, 2),
                    EnvironmentSpec::long_range(1.0, 6.0)}) {
    Configuration c = sample(spec, g, region, 11);
    INFO(to_string(spec.kind));
    CHECK(c.open_count() == region.size());
  }
  for (auto spec : {EnvironmentSpec::bernoulli(0.0),
                    EnvironmentSpec::finitely_dependent(0.0, 2)}) {
    Configuration c = sample(spec, g, region, 11);
    INFO(to_string(spec.kind));
    CHECK(c.open_count() == 0);
  }
}

TEST_CASE("bernoulli empirical density on a large region") {
  Graph g = grid_zd(2, 70);
  VertexSet region = ball(g, 0, 70);
  REQUIRE(region.size() == 9941);
  Configuration c = sample(EnvironmentSpec::bernoulli(0.7), g, region, 2026);
  double sigma = std::sqrt(0.7 * 0.3 / double(region.size()));
  CHECK(std::abs(mean_open(c) - 0.7) <= 3 * sigma);
}

TEST_CASE("configurations regenerate bit-identically") {
  Graph g = grid_zd(2, 20);
  VertexSet region = ball(g, 0, 6);
  for (auto spec : {EnvironmentSpec::bernoulli(0.6),
                    EnvironmentSpec::finitely_dependent(0.6, 2),
                    EnvironmentSpec::long_range(0.6, 6.0)}) {
    INFO(to_string(spec.kind));
    Configuration a = sample(spec, g, region, 99);
    Configuration b = sample(spec, g, region, 99);
    CHECK(a.words == b.words);
    CHECK(a.region_hash() == b.region_hash());
    Configuration d = sample(spec, g, region, 100);
    CHECK(a.words != d.words);
  }
}

TEST_CASE("marginals meet the target density") {
  Graph g = grid_zd(2, 30);
  const double p = 0.7;
  const int trials = 3000;
  double sigma = std::sqrt(p * (1 - p) / trials);

  SECTION("bernoulli and finitely dependent are exact") {
    // include a host-boundary vertex, whose smaller mark ball must not skew p
    Vertex edge_v = g.host_boundary().members()[0];
    for (auto spec : {EnvironmentSpec::bernoulli(p),
                      EnvironmentSpec::finitely_dependent(p, 2)}) {
      for (Vertex x : {Vertex(0), edge_v}) {
        Sampler s(g, spec, VertexSet({x}));
        int open = 0;
        for (int t = 0; t < trials; ++t)
          open += s.sample(keyed(5, tag::trial, x, t)).open_at(0);
        INFO(to_string(spec.kind) << " at vertex " << x);
        CHECK(std::abs(double(open) / trials - p) <= 3 * sigma);
      }
    }
  }

  SECTION("long range marginal stays at or above the target") {
    Sampler s(g, EnvironmentSpec::long_range(p, 6.0), VertexSet({0}));
    CHECK(s.lambda() > 0);
    int open = 0;
    for (int t = 0; t < trials; ++t)
      open += s.sample(keyed(6, tag::trial, 0, t)).open_at(0);
    CHECK(double(open) / trials >= p - 3 * sigma);
  }
}

TEST_CASE("raising p with the same seed only opens vertices") {
  Graph g = grid_zd(2, 20);
  VertexSet region = ball(g, 0, 10);
  for (int k = 0; k < 2; ++k) {
    auto lo = k == 0 ? EnvironmentSpec::bernoulli(0.4)
                     : EnvironmentSpec::finitely_dependent(0.4, 2);
    auto hi = k == 0 ? EnvironmentSpec::bernoulli(0.8)
                     : EnvironmentSpec::finitely_dependent(0.8, 2);
    for (std::uint64_t seed : {1, 2, 3}) {
      Configuration a = sample(lo, g, region, seed);
      Configuration b = sample(hi, g, region, seed);
      bool contained = true;
      for (std::size_t i = 0; i < region.size(); ++i)
        contained = contained && (!a.open_at(i) || b.open_at(i));
      INFO(to_string(lo.kind) << " seed " << seed);
      CHECK(contained);
      CHECK(a.open_count() < b.open_count());
    }
  }
}

TEST_CASE("events cannot read outside their support") {
  Graph g = grid_zd(2, 10);
  VertexSet region = ball(g, 0, 4);
  Configuration c = sample(EnvironmentSpec::bernoulli(0.5), g, region, 7);
  Vertex outside = ball(g, 0, 3).members().back();
  Event sneaky{"sneaky", ball(g, 0, 1),
               [outside](const BitView& w) { return w.open(outside); }};
  try {
    sneaky.holds(BitView(c, sneaky.support));
    FAIL("expected contract_violation");
  } catch (const contract_violation& e) {
    CHECK(std::string(e.what()).find(std::to_string(outside)) !=
          std::string::npos);
  }
}

TEST_CASE("non-decreasing events are rejected") {
  Graph g = grid_zd(2, 20);
  auto bad_builder = [&g](int r) {
    PathSeq ray = geodesic_ray(g, 0, 3 * r + 1);
    Vertex x2 = ray.vertices().back();
    Event inc{"open_at_origin", VertexSet({0}),
              [](const BitView& w) { return w.open(0); }};
    return std::make_pair(inc, all_closed_event(g, x2, 1));
  };
  CHECK_THROWS_WITH(
      estimate_decoupling_defect(EnvironmentSpec::bernoulli(0.5), g, 0, {2},
                                 bad_builder, 100, 3),
      Catch::Matchers::ContainsSubstring("not decreasing"));
}

TEST_CASE("decoupling defect support placement is enforced") {
  Graph g = grid_zd(2, 20);
  auto too_wide = [&g](int r) {
    return std::make_pair(all_closed_event(g, 0, r + 1),
                          all_closed_event(g, geodesic_ray(g, 0, 3 * r + 1)
                                                  .vertices()
                                                  .back(),
                                           1));
  };
  CHECK_THROWS_AS(estimate_decoupling_defect(EnvironmentSpec::bernoulli(0.5),
                                             g, 0, {2}, too_wide, 100, 3),
                  std::domain_error);
  auto too_near = [&g](int) {
    return std::make_pair(all_closed_event(g, 0, 1),
                          all_closed_event(g, 0, 1));
  };
  CHECK_THROWS_AS(estimate_decoupling_defect(EnvironmentSpec::bernoulli(0.5),
                                             g, 0, {2}, too_near, 100, 3),
                  std::domain_error);
}

TEST_CASE("product measure has zero decoupling defect") {
  Graph g = grid_zd(2, 20);
  auto rep = estimate_decoupling_defect(EnvironmentSpec::bernoulli(0.3), g, 0,
                                        {2, 4}, small_pair_builder(g, 0),
                                        30000, 17);
  for (std::size_t i = 0; i < rep.defects.size(); ++i) {
    INFO("r = " << rep.r_values[i]);
    CHECK(std::abs(rep.defects[i]) <= 3 * rep.ci_halfwidths[i] / z95);
  }
}

TEST_CASE("finitely dependent bits correlate through shared marks") {
  Graph g = grid_zd(2, 10);
  const double p = 0.5;
  Vertex x = 0, y = g.neighbors(0)[0];
  // both mark balls have the full interior size, their union is 18 strong,
  // and both-closed has probability p^{18/13} exactly
  VertexSet bx = ball(g, x, 2), by = ball(g, y, 2);
  REQUIRE(bx.size() == 13);
  REQUIRE(by.size() == 13);
  REQUIRE(set_union(bx, by).size() == 18);
  double want = std::pow(p, 18.0 / 13.0);

  Sampler s(g, EnvironmentSpec::finitely_dependent(p, 2), VertexSet({x, y}));
  const int trials = 20000;
  int both = 0;
  for (int t = 0; t < trials; ++t) {
    Configuration c = s.sample(keyed(19, tag::trial, 0, t));
    both += !c.open(x) && !c.open(y);
  }
  double emp = double(both) / trials;
  double sigma = std::sqrt(want * (1 - want) / trials);
  CHECK(std::abs(emp - want) <= 3 * sigma);
  // genuinely dependent: far above the product of the exact 1/2 marginals
  CHECK(emp - 0.25 > 0.1);
}

TEST_CASE("finite dependence dies past twice the radius") {
  Graph g = grid_zd(2, 20);
  auto spec = EnvironmentSpec::finitely_dependent(0.5, 2);
  // supports sit at graph distance 3r-1 > 2*radius for every tested r, so
  // their mark balls are disjoint and the defects are exactly zero
  auto rep = estimate_decoupling_defect(spec, g, 0, {2, 3, 5},
                                        small_pair_builder(g, 0), 30000, 21);
  for (std::size_t i = 0; i < rep.defects.size(); ++i) {
    INFO("r = " << rep.r_values[i]);
    CHECK(std::abs(rep.defects[i]) <= 3 * rep.ci_halfwidths[i] / z95);
    double cert = spec.c_alpha * std::pow(double(rep.r_values[i]), -spec.alpha);
    CHECK(rep.defects[i] <= cert + 3 * rep.ci_halfwidths[i] / z95);
  }
}

TEST_CASE("long range defects decay polynomially") {
  Graph g = grid_zd(2, 20);
  auto spec = EnvironmentSpec::long_range(0.05, 6.0);
  auto rep = estimate_decoupling_defect(spec, g, 0, {1, 2},
                                        nearest_closed_pair_builder(g, 0),
                                        200000, 29);
  CHECK(rep.defects[0] > 0);
  CHECK(rep.defects[1] > 0);
  CHECK(rep.defects[0] > rep.defects[1]);
  CHECK(rep.fitted_alpha > 0);
  for (std::size_t i = 0; i < rep.defects.size(); ++i) {
    INFO("r = " << rep.r_values[i] << " defect " << rep.defects[i]);
    double cert = spec.c_alpha * std::pow(double(rep.r_values[i]), -spec.alpha);
    CHECK(rep.defects[i] <= cert + 3 * rep.ci_halfwidths[i] / z95);
  }
}

TEST_CASE("several boxes: single box is trivial") {
  Graph g = grid_zd(2, 10);
  auto rep = several_boxes_check(EnvironmentSpec::bernoulli(0.4), g, {0}, 2,
                                 {all_closed_event(g, 0, 1)}, 5000, 31);
  CHECK(rep.ok);
  CHECK(rep.probs.size() == 1);
  CHECK(rep.joint == rep.probs[0]);
}

TEST_CASE("several boxes: independent boxes meet the product bound") {
  Graph g = grid_zd(2, 20);
  // three centers pairwise >= 3r apart for r = 2
  std::vector<Vertex> pts{0, geodesic_ray(g, 0, 9).vertices().back(),
                          geodesic_ray(g, 0, 18).vertices().back()};
  std::vector<Event> evs;
  for (Vertex x : pts) evs.push_back(all_closed_event(g, x, 1));
  auto rep = several_boxes_check(EnvironmentSpec::bernoulli(0.4), g, pts, 2,
                                 evs, 20000, 37);
  CHECK(rep.ok);
  double prod = rep.probs[0] * rep.probs[1] * rep.probs[2];
  CHECK(std::abs(rep.joint - prod) <= 4 * rep.sigma + 1e-4);
}

TEST_CASE("several boxes: spacing violations name the pair") {
  Graph g = grid_zd(2, 20);
  std::vector<Vertex> pts{0, g.neighbors(0)[0]};
  std::vector<Event> evs{all_closed_event(g, pts[0], 1),
                         all_closed_event(g, pts[1], 1)};
  CHECK_THROWS_WITH(several_boxes_check(EnvironmentSpec::bernoulli(0.4), g,
                                        pts, 8, evs, 100, 41),
                    Catch::Matchers::ContainsSubstring("3r"));
}

TEST_CASE("several boxes: long range pair within certificate") {
  Graph g = grid_zd(2, 30);
  std::vector<Vertex> pts{0, geodesic_ray(g, 0, 25).vertices().back()};
  std::vector<Event> evs{all_closed_event(g, pts[0], 2),
                         all_closed_event(g, pts[1], 2)};
  auto rep = several_boxes_check(EnvironmentSpec::long_range(0.3, 6.0), g, pts,
                                 8, evs, 20000, 43);
  CHECK(rep.ok);
}

TEST_CASE("configuration rejects reads outside its region") {
  Graph g = grid_zd(2, 10);
  Configuration c = sample(EnvironmentSpec::bernoulli(0.5), g,
                           ball(g, 0, 2), 3);
  Vertex out = ball(g, 0, 3).members().back();
  CHECK_THROWS_AS(c.open(out), std::domain_error);
}
