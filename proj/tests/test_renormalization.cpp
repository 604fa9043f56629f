#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "percolab/environments.hpp"
#include "percolab/graph.hpp"
#include "percolab/renormalization.hpp"
#include "percolab/separation.hpp"
#include "percolab/stats.hpp"

using namespace percolab;

namespace {

Vertex at_coord(const Graph& g, int a, int b = 0) {
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    auto L = g.label(Vertex(v));
    if (L[0] == a && (L.size() < 2 || L[1] == b)) return Vertex(v);
  }
  FAIL("coordinate not on host");
  return -1;
}

RecursionParams flat_inputs(double D, double chi) {
  RecursionParams p;
  p.d_i = p.d_u = p.d_l = D;
  p.c_i = p.c_u = p.c_l = 1.0;
  p.chi = chi;
  p.c5 = 1.0;
  p.c9 = 1.0;
  return p;
}

PkSeries fake_series(const ScaleLadder& lad, std::vector<double> p_hat,
                     long long trials) {
  PkSeries s;
  s.ladder = lad;
  s.trials = trials;
  s.p_hat = std::move(p_hat);
  for (double p : s.p_hat) {
    s.hits.push_back((long long)std::llround(p * double(trials)));
    s.ci.push_back(wilson(std::uint64_t(s.hits.back()),
                          std::uint64_t(trials), z95)
                       .halfwidth());
  }
  return s;
}

}  // namespace

TEST_CASE("ladder construction and its guards") {
  auto paper = build_ladder(10000, 1.5, 1);
  CHECK(paper.scales == std::vector<long long>{10000, 1000000});
  CHECK(paper.warnings.empty());

  auto desk = build_ladder(4, 1.5, 3);
  CHECK(desk.scales == std::vector<long long>{4, 8, 23, 111});
  REQUIRE(desk.warnings.size() == 1);
  CHECK(desk.warnings[0].find("10000") != std::string::npos);

  CHECK(build_ladder(7, 2.0, 0).scales == std::vector<long long>{7});

  CHECK_THROWS_AS(build_ladder(4, 1.0, 2), std::domain_error);
  CHECK_THROWS_AS(build_ladder(4, 0.7, 2), std::domain_error);
  CHECK_THROWS_AS(build_ladder(1, 1.5, 2), std::domain_error);
  CHECK_THROWS_AS(build_ladder(4, 1.5, -1), std::domain_error);
  CHECK_THROWS_AS(build_ladder(100000, 3.0, 2), std::range_error);

  // successor is the exact integer ceiling, strictly increasing
  for (auto [L0, gamma, k_max] : std::vector<std::tuple<long long, double, int>>{
           {5, 1.3, 6}, {7, 2.0, 4}, {12, 1.11, 6}, {2, 1.5, 6}}) {
    auto lad = build_ladder(L0, gamma, k_max);
    for (std::size_t k = 0; k + 1 < lad.scales.size(); ++k) {
      long double v = std::pow((long double)lad.scales[k], (long double)gamma);
      CHECK((long double)lad.scales[k + 1] >= v - 1e-6L);
      CHECK((long double)(lad.scales[k + 1] - 1) < v + 1e-6L);
      CHECK(lad.scales[k + 1] > lad.scales[k]);
    }
  }
}

TEST_CASE("parameter selection reproduces the worked example") {
  RecursionParams in = flat_inputs(2.0, 0.5);
  in.gamma = 2.5;
  in.d = 1.0;
  auto out = select_parameters(in, RecursionMode::bernoulli);
  CHECK(out.beta == Catch::Approx(4.2));
  CHECK(out.J == 53);
  CHECK_NOTHROW(verify_parameters(out, RecursionMode::bernoulli));

  SECTION("defaults fill just above the bounds") {
    auto filled = select_parameters(flat_inputs(2.0, 0.5), RecursionMode::bernoulli);
    CHECK(filled.gamma == Catch::Approx(2.1));
    CHECK(filled.d == Catch::Approx(1.0));
    CHECK(filled.gamma * (filled.d_i - 1) / filled.d_i > filled.d_u - 1);
    CHECK(filled.beta > filled.gamma * filled.d_u - filled.d);
    CHECK(filled.beta > filled.gamma * (1 + filled.chi));
    CHECK(double(filled.J) * (filled.beta -
                              (filled.gamma * filled.d_u - filled.d)) >
          filled.gamma * filled.beta);
  }
  SECTION("bounds are strict, sitting on one is rejected") {
    RecursionParams edge = flat_inputs(2.0, 0.5);
    edge.gamma = 2.0;  // exactly d_i (d_u - 1)/(d_i - 1)
    CHECK_THROWS_WITH(select_parameters(edge, RecursionMode::bernoulli),
                      Catch::Matchers::ContainsSubstring("gamma"));
    RecursionParams flat_beta = flat_inputs(2.0, 0.5);
    flat_beta.gamma = 2.5;
    flat_beta.d = 1.0;
    flat_beta.beta = 4.0;  // equals gamma d_u - d, leaves J unreachable
    CHECK_THROWS_AS(select_parameters(flat_beta, RecursionMode::bernoulli),
                    std::domain_error);
  }
  SECTION("required inputs are validated") {
    RecursionParams bad = flat_inputs(1.0, 0.5);
    CHECK_THROWS_WITH(select_parameters(bad, RecursionMode::bernoulli),
                      Catch::Matchers::ContainsSubstring("d_i"));
    RecursionParams no_alpha = flat_inputs(2.0, 0.5);
    CHECK_THROWS_WITH(select_parameters(no_alpha, RecursionMode::dependent),
                      Catch::Matchers::ContainsSubstring("alpha"));
  }
}

TEST_CASE("dependent feasibility boundary is alpha > D(D-1)") {
  for (double D : {1.5, 2.0, 2.5, 3.0}) {
    double bound = D * (D - 1);
    RecursionParams in = flat_inputs(D, 0.4);
    in.c_alpha = 1.0;

    in.alpha = bound - 1e-6;
    CHECK_THROWS_WITH(
        select_parameters(in, RecursionMode::dependent),
        Catch::Matchers::ContainsSubstring(std::to_string(bound).substr(0, 6)));

    in.alpha = bound + 1e-6;
    auto q = select_parameters(in, RecursionMode::dependent);
    // the invariant re-asserts every strict inequality from the construction
    CHECK(q.gamma > 1);
    CHECK(q.gamma * (q.d_i - 1) / q.d_i > q.d_u - 1);
    CHECK(q.d > 0);
    CHECK(q.d < q.d_l);
    CHECK(q.alpha > q.gamma * q.d_u - q.d);
    CHECK(q.beta > q.alpha);
    CHECK(q.beta > q.gamma * (1 + q.chi));
    CHECK(q.J >= 2);
    CHECK(double(q.J) * (q.alpha - (q.gamma * q.d_u - q.d)) >
          q.gamma * q.beta);
  }

  SECTION("random feasible soups always verify") {
    std::mt19937 rng(31);
    for (int t = 0; t < 100; ++t) {
      double D = 1.3 + 2.2 * std::uniform_real_distribution<>(0, 1)(rng);
      RecursionParams in = flat_inputs(D, 0.1 + rng() % 9 * 0.1);
      in.c_alpha = 0.5;
      in.alpha =
          D * (D - 1) * (1.001 + std::uniform_real_distribution<>(0, 2)(rng));
      CHECK_NOTHROW(select_parameters(in, RecursionMode::dependent));
    }
  }
}

TEST_CASE("recursion exponent from the worked example closes the induction") {
  RecursionParams in = flat_inputs(2.0, 0.5);
  in.gamma = 2.5;
  in.d = 1.0;
  auto p = select_parameters(in, RecursionMode::bernoulli);
  // with p_k = L_k^-beta the step ratio is c5^J L_k^-E; E > 0 is what makes
  // the target reproduce itself at the next scale
  double E = double(p.J) * (p.beta - (p.gamma * p.d_u - p.d)) -
             p.gamma * p.beta;
  CHECK(E > 0);
  CHECK(E < 0.2);  // J was chosen minimal, the margin is thin
}

TEST_CASE("pk estimates at degenerate densities") {
  Graph g = grid_zd(2, 24);
  Vertex x = at_coord(g, 0, 0);
  auto lad = build_ladder(4, 1.5, 1);  // [4, 8]

  auto ones = estimate_pk(g, EnvironmentSpec::bernoulli(0.0), lad, {x}, 30, {}, 9);
  CHECK(ones.p_hat == std::vector<double>{1.0, 1.0});

  auto zeros = estimate_pk(g, EnvironmentSpec::bernoulli(1.0), lad, {x}, 30, {}, 9);
  CHECK(zeros.p_hat == std::vector<double>{0.0, 0.0});
  CHECK(zeros.hits == std::vector<long long>{0, 0});
  CHECK_FALSE(zeros.notes.empty());

  SECTION("guards") {
    CHECK_THROWS_AS(estimate_pk(g, EnvironmentSpec::bernoulli(0.5), lad, {}, 30, {}, 9),
                    std::domain_error);
    CHECK_THROWS_AS(estimate_pk(g, EnvironmentSpec::bernoulli(0.5), lad, {x}, 0, {}, 9),
                    std::domain_error);
    Vertex edge = g.host_boundary().smallest();
    CHECK_THROWS_WITH(
        estimate_pk(g, EnvironmentSpec::bernoulli(0.5), lad, {edge}, 30, {}, 9),
        Catch::Matchers::ContainsSubstring("edge"));
  }
  SECTION("determinism") {
    auto a = estimate_pk(g, EnvironmentSpec::bernoulli(0.6), lad, {x}, 60, {}, 5);
    auto b = estimate_pk(g, EnvironmentSpec::bernoulli(0.6), lad, {x}, 60, {}, 5);
    CHECK(a.p_hat == b.p_hat);
    CHECK(a.hits == b.hits);
  }
}

TEST_CASE("pk estimate matches full enumeration on a tiny ball") {
  Graph g = grid_zd(1, 12);
  Vertex x = at_coord(g, 0);
  auto lad = build_ladder(4, 1.5, 0);  // single scale
  VertexSet search = ball(g, x, 4);
  REQUIRE(search.size() == 9);

  // ground truth at p = 1/2: every configuration carries weight 2^-9
  int separated = 0;
  for (unsigned m = 0; m < (1u << 9); ++m) {
    Configuration c;
    c.region = search;
    c.spec = EnvironmentSpec::bernoulli(0.5);
    c.resize_all(false);
    for (std::size_t i = 0; i < 9; ++i)
      if ((m >> i) & 1) c.set_at(i, true);
    separated += detect_separation_exact(g, c, x, 4);
  }
  double p_true = separated / 512.0;
  CAPTURE(p_true);
  CHECK(p_true > 0.01);
  CHECK(p_true < 0.99);

  auto est = estimate_pk(g, EnvironmentSpec::bernoulli(0.5), lad, {x}, 3000, {},
                         17, /*use_exact=*/true);
  CHECK(est.exact_detector);
  CHECK(std::abs(est.p_hat[0] - p_true) <= 3 * est.ci[0] / z95);

  // the heuristic sees the same sampled configurations, so its count can
  // only be lower
  auto heur = estimate_pk(g, EnvironmentSpec::bernoulli(0.5), lad, {x}, 3000, {},
                          17, /*use_exact=*/false);
  CHECK(heur.hits[0] <= est.hits[0]);
}

TEST_CASE("recursion check trichotomy") {
  auto lad = build_ladder(4, 1.5, 2);  // [4, 8, 23]
  RecursionParams in = flat_inputs(2.0, 0.2);
  in.d_u = 1.5;  // keeps gamma = 1.5 admissible
  in.gamma = 1.5;
  auto params = select_parameters(in, RecursionMode::bernoulli);
  REQUIRE(params.J >= 2);

  SECTION("all-zero series passes with zero right-hand sides") {
    auto s = fake_series(lad, {0, 0, 0}, 1000);
    auto rep = check_recursion(s, params, RecursionMode::bernoulli);
    REQUIRE(rep.steps.size() == 2);
    CHECK(rep.steps[0].rhs == 0.0);
    CHECK(rep.steps[0].verdict == StepVerdict::pass);
    CHECK(rep.steps[1].verdict == StepVerdict::pass);
    CHECK(rep.all_steps_pass);
    CHECK_FALSE(rep.any_step_fail);
    CHECK(rep.decay_first == 0);
    CHECK(rep.decay_persists);
  }
  SECTION("a certain hit against a zero bound is a hard failure") {
    auto s = fake_series(lad, {0, 0.2, 0}, 1000);
    auto rep = check_recursion(s, params, RecursionMode::bernoulli);
    CHECK(rep.steps[0].verdict == StepVerdict::fail);
    CHECK(rep.any_step_fail);
    CHECK(rep.steps[1].verdict == StepVerdict::pass);  // big rhs absorbs it
  }
  SECTION("a violation inside the confidence slack is inconclusive") {
    // rhs = (4^1.25 * 0.057)^5 = 0.0035, below lhs = 0.005 but above its
    // one-sided 99% lower bound 0.0022
    auto s = fake_series(lad, {0.057, 0.005, 0}, 1000);
    auto rep = check_recursion(s, params, RecursionMode::bernoulli);
    CHECK(rep.steps[0].lhs > rep.steps[0].rhs);
    CHECK(rep.steps[0].verdict == StepVerdict::inconclusive);
    CHECK_FALSE(rep.any_step_fail);
  }
  SECTION("dependent mode adds the polynomial defect to the base") {
    RecursionParams dep = params;
    dep.alpha = 2.0;
    dep.c_alpha = 1.0;
    auto s = fake_series(lad, {0, 0, 0}, 1000);
    auto rep = check_recursion(s, dep, RecursionMode::dependent);
    CHECK(rep.steps[0].rhs > 0);  // c_alpha L^-alpha keeps the base positive
  }
  SECTION("ladder and parameter gamma must agree") {
    auto s = fake_series(lad, {0, 0, 0}, 1000);
    RecursionParams off = params;
    off.gamma = 1.6;
    CHECK_THROWS_WITH(check_recursion(s, off, RecursionMode::bernoulli),
                      Catch::Matchers::ContainsSubstring("match"));
  }
  SECTION("raising an estimate never turns fail into pass") {
    std::mt19937 rng(271);
    for (int t = 0; t < 200; ++t) {
      double a = std::uniform_real_distribution<>(0, 0.1)(rng);
      double b = std::uniform_real_distribution<>(0, 0.1)(rng);
      auto lo = fake_series(lad, {a, b, 0}, 1000);
      auto hi = fake_series(lad, {a, std::min(1.0, b + 0.05), 0}, 1000);
      auto rlo = check_recursion(lo, params, RecursionMode::bernoulli);
      auto rhi = check_recursion(hi, params, RecursionMode::bernoulli);
      if (rlo.steps[0].verdict == StepVerdict::fail) {
        CAPTURE(a, b);
        CHECK(rhi.steps[0].verdict != StepVerdict::pass);
      }
    }
  }
  SECTION("decay report finds the first scale and checks persistence") {
    auto s = fake_series(lad, {0.9, 0.001, 0.0001}, 10000);
    auto rep = check_recursion(s, params, RecursionMode::bernoulli);
    CHECK(rep.decay_ok == std::vector<char>{0, 1, 1});
    CHECK(rep.decay_first == 1);
    CHECK(rep.decay_persists);
    auto s2 = fake_series(lad, {0.9, 0.001, 0.9}, 10000);
    auto rep2 = check_recursion(s2, params, RecursionMode::bernoulli);
    CHECK(rep2.decay_first == 1);
    CHECK_FALSE(rep2.decay_persists);
  }
}

TEST_CASE("tail union bound") {
  auto lad = build_ladder(4, 1.5, 3);  // [4, 8, 23, 111]
  RecursionParams in = flat_inputs(2.0, 0.2);
  in.d_u = 1.5;
  in.gamma = 1.5;
  auto params = select_parameters(in, RecursionMode::bernoulli);

  SECTION("term-by-term match with the symbolic tail") {
    std::vector<double> ph;
    for (long long L : lad.scales) ph.push_back(std::pow(double(L), -params.beta));
    auto s = fake_series(lad, ph, 1000000);
    double want = 0;
    for (std::size_t k = 0; k + 1 < lad.scales.size(); ++k)
      want += double(lad.scales[k + 1] / lad.scales[k]) *
              std::pow(double(lad.scales[k]), -params.beta);
    CHECK(gk_union_bound(s, params, 0) == Catch::Approx(want));
    CHECK(gk_union_bound(s, params, 1) < gk_union_bound(s, params, 0));
    CHECK(gk_union_bound(s, params, int(lad.scales.size()) - 1) == 0.0);
  }
  SECTION("all zeros give a zero bound") {
    auto s = fake_series(lad, {0, 0, 0, 0}, 1000);
    CHECK(gk_union_bound(s, params, 0) == 0.0);
  }
  SECTION("decay precondition is enforced") {
    auto s = fake_series(lad, {0.9, 0, 0, 0}, 1000);
    CHECK_THROWS_WITH(gk_union_bound(s, params, 0),
                      Catch::Matchers::ContainsSubstring("decay"));
    CHECK_NOTHROW(gk_union_bound(s, params, 1));  // tail past the bad scale
    CHECK_THROWS_AS(gk_union_bound(s, params, 7), std::domain_error);
    CHECK_THROWS_AS(gk_union_bound(s, params, -1), std::domain_error);
  }
}

TEST_CASE("coarse anchor nets") {
  Graph g = grid_zd(2, 10);
  auto net = coarse_anchor_net(g, 5, 6);
  REQUIRE(!net.empty());
  for (std::size_t i = 0; i < net.size(); ++i) {
    auto lbl = g.label(net[i]);
    CHECK(std::abs(lbl[0]) + std::abs(lbl[1]) <= 4);  // margin 6 off radius 10
    for (std::size_t j = i + 1; j < net.size(); ++j)
      CHECK(distance(g, net[i], net[j]) >= 5);
  }
  CHECK(coarse_anchor_net(g, 3, 100).empty());  // margin eats the whole host
}
