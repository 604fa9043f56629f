#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "percolab/environments.hpp"
#include "percolab/graph.hpp"
#include "percolab/percolation.hpp"

using namespace percolab;

namespace {

Vertex at_coord(const Graph& g, int a, int b) {
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    auto L = g.label(Vertex(v));
    if (L[0] == a && L[1] == b) return Vertex(v);
  }
  FAIL("coordinate not on host");
  return -1;
}

// independent flood fill assigning ids in ascending smallest-member order
std::vector<int> oracle_labels(const Graph& g, const VertexSet& region,
                               const Configuration& c) {
  std::vector<int> lab(region.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < region.size(); ++i) {
    if (lab[i] >= 0 || !c.open(region.members()[i])) continue;
    std::vector<std::size_t> stack{i};
    lab[i] = next;
    while (!stack.empty()) {
      std::size_t j = stack.back();
      stack.pop_back();
      for (Vertex w : g.neighbors(region.members()[j])) {
        auto k = region.index_of(w);
        if (k >= 0 && lab[std::size_t(k)] < 0 && c.open(w)) {
          lab[std::size_t(k)] = next;
          stack.push_back(std::size_t(k));
        }
      }
    }
    ++next;
  }
  return lab;
}

Configuration explicit_config(const VertexSet& region,
                              const std::vector<char>& bits) {
  Configuration c;
  c.region = region;
  c.spec = EnvironmentSpec::bernoulli(0.5);
  c.resize_all(false);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) c.set_at(i, true);
  return c;
}

// 8x8 box with a checkerboard plus one fully open corridor row
struct Fixture {
  VertexSet region;
  Configuration config;
  Graph* g;
};

Fixture checkerboard_corridor(Graph& g) {
  std::vector<Vertex> box;
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    auto L = g.label(Vertex(v));
    if (L[0] >= -3 && L[0] <= 4 && L[1] >= -3 && L[1] <= 4)
      box.push_back(Vertex(v));
  }
  VertexSet region(std::move(box));
  REQUIRE(region.size() == 64);
  std::vector<char> bits(region.size(), 0);
  for (std::size_t i = 0; i < region.size(); ++i) {
    auto L = g.label(region.members()[i]);
    bits[i] = char((L[0] + L[1]) % 2 == 0 || L[1] == 0);
  }
  return Fixture{region, explicit_config(region, bits), &g};
}

}  // namespace

TEST_CASE("cluster labeling trivial configurations") {
  Graph g = grid_zd(2, 10);
  VertexSet region = ball(g, 0, 5);

  Configuration closed = explicit_config(region, std::vector<char>(region.size(), 0));
  ClusterLabeling lab = label_clusters(g, closed, region);
  CHECK(lab.cluster_count() == 0);
  for (int l : lab.label) CHECK(l == -1);

  Configuration open = explicit_config(region, std::vector<char>(region.size(), 1));
  lab = label_clusters(g, open, region);
  REQUIRE(lab.cluster_count() == 1);
  CHECK(lab.cluster_sizes[0] == region.size());
}

TEST_CASE("checkerboard with corridor labels as hand counted") {
  Graph g = grid_zd(2, 12);
  Fixture fx = checkerboard_corridor(g);
  ClusterLabeling lab = label_clusters(g, fx.config, fx.region);

  // corridor row of 8 picks up the four odd-column vertices on each side;
  // every other checkerboard vertex has all four neighbors closed
  CHECK(lab.cluster_count() == 21);
  std::size_t biggest = 0, open_total = 0;
  for (std::size_t s : lab.cluster_sizes) {
    biggest = std::max(biggest, s);
    open_total += s;
  }
  CHECK(biggest == 16);
  CHECK(open_total == 36);

  CHECK(lab.label == oracle_labels(g, fx.region, fx.config));
}

TEST_CASE("labeling equals flood fill on random small regions") {
  Graph grid = grid_zd(2, 10);
  Graph tree = regular_tree(3, 5);
  Graph joined = joined_grids(2, 3);
  struct Case {
    const Graph* g;
    VertexSet region;
  };
  std::vector<Case> cases{{&grid, ball(grid, 0, 7)},
                          {&tree, ball(tree, 0, 5)},
                          {&joined, ball(joined, 0, 20)}};
  for (auto& [g, region] : cases) {
    REQUIRE(region.size() <= 500);
    for (double p : {0.3, 0.6}) {
      for (std::uint64_t s = 0; s < 10; ++s) {
        Configuration c = sample(EnvironmentSpec::bernoulli(p), *g, region, s);
        ClusterLabeling lab = label_clusters(*g, c, region);
        CHECK(lab.label == oracle_labels(*g, region, c));
        // dense ids, sizes consistent
        std::vector<std::size_t> count(lab.cluster_sizes.size(), 0);
        for (int l : lab.label)
          if (l >= 0) count[std::size_t(l)] += 1;
        CHECK(count == lab.cluster_sizes);
      }
    }
  }
}

TEST_CASE("cluster stats conventions") {
  Graph g = grid_zd(2, 12);
  Fixture fx = checkerboard_corridor(g);
  ClusterLabeling lab = label_clusters(g, fx.config, fx.region);

  ClusterStats corridor = cluster_stats(g, lab, at_coord(g, 0, 0));
  CHECK(corridor.size == 16);
  CHECK(corridor.touches_boundary);

  ClusterStats lone = cluster_stats(g, lab, at_coord(g, 0, 2));
  CHECK(lone.size == 1);
  CHECK(lone.diameter == 0);

  ClusterStats dead = cluster_stats(g, lab, at_coord(g, 1, 2));
  CHECK(dead.size == 0);
  CHECK(dead.diameter == -1);
  CHECK_FALSE(dead.touches_boundary);

  CHECK_THROWS_AS(cluster_stats(g, lab, at_coord(g, 6, 6)), std::domain_error);

  VertexSet region = ball(g, 0, 8);
  Configuration open = explicit_config(region, std::vector<char>(region.size(), 1));
  ClusterStats full = cluster_stats(g, label_clusters(g, open, region), 0);
  CHECK(full.size == region.size());
  CHECK(full.diameter == 16);
  CHECK(full.diameter_exact);
  CHECK(full.touches_boundary);
}

TEST_CASE("uniqueness at full density") {
  Graph g = grid_zd(2, 20);
  Window w = make_window(g, 0, 16);
  auto rep = uniqueness_stats(g, EnvironmentSpec::bernoulli(1.0), w, 20, 3);
  CHECK(rep.unique_frequency == 1.0);
  CHECK(rep.mean_macroscopic == 1.0);
}

TEST_CASE("uniqueness holds on the plane and fails on the tree") {
  Graph plane = grid_zd(2, 36);
  Window pw = make_window(plane, 0, 32);
  auto prep = uniqueness_stats(plane, EnvironmentSpec::bernoulli(0.9), pw, 200, 5);
  CHECK(prep.unique_frequency >= 0.95);

  Graph tree = regular_tree(3, 10);
  Window tw = make_window(tree, 0, 10);
  auto trep = uniqueness_stats(tree, EnvironmentSpec::bernoulli(0.9), tw, 200, 7);
  CHECK(trep.mean_macroscopic > 1.0);
}

TEST_CASE("spanning sweep endpoints and monotonicity") {
  Graph g = grid_zd(2, 16);
  Window w = make_box_window(g, 0, 8);
  std::vector<double> grid{0.0, 0.3, 0.45, 0.55, 0.6, 0.65, 0.75, 1.0};
  SweepCurve curve = pc_sweep(g, w, 300, grid, 11);
  CHECK(curve.probs.front() == 0.0);
  CHECK(curve.probs.back() == 1.0);
  for (std::size_t i = 1; i < curve.probs.size(); ++i)
    CHECK(curve.probs[i] >= curve.probs[i - 1]);  // exact: shared thresholds
}

TEST_CASE("supercritical box spans with high probability") {
  Graph g = grid_zd(2, 26);
  Window w = make_box_window(g, 0, 12);
  SweepCurve curve = pc_sweep(g, w, 400, {0.8}, 13);
  CHECK(curve.probs[0] >= 0.95);
}

TEST_CASE("ball windows span center to boundary") {
  Graph g = regular_tree(3, 6);
  Window w = make_window(g, 0, 6);
  SweepCurve curve = pc_sweep(g, w, 200, {0.0, 1.0}, 17);
  CHECK(curve.probs[0] == 0.0);
  CHECK(curve.probs[1] == 1.0);
}

TEST_CASE("box windows need room and a grid host") {
  Graph g = grid_zd(2, 10);
  CHECK_THROWS_AS(make_box_window(g, 0, 10), std::domain_error);
  Graph tree = regular_tree(3, 4);
  CHECK_THROWS_AS(make_box_window(tree, 0, 2), std::domain_error);
  CHECK_THROWS_AS(pc_sweep(g, make_window(g, 0, 4), 10, {0.5, 0.4}, 1),
                  std::domain_error);
  CHECK_THROWS_AS(pc_sweep(g, make_window(g, 0, 4), 10, {0.5, 1.2}, 1),
                  std::domain_error);
}

TEST_CASE("tail estimate degenerate densities and validation") {
  Graph g = grid_zd(2, 40);
  Window w = make_window(g, 0, 36);
  for (double p : {1.0, 0.0}) {
    TailCurve tc = tail_estimate(g, EnvironmentSpec::bernoulli(p), 0,
                                 {2, 4, 8}, 1.0, 200, 3, w);
    for (double q : tc.probs) CHECK(q == 0.0);
  }
  CHECK_THROWS_AS(tail_estimate(g, EnvironmentSpec::bernoulli(0.5), 0,
                                {4, 2}, 1.0, 10, 3, w),
                  std::domain_error);
  CHECK_THROWS_AS(tail_estimate(g, EnvironmentSpec::bernoulli(0.5), 0,
                                {2, 4, 16}, 1.0, 10, 3, w),
                  std::range_error);
  Vertex outside = ball(g, 0, 38).members().back();
  CHECK_THROWS_AS(tail_estimate(g, EnvironmentSpec::bernoulli(0.5), outside,
                                {2}, 1.0, 10, 3, w),
                  std::domain_error);
  CHECK(tail_estimate(g, EnvironmentSpec::bernoulli(0.5), 0, {2, 4}, 1.0, 50,
                      3, w)
            .v_cap == 9);
}

TEST_CASE("tail probabilities nest exactly and weight correctly") {
  Graph g = grid_zd(2, 70);
  Window w = make_window(g, 0, 64);
  TailCurve tc = tail_estimate(g, EnvironmentSpec::bernoulli(0.55), 0,
                               {2, 4, 8, 16}, 1.5, 4000, 23, w);
  for (std::size_t i = 1; i < tc.probs.size(); ++i)
    CHECK(tc.probs[i] <= tc.probs[i - 1]);  // exact: same trials reused
  for (std::size_t i = 0; i < tc.probs.size(); ++i)
    CHECK(tc.weighted[i] ==
          std::pow(double(tc.V_values[i]), 1.5) * tc.probs[i]);
  CHECK(tc.probs[0] > 0);  // finite clusters actually observed
}

TEST_CASE("supercritical tail decays against polynomial weight") {
  Graph g = grid_zd(2, 132);
  Window w = make_window(g, 0, 128);
  TailCurve tc = tail_estimate(g, EnvironmentSpec::bernoulli(0.95), 0,
                               {4, 8, 16, 32}, 1.0, 20000, 29, w);
  for (std::size_t i = 1; i + 1 < tc.weighted.size(); ++i) {
    double slack = 3.0 *
                   (std::pow(double(tc.V_values[i]), tc.chi) * tc.ci_half[i] +
                    std::pow(double(tc.V_values[i + 1]), tc.chi) *
                        tc.ci_half[i + 1]) /
                   z95;
    INFO("V " << tc.V_values[i] << " -> " << tc.V_values[i + 1]);
    CHECK(tc.weighted[i + 1] <= tc.weighted[i] + slack);
  }
}

TEST_CASE("clusters only grow under the monotone coupling") {
  Graph g = grid_zd(2, 12);
  VertexSet region = ball(g, 0, 8);
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    Configuration lo = sample(EnvironmentSpec::bernoulli(0.55), g, region, seed);
    Configuration hi = sample(EnvironmentSpec::bernoulli(0.75), g, region, seed);
    ClusterLabeling la = label_clusters(g, lo, region);
    ClusterLabeling lb = label_clusters(g, hi, region);
    for (int id = 0; id < la.cluster_count(); ++id) {
      int target = lb.label_of(la.members[id][0]);
      REQUIRE(target >= 0);
      for (Vertex v : la.members[id]) CHECK(lb.label_of(v) == target);
      CHECK(lb.cluster_sizes[std::size_t(target)] >=
            la.cluster_sizes[std::size_t(id)]);
    }
  }
}
