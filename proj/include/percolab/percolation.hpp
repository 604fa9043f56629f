#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "percolab/environments.hpp"
#include "percolab/graph.hpp"
#include "percolab/rng.hpp"
#include "percolab/stats.hpp"

namespace percolab {

namespace detail {

struct UnionFind {
  std::vector<int> parent, size;
  explicit UnionFind(std::size_t n) : parent(n, -1), size(n, 1) {}
  void activate(int v) { parent[v] = v; }
  bool active(int v) const { return parent[v] >= 0; }
  int find(int v) {
    int r = v;
    while (parent[r] != r) r = parent[r];
    while (parent[v] != r) {
      int nxt = parent[v];
      parent[v] = r;
      v = nxt;
    }
    return r;
  }
  int unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
    return a;
  }
};

// BFS distances within a vertex set, -1 outside or unreached
inline std::vector<int> bfs_in_set(const Graph& g, const VertexSet& allowed,
                                   Vertex src) {
  std::vector<int> dist(g.vertex_count(), -1);
  std::vector<Vertex> q{src};
  dist[src] = 0;
  for (std::size_t qi = 0; qi < q.size(); ++qi) {
    Vertex u = q[qi];
    for (Vertex w : g.neighbors(u))
      if (dist[w] < 0 && allowed.contains(w)) {
        dist[w] = dist[u] + 1;
        q.push_back(w);
      }
  }
  return dist;
}

// exact for sets up to 256 vertices, double-sweep lower bound beyond
inline int set_diameter(const Graph& g, const std::vector<Vertex>& members,
                        bool* exact) {
  VertexSet s(members);
  int best = 0;
  if (members.size() <= 256) {
    for (Vertex v : members) {
      auto d = bfs_in_set(g, s, v);
      for (Vertex w : members) best = std::max(best, d[w]);
    }
    if (exact) *exact = true;
    return best;
  }
  Vertex far = members[0];
  auto d = bfs_in_set(g, s, far);
  for (Vertex w : members)
    if (d[w] > d[far]) far = w;
  d = bfs_in_set(g, s, far);
  for (Vertex w : members) best = std::max(best, d[w]);
  if (exact) *exact = false;
  return best;
}

}  // namespace detail

// Open-cluster decomposition of a region.  Cluster ids are dense and ordered
// by each cluster's smallest vertex, so labelings are deterministic.
struct ClusterLabeling {
  VertexSet region;
  std::vector<int> label;  // per region index; -1 for closed vertices
  std::vector<std::size_t> cluster_sizes;
  std::vector<std::vector<Vertex>> members;

  int cluster_count() const { return int(cluster_sizes.size()); }
  int label_of(Vertex v) const {
    auto i = region.index_of(v);
    if (i < 0)
      throw std::domain_error("labeling: vertex " + std::to_string(v) +
                              " outside region");
    return label[std::size_t(i)];
  }
  int cluster_diameter(const Graph& g, int id, bool* exact = nullptr) const {
    if (id < 0 || id >= cluster_count())
      throw std::domain_error("labeling: no cluster " + std::to_string(id));
    if (diams_.empty()) diams_.assign(cluster_sizes.size(), -2);
    bool ex = true;
    if (diams_[id] == -2) {
      diams_[id] = detail::set_diameter(g, members[id], &ex);
      exact_.resize(cluster_sizes.size(), true);
      exact_[id] = ex;
    }
    if (exact) *exact = exact_.empty() ? true : bool(exact_[id]);
    return diams_[id];
  }

 private:
  mutable std::vector<int> diams_;
  mutable std::vector<char> exact_;
};

inline ClusterLabeling label_clusters(const Graph& g, const Configuration& c,
                                      const VertexSet& region) {
  for (Vertex v : region)
    if (!c.region.contains(v))
      throw std::domain_error("label_clusters: configuration does not cover " +
                              std::to_string(v));
  const std::size_t n = region.size();
  detail::UnionFind uf(n);
  std::vector<char> open(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!c.open(region.members()[i])) continue;
    open[i] = 1;
    uf.activate(int(i));
    for (Vertex w : g.neighbors(region.members()[i])) {
      auto j = region.index_of(w);
      if (j >= 0 && std::size_t(j) < i && open[std::size_t(j)])
        uf.unite(int(i), int(j));
    }
  }
  ClusterLabeling lab;
  lab.region = region;
  lab.label.assign(n, -1);
  std::vector<int> id_of(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!open[i]) continue;
    int r = uf.find(int(i));
    if (id_of[r] < 0) {  // first (smallest) member reached in index order
      id_of[r] = int(lab.cluster_sizes.size());
      lab.cluster_sizes.push_back(0);
      lab.members.emplace_back();
    }
    lab.label[i] = id_of[r];
    lab.cluster_sizes[id_of[r]] += 1;
    lab.members[id_of[r]].push_back(region.members()[i]);
  }
  return lab;
}

struct ClusterStats {
  std::size_t size = 0;
  int diameter = -1;  // sentinel for the empty cluster of a closed vertex
  bool diameter_exact = true;
  bool touches_boundary = false;
};

inline ClusterStats cluster_stats(const Graph& g, const ClusterLabeling& lab,
                                  Vertex x) {
  int id = lab.label_of(x);  // throws if x outside region
  ClusterStats st;
  if (id < 0) return st;
  st.size = lab.cluster_sizes[id];
  st.diameter = lab.cluster_diameter(g, id, &st.diameter_exact);
  VertexSet boundary = region_metric_boundary(g, lab.region);
  for (Vertex v : lab.members[id])
    if (boundary.contains(v)) {
      st.touches_boundary = true;
      break;
    }
  return st;
}

// Finite observation window: a metric ball, or an axis box on grid hosts.
// The boundary is the finite-volume surrogate for "touches infinity".
struct Window {
  Vertex center = 0;
  int radius = 0;
  VertexSet vertices;
  VertexSet boundary;
  VertexSet side_lo, side_hi;  // opposite faces; nonempty only for boxes
};

inline Window make_window(const Graph& g, Vertex center, int radius) {
  Window w;
  w.center = center;
  w.radius = radius;
  w.vertices = ball(g, center, radius);
  w.boundary = region_metric_boundary(g, w.vertices);
  return w;
}

// box |coord_i - center_i| <= radius on grid hosts; spanning runs between the
// two axis-0 faces
inline Window make_box_window(const Graph& g, Vertex center, int radius) {
  if (!g.has_labels() || g.family().rfind("grid", 0) != 0)
    throw std::domain_error("box windows need a grid host with coordinates");
  auto c = g.label(center);
  std::vector<Vertex> in, lo, hi;
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    auto L = g.label(Vertex(v));
    bool inside = true;
    for (std::size_t i = 0; i < L.size() && inside; ++i)
      inside = std::abs(L[i] - c[i]) <= radius;
    if (!inside) continue;
    in.push_back(Vertex(v));
    if (L[0] == c[0] - radius) lo.push_back(Vertex(v));
    if (L[0] == c[0] + radius) hi.push_back(Vertex(v));
  }
  std::size_t want = 1;
  for (std::size_t i = 0; i < c.size(); ++i) want *= 2 * std::size_t(radius) + 1;
  if (in.size() != want)
    throw std::domain_error("box window of radius " + std::to_string(radius) +
                            " does not fit inside the host");
  Window w;
  w.center = center;
  w.radius = radius;
  w.vertices = VertexSet(std::move(in));
  w.boundary = region_metric_boundary(g, w.vertices);
  w.side_lo = VertexSet(std::move(lo));
  w.side_hi = VertexSet(std::move(hi));
  return w;
}

struct UniquenessReport {
  double unique_frequency = 0;  // trials with at most one macroscopic cluster
  double mean_macroscopic = 0;
  std::uint64_t trials = 0;
};

// macroscopic = touches the window boundary and spans at least half the
// window radius in diameter
inline UniquenessReport uniqueness_stats(const Graph& g,
                                         const EnvironmentSpec& spec,
                                         const Window& w, std::uint64_t trials,
                                         std::uint64_t seed) {
  if (w.boundary.empty())
    throw std::domain_error("uniqueness: window has no metric boundary");
  Sampler sampler(g, spec, w.vertices);
  std::uint64_t unique = 0, total = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    Configuration c = sampler.sample(keyed(seed, tag::trial, 1, t));
    ClusterLabeling lab = label_clusters(g, c, w.vertices);
    int macro = 0;
    for (int id = 0; id < lab.cluster_count(); ++id) {
      bool touches = false;
      for (Vertex v : lab.members[id])
        if (w.boundary.contains(v)) {
          touches = true;
          break;
        }
      if (!touches) continue;
      if (2 * lab.cluster_diameter(g, id) >= w.radius) ++macro;
    }
    unique += macro <= 1;
    total += std::uint64_t(macro);
  }
  UniquenessReport rep;
  rep.trials = trials;
  rep.unique_frequency = double(unique) / double(trials);
  rep.mean_macroscopic = double(total) / double(trials);
  return rep;
}

struct SweepCurve {
  std::vector<double> p_grid, probs, ci_half;
  std::uint64_t samples = 0;
};

// Incremental union-find sweep: vertices activate in increasing uniform-mark
// order, so thresholding the first-spanning mark at each p reproduces the
// bernoulli(p) spanning probability with one pass per sample.  Boxes span
// face to face, balls span center to boundary.
inline SweepCurve pc_sweep(const Graph& g, const Window& w,
                           std::uint64_t samples,
                           const std::vector<double>& p_grid,
                           std::uint64_t seed) {
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    if (p_grid[i] < 0 || p_grid[i] > 1)
      throw std::domain_error("pc_sweep: p_grid entries must lie in [0,1]");
    if (i && p_grid[i] < p_grid[i - 1])
      throw std::domain_error("pc_sweep: p_grid must be sorted");
  }
  const bool box_mode = !w.side_lo.empty();
  const std::size_t n = w.vertices.size();
  const auto& mem = w.vertices.members();
  // per-vertex flag masks: bit0 = lo face or center, bit1 = hi face or boundary
  std::vector<char> base_flag(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    Vertex v = mem[i];
    if (box_mode) {
      base_flag[i] = char((w.side_lo.contains(v) ? 1 : 0) |
                          (w.side_hi.contains(v) ? 2 : 0));
    } else {
      base_flag[i] = char((v == w.center ? 1 : 0) |
                          (w.boundary.contains(v) ? 2 : 0));
    }
  }
  std::vector<double> thresholds(samples);
  std::vector<std::pair<double, int>> order(n);
  for (std::uint64_t s = 0; s < samples; ++s) {
    const std::uint64_t seed_s = keyed(seed, tag::trial, 17, s);
    for (std::size_t i = 0; i < n; ++i)
      order[i] = {uniform01(seed_s, tag::site, std::uint64_t(mem[i]), 0),
                  int(i)};
    std::sort(order.begin(), order.end());
    detail::UnionFind uf(n);
    std::vector<char> flag(base_flag);
    double theta = 1.0;
    for (auto& [u, i] : order) {
      uf.activate(i);
      int root = i;
      for (Vertex nb : g.neighbors(mem[i])) {
        auto j = w.vertices.index_of(nb);
        if (j >= 0 && uf.active(int(j))) {
          int other = uf.find(int(j));
          char merged = char(flag[root] | flag[other]);
          root = uf.unite(root, other);
          flag[root] = merged;
        }
      }
      if (flag[root] == 3) {
        theta = u;
        break;
      }
    }
    thresholds[s] = theta;
  }
  SweepCurve curve;
  curve.samples = samples;
  curve.p_grid = p_grid;
  for (double p : p_grid) {
    std::uint64_t hits = 0;
    for (double th : thresholds) hits += th <= p;
    Interval iv = wilson(hits, samples, z95);
    curve.probs.push_back(double(hits) / double(samples));
    curve.ci_half.push_back(iv.halfwidth());
  }
  return curve;
}

struct TailCurve {
  std::vector<int> V_values;
  std::vector<double> probs;  // P[V < |C_x| < infinity] estimates
  double chi = 0;
  std::vector<double> weighted;  // V^chi * prob
  std::vector<double> ci_half;
  std::uint64_t trials = 0;
  int v_cap = 0;  // window-radius/4 heuristic ceiling applied to V_values
};

namespace detail {

// Grow C_x expanding the frontier vertex farthest from the window center
// first; tells finite from boundary-touching with near-ballistic work in the
// supercritical regime.  is_open must be pure for the trial.
template <typename OpenFn>
std::pair<std::size_t, bool> cluster_size_or_escape(
    const Graph& g, const Window& w, const std::vector<int>& center_dist,
    Vertex x, const OpenFn& is_open, std::vector<int>& stamp, int epoch) {
  if (!is_open(x)) return {0, false};
  std::priority_queue<std::pair<int, Vertex>> pq;
  pq.push({center_dist[x], x});
  stamp[x] = epoch;
  std::size_t size = 0;
  bool escaped = false;
  while (!pq.empty()) {
    Vertex u = pq.top().second;
    pq.pop();
    ++size;
    if (w.boundary.contains(u)) {
      escaped = true;
      break;
    }
    for (Vertex nb : g.neighbors(u)) {
      if (stamp[nb] == epoch || !w.vertices.contains(nb)) continue;
      stamp[nb] = epoch;  // closed vertices stamped too: tested only once
      if (is_open(nb)) pq.push({center_dist[nb], nb});
    }
  }
  return {size, escaped};
}

}  // namespace detail

inline TailCurve tail_estimate(const Graph& g, const EnvironmentSpec& spec,
                               Vertex x, const std::vector<int>& V_values,
                               double chi, std::uint64_t trials,
                               std::uint64_t seed, const Window& w) {
  if (V_values.empty()) throw std::domain_error("tail: no V values");
  for (std::size_t i = 0; i < V_values.size(); ++i) {
    if (V_values[i] < 0 || (i && V_values[i] <= V_values[i - 1]))
      throw std::domain_error("tail: V_values must be increasing and >= 0");
  }
  if (!w.vertices.contains(x))
    throw std::domain_error("tail: x outside window");
  const int cap = w.radius / 4;
  if (V_values.back() > cap)
    throw std::range_error("tail: max V " + std::to_string(V_values.back()) +
                           " exceeds window cap radius/4 = " +
                           std::to_string(cap));
  if (w.boundary.empty())
    throw std::domain_error("tail: window has no metric boundary");

  std::vector<int> center_dist = detail::bfs_in_set(g, w.vertices, w.center);
  std::vector<int> stamp(g.vertex_count(), -1);
  std::vector<std::uint64_t> hits(V_values.size(), 0);

  const bool lazy = spec.kind == EnvKind::bernoulli;
  Sampler sampler = lazy ? Sampler(g, EnvironmentSpec::bernoulli(spec.p),
                                   VertexSet({x}))
                         : Sampler(g, spec, w.vertices);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::uint64_t seed_t = keyed(seed, tag::trial, 23, t);
    std::pair<std::size_t, bool> res;
    if (lazy) {
      auto is_open = [&](Vertex v) { return bernoulli_open(seed_t, v, spec.p); };
      res = detail::cluster_size_or_escape(g, w, center_dist, x, is_open,
                                           stamp, int(t) + 1);
    } else {
      Configuration c = sampler.sample(seed_t);
      auto is_open = [&](Vertex v) { return c.open(v); };
      res = detail::cluster_size_or_escape(g, w, center_dist, x, is_open,
                                           stamp, int(t) + 1);
    }
    if (res.second) continue;  // escaped: not a finite cluster
    for (std::size_t i = 0; i < V_values.size(); ++i)
      hits[i] += res.first > std::size_t(V_values[i]);
  }

  TailCurve curve;
  curve.V_values = V_values;
  curve.chi = chi;
  curve.trials = trials;
  curve.v_cap = cap;
  for (std::size_t i = 0; i < V_values.size(); ++i) {
    double p = double(hits[i]) / double(trials);
    curve.probs.push_back(p);
    curve.weighted.push_back(std::pow(double(V_values[i]), chi) * p);
    curve.ci_half.push_back(wilson(hits[i], trials, z95).halfwidth());
  }
  return curve;
}

}  // namespace percolab
