#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace percolab {

using Vertex = std::int32_t;

struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// floor(num/den) for nonnegative num, positive den; used for the fractional
// radii (5r/6, 3L/6, ...) that appear throughout: fractions always truncate.
inline int frac_floor(long long num, long long den) {
  if (num < 0 || den <= 0) throw std::domain_error("frac_floor: bad fraction");
  return int(num / den);
}

// Sorted, duplicate-free set of vertex ids.
class VertexSet {
 public:
  VertexSet() = default;
  explicit VertexSet(std::vector<Vertex> ids) : v_(std::move(ids)) {
    std::sort(v_.begin(), v_.end());
    v_.erase(std::unique(v_.begin(), v_.end()), v_.end());
  }

  bool contains(Vertex x) const {
    return std::binary_search(v_.begin(), v_.end(), x);
  }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  const std::vector<Vertex>& members() const { return v_; }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }
  Vertex smallest() const {
    if (v_.empty()) throw std::domain_error("VertexSet: empty");
    return v_.front();
  }

  // index of x within the sorted member list, -1 if absent
  std::int64_t index_of(Vertex x) const {
    auto it = std::lower_bound(v_.begin(), v_.end(), x);
    if (it == v_.end() || *it != x) return -1;
    return it - v_.begin();
  }

  std::optional<int> cached_diameter() const { return cached_diameter_; }
  void set_cached_diameter(int d) const { cached_diameter_ = d; }

  std::uint64_t hash64() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (Vertex x : v_) {
      h ^= std::uint64_t(std::uint32_t(x));
      h *= 0x100000001b3ull;
    }
    return h;
  }

  bool operator==(const VertexSet& o) const { return v_ == o.v_; }

 private:
  std::vector<Vertex> v_;
  mutable std::optional<int> cached_diameter_;
};

inline VertexSet set_intersect(const VertexSet& a, const VertexSet& b) {
  std::vector<Vertex> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return VertexSet(std::move(out));
}

inline VertexSet set_union(const VertexSet& a, const VertexSet& b) {
  std::vector<Vertex> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return VertexSet(std::move(out));
}

inline VertexSet set_minus(const VertexSet& a, const VertexSet& b) {
  std::vector<Vertex> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return VertexSet(std::move(out));
}

inline bool is_subset(const VertexSet& a, const VertexSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Undirected edge, stored with u < v.
struct Edge {
  Vertex u, v;
  Edge(Vertex a, Vertex b) : u(std::min(a, b)), v(std::max(a, b)) {}
  bool operator==(const Edge& o) const { return u == o.u && v == o.v; }
  bool operator<(const Edge& o) const {
    return u != o.u ? u < o.u : v < o.v;
  }
};

// Finite connected simple graph with sorted adjacency.  Generated families
// carry integer coordinate labels and remember which vertices are truncation
// artifacts of the infinite parent graph (the "host boundary"); graphs loaded
// from edge lists have neither.
class Graph {
 public:
  static Graph from_adjacency(std::vector<std::vector<Vertex>> adj,
                              std::string family = "adhoc",
                              std::vector<int> labels = {}, int label_dim = 0,
                              VertexSet host_boundary = VertexSet()) {
    Graph g;
    const std::size_t n = adj.size();
    if (n == 0) throw std::invalid_argument("graph: no vertices");
    g.offsets_.assign(n + 1, 0);
    for (std::size_t u = 0; u < n; ++u) {
      auto& lst = adj[u];
      std::sort(lst.begin(), lst.end());
      for (std::size_t i = 0; i < lst.size(); ++i) {
        Vertex v = lst[i];
        if (v < 0 || std::size_t(v) >= n)
          throw std::invalid_argument("graph: neighbor id out of range");
        if (v == Vertex(u))
          throw std::invalid_argument("graph: self-loop at vertex " +
                                      std::to_string(u));
        if (i > 0 && lst[i] == lst[i - 1])
          throw std::invalid_argument("graph: duplicate edge at vertex " +
                                      std::to_string(u));
      }
      g.offsets_[u + 1] = g.offsets_[u] + lst.size();
    }
    g.nbrs_.reserve(g.offsets_[n]);
    for (auto& lst : adj)
      g.nbrs_.insert(g.nbrs_.end(), lst.begin(), lst.end());
    // symmetry
    for (std::size_t u = 0; u < n; ++u)
      for (Vertex v : g.neighbors(Vertex(u))) {
        auto nb = g.neighbors(v);
        if (!std::binary_search(nb.begin(), nb.end(), Vertex(u)))
          throw std::invalid_argument(
              "graph: adjacency not symmetric between " + std::to_string(u) +
              " and " + std::to_string(v));
      }
    // connectivity
    {
      std::vector<char> seen(n, 0);
      std::vector<Vertex> stack{0};
      seen[0] = 1;
      std::size_t cnt = 1;
      while (!stack.empty()) {
        Vertex u = stack.back();
        stack.pop_back();
        for (Vertex v : g.neighbors(u))
          if (!seen[v]) {
            seen[v] = 1;
            ++cnt;
            stack.push_back(v);
          }
      }
      if (cnt != n)
        throw std::invalid_argument("graph: not connected (reached " +
                                    std::to_string(cnt) + " of " +
                                    std::to_string(n) + " vertices)");
    }
    g.max_degree_ = 0;
    for (std::size_t u = 0; u < n; ++u)
      g.max_degree_ = std::max<int>(g.max_degree_, int(g.degree(Vertex(u))));
    g.family_ = std::move(family);
    g.labels_ = std::move(labels);
    g.label_dim_ = label_dim;
    if (g.label_dim_ > 0 && g.labels_.size() != n * std::size_t(label_dim))
      throw std::invalid_argument("graph: label table size mismatch");
    g.host_boundary_ = std::move(host_boundary);
    return g;
  }

  std::size_t vertex_count() const { return offsets_.size() - 1; }
  std::size_t edge_count() const { return nbrs_.size() / 2; }
  int max_degree() const { return max_degree_; }
  std::size_t degree(Vertex u) const {
    return offsets_[u + 1] - offsets_[u];
  }
  std::span<const Vertex> neighbors(Vertex u) const {
    return {nbrs_.data() + offsets_[u], nbrs_.data() + offsets_[u + 1]};
  }
  bool valid(Vertex u) const {
    return u >= 0 && std::size_t(u) < vertex_count();
  }

  const std::string& family() const { return family_; }
  bool has_labels() const { return label_dim_ > 0; }
  int label_dim() const { return label_dim_; }
  std::span<const int> label(Vertex u) const {
    return {labels_.data() + std::size_t(u) * label_dim_,
            labels_.data() + (std::size_t(u) + 1) * label_dim_};
  }
  const VertexSet& host_boundary() const { return host_boundary_; }

  // structural equality (labels and provenance excluded)
  bool operator==(const Graph& o) const {
    return offsets_ == o.offsets_ && nbrs_ == o.nbrs_;
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Vertex> nbrs_;
  int max_degree_ = 0;
  std::string family_;
  std::vector<int> labels_;
  int label_dim_ = 0;
  VertexSet host_boundary_;
};

// Path: a vertex sequence with consecutive vertices adjacent.
class PathSeq {
 public:
  PathSeq() = default;
  PathSeq(const Graph& g, std::vector<Vertex> verts) : v_(std::move(verts)) {
    if (v_.empty()) throw std::domain_error("path: empty");
    for (std::size_t i = 0; i + 1 < v_.size(); ++i) {
      auto nb = g.neighbors(v_[i]);
      if (!std::binary_search(nb.begin(), nb.end(), v_[i + 1]))
        throw std::domain_error("path: vertices " + std::to_string(v_[i]) +
                                " and " + std::to_string(v_[i + 1]) +
                                " are not adjacent");
    }
  }
  int length() const { return int(v_.size()) - 1; }
  const std::vector<Vertex>& vertices() const { return v_; }

 private:
  std::vector<Vertex> v_;
};

namespace detail {
// single-source BFS distances; -1 for unreached (never happens: connected)
inline std::vector<int> bfs_dist(const Graph& g, Vertex x, int cap = -1) {
  std::vector<int> dist(g.vertex_count(), -1);
  std::vector<Vertex> cur{x}, nxt;
  dist[x] = 0;
  int d = 0;
  while (!cur.empty() && (cap < 0 || d < cap)) {
    ++d;
    nxt.clear();
    for (Vertex u : cur)
      for (Vertex v : g.neighbors(u))
        if (dist[v] < 0) {
          dist[v] = d;
          nxt.push_back(v);
        }
    cur.swap(nxt);
  }
  return dist;
}
}  // namespace detail

inline VertexSet ball(const Graph& g, Vertex x, int r) {
  if (!g.valid(x)) throw std::domain_error("ball: bad center");
  if (r < 0) throw std::domain_error("ball: negative radius");
  auto dist = detail::bfs_dist(g, x, r);
  std::vector<Vertex> out;
  for (std::size_t v = 0; v < dist.size(); ++v)
    if (dist[v] >= 0 && dist[v] <= r) out.push_back(Vertex(v));
  return VertexSet(std::move(out));
}

// fractional radius: B(x, num/den) = B(x, floor(num/den))
inline VertexSet ball(const Graph& g, Vertex x, long long num, long long den) {
  return ball(g, x, frac_floor(num, den));
}

// B(A, r): multi-source ball
inline VertexSet ball(const Graph& g, const VertexSet& A, int r) {
  if (r < 0) throw std::domain_error("ball: negative radius");
  if (A.empty()) throw std::domain_error("ball: empty source set");
  std::vector<int> dist(g.vertex_count(), -1);
  std::vector<Vertex> cur, nxt, out;
  for (Vertex x : A) {
    if (!g.valid(x)) throw std::domain_error("ball: bad source vertex");
    dist[x] = 0;
    cur.push_back(x);
    out.push_back(x);
  }
  for (int d = 1; d <= r && !cur.empty(); ++d) {
    nxt.clear();
    for (Vertex u : cur)
      for (Vertex v : g.neighbors(u))
        if (dist[v] < 0) {
          dist[v] = d;
          nxt.push_back(v);
          out.push_back(v);
        }
    cur.swap(nxt);
  }
  return VertexSet(std::move(out));
}

// Relative edge boundary of A inside an ambient set: edges {a, b} with a in A
// and b in ambient \ A.  Ambient defaults to the whole graph.
inline std::vector<Edge> boundary_edges(const Graph& g, const VertexSet& A,
                                        const VertexSet* ambient = nullptr) {
  if (ambient && !is_subset(A, *ambient))
    throw std::domain_error("boundary_edges: A not inside ambient");
  std::vector<Edge> out;
  for (Vertex a : A) {
    if (!g.valid(a)) throw std::domain_error("boundary_edges: bad vertex");
    for (Vertex b : g.neighbors(a)) {
      if (A.contains(b)) continue;
      if (ambient && !ambient->contains(b)) continue;
      out.emplace_back(a, b);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline int distance(const Graph& g, Vertex a, Vertex b) {
  if (!g.valid(a) || !g.valid(b)) throw std::domain_error("distance: bad vertex");
  if (a == b) return 0;
  auto dist = detail::bfs_dist(g, a);
  return dist[b];
}

// d(A, B) = min over pairs; 0 if the sets intersect
inline int distance(const Graph& g, const VertexSet& A, const VertexSet& B) {
  if (A.empty() || B.empty()) throw std::domain_error("distance: empty set");
  std::vector<int> dist(g.vertex_count(), -1);
  std::vector<Vertex> cur, nxt;
  for (Vertex x : A) {
    dist[x] = 0;
    cur.push_back(x);
  }
  for (Vertex x : B)
    if (dist[x] == 0) return 0;
  int d = 0;
  while (!cur.empty()) {
    ++d;
    nxt.clear();
    for (Vertex u : cur)
      for (Vertex v : g.neighbors(u))
        if (dist[v] < 0) {
          dist[v] = d;
          if (B.contains(v)) return d;
          nxt.push_back(v);
        }
    cur.swap(nxt);
  }
  throw std::logic_error("distance: sets unreachable in a connected graph");
}

// Diameter of a vertex set in the ambient graph metric (not the induced one).
inline int diameter(const Graph& g, const VertexSet& A) {
  if (A.empty()) throw std::domain_error("diameter: empty set");
  if (auto c = A.cached_diameter()) return *c;
  int best = 0;
  for (Vertex a : A) {
    auto dist = detail::bfs_dist(g, a);
    for (Vertex b : A) best = std::max(best, dist[b]);
  }
  A.set_cached_diameter(best);
  return best;
}

inline int eccentricity(const Graph& g, Vertex x) {
  auto dist = detail::bfs_dist(g, x);
  int e = 0;
  for (int d : dist) e = std::max(e, d);
  return e;
}

// Components of the subgraph induced on S, ordered by smallest member.
inline std::vector<VertexSet> connected_components(const Graph& g,
                                                   const VertexSet& S) {
  std::vector<char> seen(S.size(), 0);
  std::vector<VertexSet> out;
  for (std::size_t i = 0; i < S.size(); ++i) {
    if (seen[i]) continue;
    std::vector<Vertex> comp;
    std::vector<Vertex> stack{S.members()[i]};
    seen[i] = 1;
    while (!stack.empty()) {
      Vertex u = stack.back();
      stack.pop_back();
      comp.push_back(u);
      for (Vertex v : g.neighbors(u)) {
        auto j = S.index_of(v);
        if (j >= 0 && !seen[j]) {
          seen[j] = 1;
          stack.push_back(v);
        }
      }
    }
    out.emplace_back(std::move(comp));
  }
  return out;
}

// Initial segment of a shortest path from x to a farthest vertex.  Along any
// shortest path d(sigma_i, sigma_j) = |i - j| for all pairs, which is the
// property callers rely on.
inline PathSeq geodesic_ray(const Graph& g, Vertex x, int length) {
  if (!g.valid(x)) throw std::domain_error("geodesic_ray: bad vertex");
  if (length < 0) throw std::domain_error("geodesic_ray: negative length");
  std::vector<int> dist(g.vertex_count(), -1);
  std::vector<Vertex> parent(g.vertex_count(), -1);
  std::vector<Vertex> cur{x}, nxt;
  dist[x] = 0;
  Vertex far = x;
  while (!cur.empty()) {
    nxt.clear();
    for (Vertex u : cur)
      for (Vertex v : g.neighbors(u))
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          parent[v] = u;
          if (dist[v] > dist[far] || (dist[v] == dist[far] && v < far))
            far = v;
          nxt.push_back(v);
        }
    cur.swap(nxt);
  }
  int ecc = dist[far];
  if (length > ecc)
    throw std::range_error("geodesic_ray: length " + std::to_string(length) +
                           " exceeds maximum feasible length " +
                           std::to_string(ecc) + " from vertex " +
                           std::to_string(x));
  std::vector<Vertex> rev;
  for (Vertex v = far; v != -1; v = parent[v]) rev.push_back(v);
  std::reverse(rev.begin(), rev.end());  // x ... far
  rev.resize(std::size_t(length) + 1);
  return PathSeq(g, std::move(rev));
}

// Metric boundary of a window: vertices with a neighbor outside the window,
// plus any window vertex on the host truncation shell.  This makes "touches
// the boundary" meaningful both for proper sub-windows and for windows that
// exhaust a generated host.
inline VertexSet region_metric_boundary(const Graph& g,
                                        const VertexSet& region) {
  std::vector<Vertex> out;
  for (Vertex v : region) {
    bool edge_out = false;
    for (Vertex w : g.neighbors(v))
      if (!region.contains(w)) {
        edge_out = true;
        break;
      }
    if (edge_out || g.host_boundary().contains(v)) out.push_back(v);
  }
  return VertexSet(std::move(out));
}

// ---- generators ----------------------------------------------------------

namespace detail {
inline std::uint64_t pack_coords(std::span<const int> c, int radius) {
  std::uint64_t key = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    key |= std::uint64_t(std::uint16_t(c[i] + radius)) << (16 * i);
  return key;
}
}  // namespace detail

// L1 ball of the hypercubic lattice.  Vertex 0 is the origin; vertices are
// ordered by (|x|_1, lexicographic), so shells are contiguous.
inline Graph grid_zd(int dim, int radius) {
  if (dim < 1 || dim > 4)
    throw std::domain_error("grid_zd: dim must be in [1, 4]");
  if (radius < 1) throw std::domain_error("grid_zd: radius must be >= 1");
  std::vector<std::vector<int>> pts;
  std::vector<int> cur(dim, 0);
  // enumerate all |x|_1 <= radius
  auto rec = [&](auto&& self, int i, int budget) -> void {
    if (i == dim) {
      pts.push_back(cur);
      return;
    }
    for (int v = -budget; v <= budget; ++v) {
      cur[i] = v;
      self(self, i + 1, budget - std::abs(v));
    }
    cur[i] = 0;
  };
  rec(rec, 0, radius);
  auto norm1 = [](const std::vector<int>& p) {
    int s = 0;
    for (int v : p) s += std::abs(v);
    return s;
  };
  std::sort(pts.begin(), pts.end(),
            [&](const std::vector<int>& a, const std::vector<int>& b) {
              int na = norm1(a), nb = norm1(b);
              if (na != nb) return na < nb;
              return a < b;
            });
  std::unordered_map<std::uint64_t, Vertex> id;
  id.reserve(pts.size() * 2);
  for (std::size_t i = 0; i < pts.size(); ++i)
    id[detail::pack_coords(pts[i], radius)] = Vertex(i);
  std::vector<std::vector<Vertex>> adj(pts.size());
  std::vector<int> labels;
  labels.reserve(pts.size() * dim);
  std::vector<Vertex> shell;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    labels.insert(labels.end(), p.begin(), p.end());
    if (norm1(p) == radius) shell.push_back(Vertex(i));
    std::vector<int> q = p;
    for (int k = 0; k < dim; ++k)
      for (int d : {-1, +1}) {
        q[k] = p[k] + d;
        if (norm1(q) <= radius)
          adj[i].push_back(id.at(detail::pack_coords(q, radius)));
        q[k] = p[k];
      }
  }
  return Graph::from_adjacency(std::move(adj), "grid", std::move(labels), dim,
                               VertexSet(std::move(shell)));
}

// Rooted (branch)-regular tree truncated at the given depth: the root has
// `branch` children, every other internal vertex branch - 1.  Vertex 0 is the
// root; label = depth.
inline Graph regular_tree(int branch, int depth) {
  if (branch < 2) throw std::domain_error("regular_tree: branch must be >= 2");
  if (depth < 1) throw std::domain_error("regular_tree: depth must be >= 1");
  std::vector<std::vector<Vertex>> adj(1);
  std::vector<int> labels{0};
  std::vector<Vertex> leaves;
  std::vector<Vertex> level{0};
  Vertex next = 1;
  for (int d = 1; d <= depth; ++d) {
    std::vector<Vertex> nlevel;
    for (Vertex u : level) {
      int kids = (u == 0) ? branch : branch - 1;
      for (int c = 0; c < kids; ++c) {
        Vertex v = next++;
        adj.emplace_back();
        labels.push_back(d);
        adj[u].push_back(v);
        adj[v].push_back(u);
        nlevel.push_back(v);
        if (d == depth) leaves.push_back(v);
      }
    }
    level.swap(nlevel);
  }
  return Graph::from_adjacency(std::move(adj), "tree", std::move(labels), 1,
                               VertexSet(std::move(leaves)));
}

// Two copies of grid_zd(dim, radius) joined by a single edge between their
// origins.  Labels are (copy, coords...).
inline Graph joined_grids(int dim, int radius) {
  Graph g1 = grid_zd(dim, radius);
  const std::size_t n = g1.vertex_count();
  std::vector<std::vector<Vertex>> adj(2 * n);
  for (std::size_t u = 0; u < n; ++u)
    for (Vertex v : g1.neighbors(Vertex(u))) {
      adj[u].push_back(v);
      adj[u + n].push_back(Vertex(std::size_t(v) + n));
    }
  adj[0].push_back(Vertex(n));
  adj[n].push_back(0);
  std::vector<int> labels;
  labels.reserve(2 * n * (dim + 1));
  for (int side = 0; side < 2; ++side)
    for (std::size_t u = 0; u < n; ++u) {
      labels.push_back(side);
      auto lab = g1.label(Vertex(u));
      labels.insert(labels.end(), lab.begin(), lab.end());
    }
  std::vector<Vertex> shell;
  for (Vertex v : g1.host_boundary()) {
    shell.push_back(v);
    shell.push_back(Vertex(std::size_t(v) + n));
  }
  return Graph::from_adjacency(std::move(adj), "joined", std::move(labels),
                               dim + 1, VertexSet(std::move(shell)));
}

// ---- edge-list file format ------------------------------------------------
//
//   plgraph 1
//   # optional comments
//   u v
//
// one undirected edge per line, vertex ids 0-based, graph must be connected.

inline Graph from_edge_list(std::istream& in,
                            const std::string& name = "<stream>") {
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw parse_error(name + ":" + std::to_string(lineno) + ": " + what);
  };
  if (!std::getline(in, line)) {
    lineno = 1;
    fail("empty input, expected header 'plgraph 1'");
  }
  ++lineno;
  while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
    line.pop_back();
  if (line != "plgraph 1") fail("bad header, expected 'plgraph 1'");
  std::vector<std::pair<Vertex, Vertex>> edges;
  Vertex maxid = -1;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long long a, b;
    if (!(ls >> a >> b)) fail("expected 'u v'");
    std::string rest;
    if (ls >> rest) fail("trailing tokens after edge");
    if (a < 0 || b < 0 || a > 0x7fffffff || b > 0x7fffffff)
      fail("vertex id out of range");
    if (a == b) fail("self-loop");
    edges.emplace_back(Vertex(a), Vertex(b));
    maxid = std::max({maxid, Vertex(a), Vertex(b)});
  }
  if (edges.empty()) {
    lineno = 1;
    fail("no edges");
  }
  std::vector<std::vector<Vertex>> adj(std::size_t(maxid) + 1);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  // duplicate detection with a helpful position
  {
    std::vector<std::pair<Vertex, Vertex>> norm;
    norm.reserve(edges.size());
    for (auto [a, b] : edges) norm.emplace_back(std::min(a, b), std::max(a, b));
    std::sort(norm.begin(), norm.end());
    auto dup = std::adjacent_find(norm.begin(), norm.end());
    if (dup != norm.end())
      throw parse_error(name + ": duplicate edge " +
                        std::to_string(dup->first) + " " +
                        std::to_string(dup->second));
  }
  try {
    return Graph::from_adjacency(std::move(adj), "file");
  } catch (const std::invalid_argument& e) {
    throw parse_error(name + ": " + e.what());
  }
}

inline void serialize(const Graph& g, std::ostream& out) {
  out << "plgraph 1\n";
  out << "# vertices " << g.vertex_count() << " edges " << g.edge_count()
      << "\n";
  for (std::size_t u = 0; u < g.vertex_count(); ++u)
    for (Vertex v : g.neighbors(Vertex(u)))
      if (Vertex(u) < v) out << u << " " << v << "\n";
}

}  // namespace percolab
