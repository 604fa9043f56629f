#pragma once
// Separation events: S(x, L) holds when two spread-out connected sets near x
// are joined by no open path inside B(x, L).  The witness check is exact (it
// reduces to cluster labeling); finding a witness is the hard part, so the
// detector comes in a heuristic flavor (sound when it says "separated",
// inconclusive otherwise) and an exhaustive flavor for small cores.  The
// cascade checker descends from one separation scale to the next along
// disjoint connecting paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "percolab/environments.hpp"
#include "percolab/graph.hpp"
#include "percolab/isoperimetry.hpp"
#include "percolab/percolation.hpp"

namespace percolab {

// Geometry knobs for witness checking and the cascade.  The denominators
// default to the asymptotic analysis' values; at desk scale the derived
// thresholds collapse to their floors (1 for diameters, 2 for distances),
// which is intended.  Every report carries the thresholds it ran with.
struct SeparationThresholds {
  int inner_num = 3, inner_den = 6;  // witness sets live in B(x, 3L/6)
  int min_diam_den = 100;            // witness diameter >= L/100, floor 1
  int relax_diam_den = 1000;         // cascade extraction diameter, floor 1
  int relax_dist_den = 750;          // cascade mutual distance, floor 2
  int scale_ratio = 4;  // min admissible L_big / L_small (asymptotic regime: 2000)
  double c9 = 1.0;      // cascade count constant, advisory at desk scale
  double gamma = 1.5;   // scale growth exponent, for the advisory target
  double iso_dim = 2.0;
  double upper_dim = 2.0;

  int inner_radius(int L) const { return frac_floor(1LL * L * inner_num, inner_den); }
  int min_diameter(int L) const { return std::max(1, L / min_diam_den); }
  int relaxed_diameter(int L) const { return std::max(1, L / relax_diam_den); }
  int relaxed_distance(int L) const { return std::max(2, L / relax_dist_den); }
  // advisory count target c9 * L^(gamma (d_i - 1)/d_i - (d_u - 1))
  int cascade_target(int L_small) const {
    double expo = gamma * (iso_dim - 1.0) / iso_dim - (upper_dim - 1.0);
    return int(std::floor(c9 * std::pow(double(L_small), expo)));
  }
};

struct SeparationWitness {
  Vertex x = 0;
  int L = 0;
  VertexSet A, B;
};

struct DetectorResult {
  enum class Verdict { unknown, separated, not_separated };
  enum class Method { heuristic, exact };
  Verdict verdict = Verdict::unknown;
  Method method = Method::heuristic;
  std::optional<SeparationWitness> witness;
  SeparationThresholds thresholds;
};

inline std::string to_string(DetectorResult::Verdict v) {
  switch (v) {
    case DetectorResult::Verdict::separated: return "separated";
    case DetectorResult::Verdict::not_separated: return "not_separated";
    default: return "unknown";
  }
}

namespace detail {

inline void require_covered(const Configuration& c, const VertexSet& search,
                            const char* who) {
  for (Vertex v : search)
    if (!c.region.contains(v))
      throw std::domain_error(std::string(who) + ": configuration does not cover " +
                              "the search ball, vertex " + std::to_string(v) +
                              " is missing");
}

// ids of open clusters whose 1-neighborhood meets A ("T(A)"); equivalently the
// clusters an open path starting within distance 1 of A can live in
inline std::vector<int> touched_clusters(const Graph& g, const ClusterLabeling& lab,
                                         const VertexSet& A) {
  std::vector<int> ids;
  for (Vertex v : ball(g, A, 1)) {
    if (!lab.region.contains(v)) continue;
    int id = lab.label_of(v);
    if (id >= 0) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

inline bool touch_disjoint(const Graph& g, const ClusterLabeling& lab,
                           const VertexSet& A, const VertexSet& B) {
  auto ta = touched_clusters(g, lab, A);
  auto tb = touched_clusters(g, lab, B);
  std::vector<int> both;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(),
                        std::back_inserter(both));
  return both.empty();
}

// ambient diameter >= need, decided with capped traversals so the cost stays
// local to the set (the full diameter is never needed, only the predicate)
inline bool spread_at_least(const Graph& g, const VertexSet& S, int need) {
  if (need <= 0) return !S.empty();
  if (S.size() < 2) return false;
  if (need == 1) return true;  // two distinct vertices are at distance >= 1
  for (Vertex a : S) {
    auto dist = bfs_dist(g, a, need - 1);
    for (Vertex b : S)
      if (dist[b] < 0) return true;  // unreached within need - 1
  }
  return false;
}

// all witness conditions except the open-path one
inline bool witness_geometry(const Graph& g, const VertexSet& inner, int min_diam,
                             const VertexSet& A, const VertexSet& B) {
  if (A.empty() || B.empty()) return false;
  if (!is_subset(A, inner) || !is_subset(B, inner)) return false;
  if (connected_components(g, A).size() != 1) return false;
  if (connected_components(g, B).size() != 1) return false;
  if (distance(g, A, B) <= 1) return false;
  return spread_at_least(g, A, min_diam) && spread_at_least(g, B, min_diam);
}

}  // namespace detail

// Exact decision: is (A, B) a separation witness at (x, L)?  A and B must be
// connected subsets of B(x, 3L/6) with diameters at least the threshold and
// ambient distance > 1, and no open path inside B(x, L) may connect them.  A
// path "connects" A to B when it starts within distance 1 of A and ends
// within distance 1 of B, so the open-path condition reduces to: no open
// cluster of B(x, L) meets both 1-neighborhoods.
inline bool is_witness(const Graph& g, const Configuration& c, Vertex x, int L,
                       const VertexSet& A, const VertexSet& B,
                       const SeparationThresholds& thr = {}) {
  if (L < 1) throw std::domain_error("is_witness: L must be at least 1");
  VertexSet search = ball(g, x, L);
  detail::require_covered(c, search, "is_witness");
  VertexSet inner = ball(g, x, thr.inner_radius(L));
  if (!detail::witness_geometry(g, inner, thr.min_diameter(L), A, B)) return false;
  ClusterLabeling lab = label_clusters(g, c, search);
  return detail::touch_disjoint(g, lab, A, B);
}

// Heuristic witness search.  Candidates come from three families: traces the
// open clusters of B(x, L) leave in the core ball, connected chunks of closed
// material in the core, and whatever the dominant open cluster fails to reach
// within distance 1.  All candidate pairs are screened against a shared
// cluster labeling, and a surviving pair is re-checked with is_witness before
// it is returned.  "not_separated" means no witness was found, not that none
// exists.
inline DetectorResult detect_separation(const Graph& g, const Configuration& c,
                                        Vertex x, int L,
                                        const SeparationThresholds& thr = {}) {
  if (L < 1) throw std::domain_error("detect_separation: L must be at least 1");
  DetectorResult res;
  res.method = DetectorResult::Method::heuristic;
  res.thresholds = thr;

  VertexSet search = ball(g, x, L);
  detail::require_covered(c, search, "detect_separation");
  VertexSet inner = ball(g, x, thr.inner_radius(L));
  ClusterLabeling lab = label_clusters(g, c, search);
  int need = thr.min_diameter(L);

  std::vector<VertexSet> cand;
  auto push_components = [&](const VertexSet& S) {
    for (auto& comp : connected_components(g, S)) {
      if (!detail::spread_at_least(g, comp, need)) continue;
      if (std::find(cand.begin(), cand.end(), comp) == cand.end())
        cand.push_back(comp);
    }
  };

  for (int id = 0; id < lab.cluster_count(); ++id)
    push_components(set_intersect(VertexSet(lab.members[id]), inner));
  {
    std::vector<Vertex> closed;
    for (Vertex v : inner)
      if (!c.open(v)) closed.push_back(v);
    push_components(VertexSet(std::move(closed)));
  }
  if (lab.cluster_count() > 0) {
    int big = 0;
    for (int id = 1; id < lab.cluster_count(); ++id)
      if (lab.cluster_sizes[id] > lab.cluster_sizes[big]) big = id;
    push_components(set_minus(inner, ball(g, VertexSet(lab.members[big]), 1)));
  }

  // a lone spread-out candidate can still witness a separation: carve pieces
  // around its metric extremes and let them pair up (the all-closed landscape
  // is the prototype, one blob whose far ends see no open path at all)
  {
    std::vector<VertexSet> base = cand;
    for (const auto& C : base) {
      if (C.size() < 2) continue;
      auto pull = [&](Vertex s) {
        auto dist = detail::bfs_dist(g, s, L);
        Vertex far = s;
        for (Vertex v : C)
          if (dist[v] > dist[far]) far = v;
        return far;
      };
      Vertex a = pull(C.smallest());
      Vertex b = pull(a);
      auto da = detail::bfs_dist(g, a, L);
      if (da[b] < 2 * need + 2) continue;  // ends too close to stay apart
      auto db = detail::bfs_dist(g, b, L);
      std::vector<Vertex> ea, eb;
      for (Vertex v : C) {
        if (da[v] >= 0 && da[v] <= need) ea.push_back(v);
        if (db[v] >= 0 && db[v] <= need) eb.push_back(v);
      }
      push_components(VertexSet(std::move(ea)));
      push_components(VertexSet(std::move(eb)));
    }
  }

  for (std::size_t i = 0; i < cand.size(); ++i) {
    for (std::size_t j = i + 1; j < cand.size(); ++j) {
      if (distance(g, cand[i], cand[j]) <= 1) continue;
      if (!detail::touch_disjoint(g, lab, cand[i], cand[j])) continue;
      if (!is_witness(g, c, x, L, cand[i], cand[j], thr)) continue;
      res.verdict = DetectorResult::Verdict::separated;
      res.witness = SeparationWitness{x, L, cand[i], cand[j]};
      return res;
    }
  }
  res.verdict = DetectorResult::Verdict::not_separated;
  return res;
}

// Exhaustive witness search over all pairs of disjoint connected subsets of
// the core ball.  Feasible only when the core is tiny, hence the cap.  Subset
// geometry is screened with bitmask arithmetic; a pair that survives is
// confirmed with is_witness.
inline std::optional<SeparationWitness> find_witness_exhaustive(
    const Graph& g, const Configuration& c, Vertex x, int L,
    const SeparationThresholds& thr = {}, std::size_t cap = 16) {
  if (L < 1) throw std::domain_error("find_witness_exhaustive: L must be at least 1");
  VertexSet search = ball(g, x, L);
  detail::require_covered(c, search, "find_witness_exhaustive");
  VertexSet inner = ball(g, x, thr.inner_radius(L));
  std::size_t n = inner.size();
  if (n > cap)
    throw std::domain_error("exhaustive search: core ball has " +
                            std::to_string(n) + " vertices, cap is " +
                            std::to_string(cap));
  if (n > 25)
    throw std::domain_error("exhaustive search: 2^" + std::to_string(n) +
                            " subsets is out of reach, raise no further");
  const auto& iv = inner.members();

  // adjacency and reach masks over core indices
  std::vector<std::uint32_t> nbr(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (Vertex w : g.neighbors(iv[i])) {
      auto j = inner.index_of(w);
      if (j >= 0) nbr[i] |= std::uint32_t(1) << j;
    }

  ClusterLabeling lab = label_clusters(g, c, search);
  std::size_t words = (std::size_t(lab.cluster_count()) + 63) / 64;
  std::vector<std::vector<std::uint64_t>> touch(n,
                                                std::vector<std::uint64_t>(words, 0));
  auto mark = [&](std::size_t i, Vertex v) {
    if (!lab.region.contains(v)) return;
    int id = lab.label_of(v);
    if (id >= 0) touch[i][std::size_t(id) / 64] |= std::uint64_t(1) << (id % 64);
  };
  for (std::size_t i = 0; i < n; ++i) {
    mark(i, iv[i]);
    for (Vertex w : g.neighbors(iv[i])) mark(i, w);
  }

  std::vector<std::vector<int>> dist(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    auto d = detail::bfs_dist(g, iv[i]);
    for (std::size_t j = 0; j < n; ++j) dist[i][j] = d[iv[j]];
  }

  struct Piece {
    std::uint32_t mask, reach;
    std::vector<std::uint64_t> touch;
  };
  int need = thr.min_diameter(L);
  std::vector<Piece> pieces;
  std::uint32_t full = (std::uint32_t(1) << n) - 1;
  for (std::uint32_t m = 1; m <= full; ++m) {
    std::uint32_t comp = m & (~m + 1);  // lowest bit, grown to a component
    for (;;) {
      std::uint32_t grow = comp;
      for (std::size_t i = 0; i < n; ++i)
        if (comp & (std::uint32_t(1) << i)) grow |= nbr[i] & m;
      if (grow == comp) break;
      comp = grow;
    }
    if (comp != m) continue;
    int diam = 0;
    std::uint32_t reach = m;
    Piece p{m, 0, std::vector<std::uint64_t>(words, 0)};
    for (std::size_t i = 0; i < n; ++i) {
      if (!(m & (std::uint32_t(1) << i))) continue;
      reach |= nbr[i];
      for (std::size_t w = 0; w < words; ++w) p.touch[w] |= touch[i][w];
      for (std::size_t j = 0; j < n; ++j)
        if (m & (std::uint32_t(1) << j)) diam = std::max(diam, dist[i][j]);
    }
    if (diam < need) continue;
    p.reach = reach;
    pieces.push_back(std::move(p));
  }

  for (std::size_t a = 0; a < pieces.size(); ++a) {
    for (std::size_t b = a + 1; b < pieces.size(); ++b) {
      if (pieces[a].reach & pieces[b].mask) continue;  // overlap or adjacency
      bool shared = false;
      for (std::size_t w = 0; w < words && !shared; ++w)
        shared = (pieces[a].touch[w] & pieces[b].touch[w]) != 0;
      if (shared) continue;
      auto unpack = [&](std::uint32_t m) {
        std::vector<Vertex> out;
        for (std::size_t i = 0; i < n; ++i)
          if (m & (std::uint32_t(1) << i)) out.push_back(iv[i]);
        return VertexSet(std::move(out));
      };
      SeparationWitness w{x, L, unpack(pieces[a].mask), unpack(pieces[b].mask)};
      if (!is_witness(g, c, x, L, w.A, w.B, thr))
        throw std::logic_error("exhaustive search: screened pair failed recheck");
      return w;
    }
  }
  return std::nullopt;
}

inline bool detect_separation_exact(const Graph& g, const Configuration& c, Vertex x,
                                    int L, const SeparationThresholds& thr = {},
                                    std::size_t cap = 16) {
  return find_witness_exhaustive(g, c, x, L, thr, cap).has_value();
}

struct CascadeReport {
  int k = 0;  // caller's scale index, a label only
  CoveringSet K_used;
  std::vector<std::pair<Vertex, SeparationWitness>> found;  // spaced subset
  int raw_found = 0;    // separation points before spacing
  int path_count = 0;
  int paths_served = 0;  // paths with at least one separation point nearby
  int N_target = 0;    // advisory at desk scale
  int pairwise_min_distance = -1;  // over found points, -1 when fewer than 2
  bool degenerate = false;  // extraction or path stage produced nothing
  SeparationThresholds thresholds;
};

// Descend one scale: given a separation at (x, L_big), route vertex-disjoint
// paths between far-apart chunks of the witness sets and look for small-scale
// separations where the paths cross the covering set K.  Every path must pass
// near the interface, so each one is a chance to certify S(y, L_small).
inline CascadeReport cascade_check(const Graph& g, const Configuration& c, Vertex x,
                                   int L_big, int L_small, const CoveringSet& K,
                                   const SeparationThresholds& thr = {}, int k = 0) {
  if (L_small < 1) throw std::domain_error("cascade_check: L_small must be at least 1");
  if (L_big < thr.scale_ratio * L_small)
    throw std::domain_error(
        "cascade_check: scale ratio " + std::to_string(L_big) + "/" +
        std::to_string(L_small) + " is below the configured minimum " +
        std::to_string(thr.scale_ratio) + " (the asymptotic regime uses 2000)");

  CascadeReport rep;
  rep.k = k;
  rep.K_used = K;
  rep.N_target = thr.cascade_target(L_small);
  rep.thresholds = thr;

  int cover_rad = L_small / 6;
  VertexSet target = ball(g, x, frac_floor(4LL * L_big, 6));
  VertexSet covered = ball(g, K.K, cover_rad);
  if (!is_subset(target, covered)) {
    for (Vertex v : target)
      if (!covered.contains(v))
        throw std::domain_error("cascade_check: covering set misses vertex " +
                                std::to_string(v) + " at radius " +
                                std::to_string(cover_rad));
  }

  auto big = detect_separation(g, c, x, L_big, thr);
  if (big.verdict != DetectorResult::Verdict::separated)
    throw std::domain_error("cascade_check: no separation witness found at scale " +
                            std::to_string(L_big));
  const SeparationWitness& w = *big.witness;

  // far-apart sub-chunks: A itself always clears the relaxed diameter, B gets
  // peeled back until the mutual distance threshold holds; among the surviving
  // pieces the largest one carries on
  int dist_need = thr.relaxed_distance(L_big);
  int diam_need = thr.relaxed_diameter(L_big);
  VertexSet Ap = w.A;
  VertexSet Bp;
  {
    VertexSet far = dist_need <= 2 ? w.B
                                   : set_minus(w.B, ball(g, w.A, dist_need - 1));
    for (auto& comp : connected_components(g, far)) {
      if (!detail::spread_at_least(g, comp, diam_need)) continue;
      if (comp.size() > Bp.size()) Bp = comp;
    }
  }
  if (Bp.empty()) {
    rep.degenerate = true;
    return rep;
  }

  VertexSet search = ball(g, x, L_big);
  auto paths = max_disjoint_paths(g, search, Ap, Bp, PathMode::vertex_disjoint);
  rep.path_count = paths.count;
  if (paths.count == 0) {
    rep.degenerate = true;
    return rep;
  }

  // per-candidate separation verdicts are memoized: a y near several paths is
  // only detected once and only reported once
  std::map<Vertex, std::optional<SeparationWitness>> seen;
  std::vector<std::pair<Vertex, SeparationWitness>> hits;
  for (const auto& path : paths.paths) {
    const auto& pv = path.vertices();
    for (Vertex y : K.K) {
      VertexSet near = ball(g, y, cover_rad);
      bool crosses = false;
      for (Vertex v : pv)
        if (near.contains(v)) {
          crosses = true;
          break;
        }
      if (!crosses) continue;
      auto it = seen.find(y);
      if (it == seen.end()) {
        std::optional<SeparationWitness> wy;
        bool in_region = true;
        for (Vertex v : ball(g, y, L_small))
          if (!c.region.contains(v)) {
            in_region = false;
            break;
          }
        if (in_region) {
          auto det = detect_separation(g, c, y, L_small, thr);
          if (det.verdict == DetectorResult::Verdict::separated) wy = det.witness;
        }
        it = seen.emplace(y, std::move(wy)).first;
        if (it->second) hits.emplace_back(y, *it->second);
      }
      if (it->second) {
        ++rep.paths_served;
        break;  // this path is served, move on
      }
    }
  }
  rep.raw_found = int(hits.size());

  // greedy 3 L_small spacing in discovery order
  for (const auto& [y, wit] : hits) {
    bool ok = true;
    for (const auto& [z, _] : rep.found)
      if (distance(g, y, z) < 3 * L_small) {
        ok = false;
        break;
      }
    if (ok) rep.found.emplace_back(y, wit);
  }
  if (rep.found.size() >= 2) {
    int best = -1;
    for (std::size_t i = 0; i < rep.found.size(); ++i)
      for (std::size_t j = i + 1; j < rep.found.size(); ++j) {
        int d = distance(g, rep.found[i].first, rep.found[j].first);
        if (best < 0 || d < best) best = d;
      }
    rep.pairwise_min_distance = best;
  }
  return rep;
}

}  // namespace percolab
