#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "percolab/graph.hpp"
#include "percolab/maxflow.hpp"
#include "percolab/rng.hpp"
#include "percolab/stats.hpp"

namespace percolab {

// |boundary| / |A|^((d-1)/d), the quantity the local inequality bounds below
inline double iso_ratio(std::size_t boundary, std::size_t a_size, double d_i) {
  return double(boundary) / std::pow(double(a_size), (d_i - 1.0) / d_i);
}

struct IsoProfile {
  double d_i = 0;
  double c_i = 0;  // minimal observed ratio; a certificate only in exhaustive mode
  std::string mode;
  VertexSet worst_set;
  double worst_ratio = 0;
  std::size_t ball_size = 0;
  std::uint64_t sets_examined = 0;
};

// Exhaustive scan over every nonempty A with |A| <= |B(x,r)|/2 (connected or
// not).  The ball is capped because this is 2^|B| work.
inline IsoProfile verify_local_iso_exhaustive(const Graph& g, Vertex x, int r,
                                              double d_i,
                                              std::size_t cap = 24) {
  if (d_i <= 1.0) throw std::domain_error("iso: d_i must exceed 1");
  VertexSet B = ball(g, x, r);
  const std::size_t n = B.size();
  if (n > cap)
    throw std::range_error(
        "iso: ball has " + std::to_string(n) + " vertices, exceeds the " +
        std::to_string(cap) + "-vertex exhaustive cap; use the sampled estimator");
  std::vector<std::uint32_t> nbr(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (Vertex w : g.neighbors(B.members()[i])) {
      auto j = B.index_of(w);
      if (j >= 0) nbr[i] |= std::uint32_t(1) << j;
    }
  std::vector<double> sz_pow(n + 1, 1.0);
  for (std::size_t k = 1; k <= n; ++k)
    sz_pow[k] = std::pow(double(k), (d_i - 1.0) / d_i);
  const std::size_t half = n / 2;
  double best = -1;
  std::uint32_t best_mask = 0;
  std::uint64_t examined = 0;
  for (std::uint32_t mask = 1; mask < (std::uint32_t(1) << n); ++mask) {
    std::size_t k = std::size_t(std::popcount(mask));
    if (k > half) continue;
    ++examined;
    int cut = 0;
    for (std::uint32_t m = mask; m;) {
      int i = std::countr_zero(m);
      m &= m - 1;
      cut += std::popcount(nbr[i] & ~mask);
    }
    double ratio = double(cut) / sz_pow[k];
    if (best < 0 || ratio < best) {
      best = ratio;
      best_mask = mask;
    }
  }
  IsoProfile out;
  out.d_i = d_i;
  out.mode = "exhaustive";
  out.ball_size = n;
  out.sets_examined = examined;
  out.c_i = out.worst_ratio = best;
  std::vector<Vertex> worst;
  for (std::uint32_t m = best_mask; m;) {
    int i = std::countr_zero(m);
    m &= m - 1;
    worst.push_back(B.members()[i]);
  }
  out.worst_set = VertexSet(std::move(worst));
  return out;
}

// Randomized upper bound on c_i: random connected subsets grown by BFS to
// random target sizes, plus the components left by deleting each single
// vertex of the ball (cheap deterministic candidates that catch bottleneck
// cuts random growth essentially never finds).
inline IsoProfile estimate_iso_profile_sampled(const Graph& g, Vertex x, int r,
                                               double d_i, std::uint64_t trials,
                                               std::uint64_t seed,
                                               bool cut_candidates = true) {
  if (d_i <= 1.0) throw std::domain_error("iso: d_i must exceed 1");
  if (trials < 1) throw std::domain_error("iso: trials must be >= 1");
  VertexSet B = ball(g, x, r);
  const std::size_t n = B.size();
  const std::size_t half = n / 2;
  // local index adjacency within the ball
  std::vector<std::vector<int>> nbr(n);
  for (std::size_t i = 0; i < n; ++i)
    for (Vertex w : g.neighbors(B.members()[i])) {
      auto j = B.index_of(w);
      if (j >= 0) nbr[i].push_back(int(j));
    }
  double best = -1;
  std::vector<int> best_idx;
  std::uint64_t examined = 0;
  auto consider = [&](const std::vector<int>& idx) {
    ++examined;
    int cut = 0;
    std::vector<char> in(n, 0);
    for (int i : idx) in[i] = 1;
    for (int i : idx)
      for (int j : nbr[i])
        if (!in[j]) ++cut;
    double ratio = double(cut) / std::pow(double(idx.size()), (d_i - 1) / d_i);
    if (best < 0 || ratio < best) {
      best = ratio;
      best_idx = idx;
    }
  };

  if (half >= 1) {
    std::vector<char> in(n), queued(n);
    for (std::uint64_t t = 0; t < trials; ++t) {
      Stream st(seed, tag::iso_sample, t);
      std::size_t target = 1 + std::size_t(st.next_below(half));
      std::vector<int> set{int(st.next_below(n))};
      std::fill(in.begin(), in.end(), 0);
      std::fill(queued.begin(), queued.end(), 0);
      in[set[0]] = queued[set[0]] = 1;
      std::vector<int> frontier;
      for (int j : nbr[set[0]])
        if (!queued[j]) {
          queued[j] = 1;
          frontier.push_back(j);
        }
      while (set.size() < target && !frontier.empty()) {
        std::size_t pick = std::size_t(st.next_below(frontier.size()));
        int v = frontier[pick];
        frontier[pick] = frontier.back();
        frontier.pop_back();
        in[v] = 1;
        set.push_back(v);
        for (int j : nbr[v])
          if (!queued[j]) {
            queued[j] = 1;
            frontier.push_back(j);
          }
      }
      consider(set);
    }
  }

  if (cut_candidates) {
    std::vector<int> comp_id(n);
    for (std::size_t v = 0; v < n; ++v) {
      std::fill(comp_id.begin(), comp_id.end(), -1);
      comp_id[v] = -2;  // deleted
      for (std::size_t s0 = 0; s0 < n; ++s0) {
        if (comp_id[s0] != -1) continue;
        std::vector<int> comp{int(s0)};
        comp_id[s0] = int(s0);
        for (std::size_t qi = 0; qi < comp.size(); ++qi)
          for (int j : nbr[comp[qi]])
            if (comp_id[j] == -1) {
              comp_id[j] = int(s0);
              comp.push_back(j);
            }
        if (comp.size() <= half) consider(comp);
      }
    }
  }

  IsoProfile out;
  out.d_i = d_i;
  out.mode = "sampled";
  out.ball_size = n;
  out.sets_examined = examined;
  out.c_i = out.worst_ratio = best;
  std::vector<Vertex> worst;
  for (int i : best_idx) worst.push_back(B.members()[i]);
  out.worst_set = VertexSet(std::move(worst));
  return out;
}

// ---- disjoint connecting paths ---------------------------------------------

enum class PathMode { vertex_disjoint, edge_disjoint };

struct DisjointPaths {
  int count = 0;
  std::vector<PathSeq> paths;        // full a -> a' vertex sequences
  std::vector<Vertex> cut_vertices;  // dual witness, vertex mode
  std::vector<Edge> cut_edges;       // dual witness, edge mode
};

// Maximum family of pairwise disjoint paths from A to A' inside ambient,
// computed as a unit-capacity max flow (vertex mode splits vertices).  The
// returned count equals the extracted minimum cut; a mismatch throws.
inline DisjointPaths max_disjoint_paths(const Graph& g, const VertexSet& ambient,
                                        const VertexSet& A, const VertexSet& Ap,
                                        PathMode mode) {
  if (A.empty() || Ap.empty())
    throw std::domain_error("disjoint_paths: empty endpoint set");
  if (!set_intersect(A, Ap).empty())
    throw std::domain_error("disjoint_paths: endpoint sets intersect");
  if (!is_subset(A, ambient) || !is_subset(Ap, ambient))
    throw std::domain_error("disjoint_paths: endpoint set leaves ambient");
  if (connected_components(g, ambient).size() != 1)
    throw std::domain_error("disjoint_paths: ambient region is disconnected");

  const std::size_t n = ambient.size();
  auto local = [&](Vertex v) { return int(ambient.index_of(v)); };

  DisjointPaths out;
  if (mode == PathMode::vertex_disjoint) {
    // nodes: 2i = in, 2i+1 = out, then source, sink
    FlowNet net(int(2 * n + 2));
    const int s = int(2 * n), t = int(2 * n + 1);
    std::vector<int> split_arc(n);
    for (std::size_t i = 0; i < n; ++i)
      split_arc[i] = net.add_arc(int(2 * i), int(2 * i + 1), 1);
    for (Vertex u : ambient)
      for (Vertex v : g.neighbors(u)) {
        int j = local(v);
        if (j >= 0) net.add_arc(local(u) * 2 + 1, j * 2, FlowNet::kInf);
      }
    for (Vertex a : A) net.add_arc(s, local(a) * 2, FlowNet::kInf);
    for (Vertex a : Ap) net.add_arc(local(a) * 2 + 1, t, FlowNet::kInf);
    out.count = net.max_flow(s, t);

    auto reach = net.reachable(s);
    for (std::size_t i = 0; i < n; ++i)
      if (reach[2 * i] && !reach[2 * i + 1])
        out.cut_vertices.push_back(ambient.members()[i]);
    if (int(out.cut_vertices.size()) != out.count)
      throw std::logic_error("disjoint_paths: cut/flow duality check failed");

    // peel unit flow paths; vertex caps make them simple automatically
    std::vector<int> rem(net.arc_count());
    for (int a = 0; a < net.arc_count(); a += 2) rem[a] = net.flow(a);
    for (int sa : net.arcs_at(s)) {
      if (sa & 1) continue;
      while (rem[sa] > 0) {
        --rem[sa];
        int node = net.arc(sa).to;  // some a_in
        std::vector<Vertex> seq;
        for (;;) {
          seq.push_back(ambient.members()[node / 2]);
          int split = split_arc[node / 2];
          --rem[split];
          int uo = node + 1;
          int next = -1;
          for (int a : net.arcs_at(uo)) {
            if (a & 1 || rem[a] == 0) continue;
            if (net.arc(a).to == t) {
              next = t;
              --rem[a];
              break;
            }
          }
          if (next == t) break;
          for (int a : net.arcs_at(uo)) {
            if (a & 1 || rem[a] == 0 || net.arc(a).to == t) continue;
            next = net.arc(a).to;
            --rem[a];
            break;
          }
          if (next < 0)
            throw std::logic_error("disjoint_paths: flow decomposition stuck");
          node = next;
        }
        out.paths.emplace_back(g, std::move(seq));
      }
    }
  } else {
    // nodes: ambient indices, then source, sink; each undirected edge gets a
    // unit arc per direction, antiparallel flow cancelled before peeling
    FlowNet net(int(n + 2));
    const int s = int(n), t = int(n + 1);
    std::vector<std::pair<int, int>> twin;
    for (Vertex u : ambient)
      for (Vertex v : g.neighbors(u)) {
        if (v < u) continue;
        int j = local(v);
        if (j < 0) continue;
        int a1 = net.add_arc(local(u), j, 1);
        int a2 = net.add_arc(j, local(u), 1);
        twin.emplace_back(a1, a2);
      }
    for (Vertex a : A) net.add_arc(s, local(a), FlowNet::kInf);
    for (Vertex a : Ap) net.add_arc(local(a), t, FlowNet::kInf);
    out.count = net.max_flow(s, t);

    auto reach = net.reachable(s);
    {
      std::vector<Edge> cut;
      for (auto [a1, a2] : twin) {
        int u = net.arc(a2).to, v = net.arc(a1).to;  // local ids
        if ((reach[u] && !reach[v]) || (reach[v] && !reach[u]))
          cut.emplace_back(ambient.members()[u], ambient.members()[v]);
      }
      std::sort(cut.begin(), cut.end());
      out.cut_edges = std::move(cut);
    }
    if (int(out.cut_edges.size()) != out.count)
      throw std::logic_error("disjoint_paths: cut/flow duality check failed");

    std::vector<int> rem(net.arc_count());
    for (int a = 0; a < net.arc_count(); a += 2) rem[a] = net.flow(a);
    for (auto [a1, a2] : twin) {
      int c = std::min(rem[a1], rem[a2]);
      rem[a1] -= c;
      rem[a2] -= c;
    }
    std::vector<int> pos(n, -1);
    for (int sa : net.arcs_at(s)) {
      if (sa & 1) continue;
      while (rem[sa] > 0) {
        --rem[sa];
        int node = net.arc(sa).to;
        std::vector<int> seq{node};
        pos[node] = 0;
        for (;;) {
          int ended = 0, next = -1;
          for (int a : net.arcs_at(seq.back())) {
            if (a & 1 || rem[a] == 0) continue;
            if (net.arc(a).to == t) {
              ended = 1;
              --rem[a];
              break;
            }
          }
          if (ended) break;
          for (int a : net.arcs_at(seq.back())) {
            if (a & 1 || rem[a] == 0 || net.arc(a).to == t) continue;
            next = net.arc(a).to;
            --rem[a];
            break;
          }
          if (next < 0)
            throw std::logic_error("disjoint_paths: flow decomposition stuck");
          if (pos[next] >= 0) {
            // walked into a flow cycle: drop the loop, keep the prefix
            while (int(seq.size()) > pos[next] + 1) {
              pos[seq.back()] = -1;
              seq.pop_back();
            }
          } else {
            pos[next] = int(seq.size());
            seq.push_back(next);
          }
        }
        std::vector<Vertex> verts;
        for (int i : seq) {
          verts.push_back(ambient.members()[i]);
          pos[i] = -1;
        }
        out.paths.emplace_back(g, std::move(verts));
      }
    }
  }

  if (int(out.paths.size()) != out.count)
    throw std::logic_error("disjoint_paths: decomposition count mismatch");
  return out;
}

// smallest family size the local inequality guarantees between A and A'
inline int disjoint_paths_lower_bound(double c_i, double d_i, std::size_t a,
                                      std::size_t ap) {
  double b = c_i * std::pow(double(std::min(a, ap)), (d_i - 1.0) / d_i);
  return int(std::ceil(b - 1e-12));
}

// ---- volume bounds ---------------------------------------------------------

struct VolumeFit {
  double d_u = 0, c_u = 0;  // |B(x,r)| <= c_u r^d_u
  double d_l = 0, c_l = 0;  // |B(x,r)| >= c_l r^d_l
  std::vector<Vertex> anchors;
  int r_max = 0;
};

// Log-log least squares over all (anchor, r) ball sizes, constants then
// pushed out to the extreme pointwise ratios so the inequalities hold
// everywhere sampled.  A slope is accepted only if the ratio spread
// max/min stays below spread_cap: a huge spread means no polynomial of that
// degree tracks the growth, and if no degree up to d_max works either the
// growth is declared non-polynomial.
inline VolumeFit fit_volume_bounds(const Graph& g,
                                   const std::vector<Vertex>& anchors,
                                   int r_max, double spread_cap = 4.0,
                                   double d_max = 6.0) {
  if (anchors.empty()) throw std::domain_error("volume_fit: no anchors");
  if (r_max < 2) throw std::domain_error("volume_fit: r_max must be >= 2");
  std::vector<double> lr, ls;
  std::vector<std::pair<int, std::size_t>> pts;
  const int fit_lo = std::max(1, r_max / 2);  // slope from the scaling regime
  for (Vertex x : anchors) {
    if (eccentricity(g, x) < r_max)
      throw std::range_error("volume_fit: anchor " + std::to_string(x) +
                             " has eccentricity below r_max " +
                             std::to_string(r_max));
    auto dist = detail::bfs_dist(g, x, r_max);
    std::vector<std::size_t> count(r_max + 1, 0);
    for (int d : dist)
      if (d >= 0) ++count[d];
    std::size_t acc = 0;
    for (int r = 0; r <= r_max; ++r) {
      acc += count[r];
      if (r >= 1) {
        pts.emplace_back(r, acc);
        if (r >= fit_lo) {
          lr.push_back(std::log(double(r)));
          ls.push_back(std::log(double(acc)));
        }
      }
    }
  }
  auto spread_at = [&](double d) {
    double lo = 1e300, hi = 0;
    for (auto [r, sz] : pts) {
      double ratio = double(sz) / std::pow(double(r), d);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    return std::array<double, 3>{hi / lo, lo, hi};
  };
  double slope = least_squares(lr, ls).slope;
  double chosen = -1;
  std::array<double, 3> sp{};
  if (slope > 0 && slope <= d_max) {
    sp = spread_at(slope);
    if (sp[0] <= spread_cap) chosen = slope;
  }
  if (chosen < 0) {
    double best_spread = 1e300;
    for (double d = 0.25; d <= d_max + 1e-9; d += 0.25) {
      auto s = spread_at(d);
      if (s[0] < best_spread) {
        best_spread = s[0];
        sp = s;
        chosen = d;
      }
    }
    if (best_spread > spread_cap)
      throw std::domain_error(
          "volume_fit: no polynomial bound with exponent <= " +
          std::to_string(d_max) +
          " fits the ball growth (best ratio spread " +
          std::to_string(best_spread) + " exceeds " +
          std::to_string(spread_cap) + "); growth looks exponential");
  }
  VolumeFit fit;
  fit.d_u = fit.d_l = chosen;
  fit.c_l = sp[1];
  fit.c_u = sp[2];
  fit.anchors = anchors;
  fit.r_max = r_max;
  // certificate re-check, belt and braces against fp slop in the ratios
  for (auto [r, sz] : pts) {
    double rd = std::pow(double(r), chosen);
    if (!(fit.c_l * rd <= double(sz) * (1 + 1e-12)) ||
        !(double(sz) <= fit.c_u * rd * (1 + 1e-12)))
      throw std::logic_error("volume_fit: certificate recheck failed");
  }
  return fit;
}

struct LowerInductionReport {
  double c3 = 0;
  bool ok = false;
  int first_fail = -1;  // smallest failing radius, -1 when all pass
};

// checks |B(x,j)| >= (c3 j)^{d_i} for j up to r_max with
// c3 = min(1, c_i / (2^{d_i} d_i Delta))
inline LowerInductionReport verify_volume_lower_induction(const Graph& g,
                                                          Vertex x, int r_max,
                                                          double d_i,
                                                          double c_i) {
  if (d_i <= 1.0 || c_i <= 0.0)
    throw std::domain_error("lower_induction: need d_i > 1 and c_i > 0");
  LowerInductionReport rep;
  rep.c3 = std::min(1.0, c_i / (std::pow(2.0, d_i) * d_i * g.max_degree()));
  rep.ok = true;
  auto dist = detail::bfs_dist(g, x, r_max);
  std::vector<std::size_t> count(r_max + 1, 0);
  for (int d : dist)
    if (d >= 0) ++count[d];
  std::size_t acc = 0;
  for (int j = 0; j <= r_max; ++j) {
    acc += count[j];
    if (j >= 1 && double(acc) < std::pow(rep.c3 * j, d_i)) {
      rep.ok = false;
      rep.first_fail = j;
      break;
    }
  }
  return rep;
}

// ---- covering sets ---------------------------------------------------------

struct CoveringSet {
  VertexSet K;
  int r = 0, s = 0;
  double d = 0, c5 = 0;
  int attempts = 0;           // randomized attempts consumed
  bool first_try_ok = false;  // attempt 0 already satisfied both checks
  bool greedy_fallback = false;
  std::vector<std::string> warnings;
};

// Probabilistic covering construction: sample candidates in B(x, 5r/6) with
// probability s^-d each, accept when the s/6-balls around the sample cover
// B(x, 4r/6) within the size budget c5 r^{d_u} / s^d, retry otherwise, and
// finish with greedy set cover if randomness never wins.
inline CoveringSet build_covering_set(const Graph& g, Vertex x, int r, int s,
                                      double d, const VolumeFit& fit,
                                      std::uint64_t seed, int max_retries = 8,
                                      double c5_override = 0) {
  if (s < 6)
    throw std::domain_error("covering: s must be >= 6 so the covering radius is >= 1");
  if (s > r) throw std::domain_error("covering: s must not exceed r");
  if (d <= 0 || d >= fit.d_l)
    throw std::domain_error(
        "covering: d must lie in (0, d_l); fitted d_l = " +
        std::to_string(fit.d_l));
  CoveringSet out;
  out.r = r;
  out.s = s;
  out.d = d;
  out.c5 = c5_override > 0
               ? c5_override
               : 4.0 * fit.c_u * std::pow(5.0 / 6.0, fit.d_u) * 2.0;
  if (s > r / 6)
    out.warnings.push_back("s exceeds r/6; outside the construction's window");
  if (fit.d_l > d) {
    double low = std::pow(std::log(double(r)), 2.0 / (fit.d_l - d));
    if (double(s) < low)
      out.warnings.push_back("s below (log r)^{2/(d_l-d)}; outside the construction's window");
  }

  const VertexSet candidates = ball(g, x, frac_floor(5LL * r, 6));
  const VertexSet targets = ball(g, x, frac_floor(4LL * r, 6));
  const int cover_rad = frac_floor(s, 6);
  const double p = std::pow(double(s), -d);
  const double size_cap = out.c5 * std::pow(double(r), fit.d_u) /
                          std::pow(double(s), d);

  auto covered = [&](const VertexSet& K) {
    if (K.empty()) return false;
    return is_subset(targets, ball(g, K, cover_rad));
  };

  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    std::vector<Vertex> pick;
    for (Vertex y : candidates)
      if (uniform01(seed ^ tag::cover, std::uint64_t(attempt), std::uint64_t(y),
                    0) < p)
        pick.push_back(y);
    VertexSet K(std::move(pick));
    out.attempts = attempt + 1;
    if (double(K.size()) <= size_cap && covered(K)) {
      out.first_try_ok = (attempt == 0);
      out.K = std::move(K);
      return out;
    }
  }

  // greedy set cover over the candidate centers; cover balls are tiny, so
  // compute them once with a shared stamp array instead of fresh BFS state
  out.greedy_fallback = true;
  std::vector<std::vector<Vertex>> cover_of(candidates.size());
  {
    std::vector<int> stamp(g.vertex_count(), -1), depth(g.vertex_count(), 0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      Vertex y = candidates.members()[i];
      auto& lst = cover_of[i];
      lst.push_back(y);
      stamp[y] = int(i);
      depth[y] = 0;
      for (std::size_t qi = 0; qi < lst.size(); ++qi) {
        Vertex u = lst[qi];
        if (depth[u] == cover_rad) continue;
        for (Vertex w : g.neighbors(u))
          if (stamp[w] != int(i)) {
            stamp[w] = int(i);
            depth[w] = depth[u] + 1;
            lst.push_back(w);
          }
      }
    }
  }
  std::vector<char> unc(g.vertex_count(), 0);
  std::size_t left = targets.size();
  for (Vertex t : targets) unc[t] = 1;
  std::vector<Vertex> chosen;
  while (left > 0) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      std::size_t gain = 0;
      for (Vertex w : cover_of[i]) gain += unc[w];
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (best_gain == 0)
      throw std::logic_error("covering: greedy cover cannot finish");
    chosen.push_back(candidates.members()[best]);
    for (Vertex w : cover_of[best])
      if (unc[w]) {
        unc[w] = 0;
        --left;
      }
  }
  out.K = VertexSet(std::move(chosen));
  if (double(out.K.size()) > size_cap)
    out.warnings.push_back("greedy cover exceeds the c5 size budget");
  return out;
}

}  // namespace percolab
