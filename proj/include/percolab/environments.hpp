#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "percolab/graph.hpp"
#include "percolab/rng.hpp"
#include "percolab/stats.hpp"

namespace percolab {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// thrown when an event touches bits outside its declared support
struct contract_violation : std::logic_error {
  using std::logic_error::logic_error;
};

enum class EnvKind { bernoulli, finitely_dependent, long_range };

inline const char* to_string(EnvKind k) {
  switch (k) {
    case EnvKind::bernoulli: return "bernoulli";
    case EnvKind::finitely_dependent: return "finitely_dependent";
    case EnvKind::long_range: return "long_range";
  }
  return "?";
}

// A site measure plus its claimed correlation-decay certificate: pairs of
// decreasing events on B(x,r) and outside B(x,2r) should satisfy
// P(GG') <= P(G)P(G') + c_alpha r^-alpha.
struct EnvironmentSpec {
  EnvKind kind = EnvKind::bernoulli;
  double p = 0.5;           // target marginal, inf_x P[x open] >= p
  int radius = 0;           // finitely_dependent dependence radius
  double tail_exponent = 0; // long_range ball-radius tail
  double alpha = std::numeric_limits<double>::infinity();
  double c_alpha = 0;       // 0 encodes an exact product measure

  static EnvironmentSpec bernoulli(double p) {
    EnvironmentSpec s;
    s.kind = EnvKind::bernoulli;
    s.p = p;
    s.validate();
    return s;
  }

  // open iff every i.i.d. mark in B(x,radius) clears a threshold picked so
  // the marginal is exactly p; independent past distance 2*radius.  The
  // default certificate (2 radius / r)^4 is >= 1 until the exact-independence
  // range and so holds at every r.
  static EnvironmentSpec finitely_dependent(double p, int radius) {
    EnvironmentSpec s;
    s.kind = EnvKind::finitely_dependent;
    s.p = p;
    s.radius = radius;
    s.alpha = 4.0;
    s.c_alpha = std::pow(2.0 * radius, 4.0);
    s.validate();
    return s;
  }

  // closed region is a union of balls at Bernoulli(lambda) seeds with Pareto
  // radii P[R >= t] = t^-tau; lambda is tuned from exact ball-mass sums so
  // the union bound gives inf marginal >= p.  The default certificate is an
  // empirical placeholder (the decay exponent is near tau - d_u); it is
  // checked by the decoupling tests, never assumed.
  static EnvironmentSpec long_range(double p, double tail_exponent,
                                    double alpha = -1, double c_alpha = -1) {
    EnvironmentSpec s;
    s.kind = EnvKind::long_range;
    s.p = p;
    s.tail_exponent = tail_exponent;
    s.alpha = alpha > 0 ? alpha : std::max(0.5, tail_exponent - 2.0);
    s.c_alpha = c_alpha >= 0 ? c_alpha : 4.0;
    s.validate();
    return s;
  }

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0))
      throw config_error("environment: p must be in [0,1], got " +
                         std::to_string(p));
    if (kind == EnvKind::finitely_dependent && radius < 1)
      throw config_error("environment: dependence radius must be >= 1");
    if (kind == EnvKind::long_range && !(tail_exponent > 1.0))
      throw config_error("environment: tail_exponent must exceed 1, got " +
                         std::to_string(tail_exponent));
  }
};

// openness bits over a region; regenerating from (spec, seed, region) is
// bit-identical
struct Configuration {
  VertexSet region;
  EnvironmentSpec spec;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> words;

  void resize_all(bool open) {
    words.assign((region.size() + 63) / 64, open ? ~0ull : 0ull);
  }
  bool open_at(std::size_t i) const { return words[i >> 6] >> (i & 63) & 1; }
  void set_at(std::size_t i, bool b) {
    if (b)
      words[i >> 6] |= 1ull << (i & 63);
    else
      words[i >> 6] &= ~(1ull << (i & 63));
  }
  bool open(Vertex v) const {
    auto i = region.index_of(v);
    if (i < 0)
      throw std::domain_error("configuration: vertex " + std::to_string(v) +
                              " outside sampled region");
    return open_at(std::size_t(i));
  }
  std::size_t open_count() const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < region.size(); ++i) c += open_at(i);
    return c;
  }
  std::uint64_t region_hash() const { return region.hash64(); }
};

// read guard: events may only look at their declared support
class BitView {
 public:
  BitView(const Configuration& c, const VertexSet& allowed)
      : c_(&c), allowed_(&allowed) {}
  bool open(Vertex v) const {
    if (!allowed_->contains(v))
      throw contract_violation("event read vertex " + std::to_string(v) +
                               " outside its declared support");
    return c_->open(v);
  }

 private:
  const Configuration* c_;
  const VertexSet* allowed_;
};

struct Event {
  std::string name;
  VertexSet support;
  std::function<bool(const BitView&)> holds;
};

inline Event all_closed_event(const Graph& g, Vertex center, int radius,
                              std::string name = "") {
  VertexSet sup = ball(g, center, radius);
  if (name.empty())
    name = "all_closed(B(" + std::to_string(center) + "," +
           std::to_string(radius) + "))";
  auto members = sup.members();
  return Event{std::move(name), sup, [members](const BitView& w) {
                 for (Vertex v : members)
                   if (w.open(v)) return false;
                 return true;
               }};
}

// Samples one region of one host under one spec.  Construction does the
// per-region precomputation (thresholds, shells, the long-range density);
// sample() is then cheap and pure in the seed.  The scratch members make
// sample() non-reentrant: parallel trials should clone the sampler.
class Sampler {
 public:
  Sampler(const Graph& g, EnvironmentSpec spec, VertexSet region)
      : g_(&g), spec_(spec), region_(std::move(region)) {
    spec_.validate();
    for (Vertex v : region_)
      if (!g.valid(v)) throw std::domain_error("sampler: region vertex invalid");
    if (region_.empty()) throw std::domain_error("sampler: empty region");
    switch (spec_.kind) {
      case EnvKind::bernoulli:
        break;
      case EnvKind::finitely_dependent:
        init_marks();
        break;
      case EnvKind::long_range:
        init_long_range();
        break;
    }
  }

  const VertexSet& region() const { return region_; }
  const EnvironmentSpec& spec() const { return spec_; }
  double lambda() const { return lambda_; }

  Configuration sample(std::uint64_t seed) const {
    Configuration c;
    c.region = region_;
    c.spec = spec_;
    c.seed = seed;
    switch (spec_.kind) {
      case EnvKind::bernoulli: {
        c.resize_all(false);
        for (std::size_t i = 0; i < region_.size(); ++i)
          if (uniform01(seed, tag::site,
                        std::uint64_t(region_.members()[i]), 0) < spec_.p)
            c.set_at(i, true);
        break;
      }
      case EnvKind::finitely_dependent: {
        if (spec_.p >= 1.0) {
          c.resize_all(true);
          break;
        }
        c.resize_all(false);
        for (std::size_t i = 0; i < region_.size(); ++i) {
          bool open = true;
          for (Vertex y : mark_ball_[i])
            if (uniform01(seed, tag::mark, std::uint64_t(y), 0) <=
                threshold_[i]) {
              open = false;
              break;
            }
          if (open) c.set_at(i, true);
        }
        break;
      }
      case EnvKind::long_range: {
        c.resize_all(true);
        sample_long_range(c, seed);
        break;
      }
    }
    return c;
  }

 private:
  void init_marks() {
    const int rad = spec_.radius;
    mark_ball_.resize(region_.size());
    threshold_.resize(region_.size());
    for (std::size_t i = 0; i < region_.size(); ++i) {
      VertexSet b = ball(*g_, region_.members()[i], rad);
      mark_ball_[i].assign(b.begin(), b.end());
      // (1 - t)^{|ball|} = p
      threshold_[i] =
          1.0 - std::pow(spec_.p, 1.0 / double(mark_ball_[i].size()));
    }
  }

  double interaction_mass(Vertex z) const {
    auto dist = detail::bfs_dist(*g_, z);
    double m = 0;
    for (int d : dist)
      m += d == 0 ? 1.0 : std::min(1.0, std::pow(double(d), -spec_.tail_exponent));
    return m;
  }

  void init_long_range() {
    // density: a seed at distance d reaches z with probability
    // min(1, d^-tau), so P[z closed] <= lambda * D_z and
    // lambda = (1-p)/max_z D_z guarantees the marginal.  Small hosts get the
    // exact maximum; big ones are generated families whose most central
    // vertex (0 by construction) dominates, plus a couple of spare probes.
    double dmax = 0;
    if (g_->vertex_count() <= 4096) {
      for (std::size_t z = 0; z < g_->vertex_count(); ++z)
        dmax = std::max(dmax, interaction_mass(Vertex(z)));
    } else {
      std::vector<Vertex> probes{0};
      Vertex deg = 0;
      for (std::size_t v = 1; v < g_->vertex_count(); ++v)
        if (g_->degree(Vertex(v)) > g_->degree(deg)) deg = Vertex(v);
      probes.push_back(deg);
      probes.push_back(region_.members()[region_.size() / 2]);
      for (Vertex z : probes) dmax = std::max(dmax, interaction_mass(z));
    }
    lambda_ = (1.0 - spec_.p) / dmax;

    // shells of the host by distance to the region, for skip sampling
    std::vector<int> dist(g_->vertex_count(), -1);
    std::vector<Vertex> cur(region_.begin(), region_.end()), nxt;
    for (Vertex v : region_) dist[v] = 0;
    shells_.push_back(cur);
    while (!cur.empty()) {
      nxt.clear();
      for (Vertex u : cur)
        for (Vertex w : g_->neighbors(u))
          if (dist[w] < 0) {
            dist[w] = int(shells_.size());
            nxt.push_back(w);
          }
      if (!nxt.empty()) shells_.push_back(nxt);
      cur.swap(nxt);
    }
    Vertex z0 = region_.members()[0];
    auto d0 = detail::bfs_dist(*g_, z0);
    int reach = 0;
    for (Vertex v : region_) reach = std::max(reach, d0[v]);
    diam_bound_ = 2 * reach;
    stamp_.assign(g_->vertex_count(), -1);
    depth_.assign(g_->vertex_count(), 0);
  }

  void close_ball(Configuration& c, Vertex y, int rad) const {
    ++epoch_;
    std::vector<Vertex> q{y};
    stamp_[y] = epoch_;
    depth_[y] = 0;
    for (std::size_t qi = 0; qi < q.size(); ++qi) {
      Vertex u = q[qi];
      auto i = region_.index_of(u);
      if (i >= 0) c.set_at(std::size_t(i), false);
      if (depth_[u] == rad) continue;
      for (Vertex w : g_->neighbors(u))
        if (stamp_[w] != epoch_) {
          stamp_[w] = epoch_;
          depth_[w] = depth_[u] + 1;
          q.push_back(w);
        }
    }
  }

  void sample_long_range(Configuration& c, std::uint64_t seed) const {
    if (lambda_ <= 0) return;
    const double tau = spec_.tail_exponent;
    for (std::size_t d = 0; d < shells_.size(); ++d) {
      const double reach_p =
          d == 0 ? 1.0 : std::min(1.0, std::pow(double(d), -tau));
      const double q = lambda_ * reach_p;
      if (q <= 0) continue;
      Stream st(seed, tag::lr_shell, d);
      const auto& shell = shells_[d];
      std::size_t k = 0;
      const double lq = std::log1p(-std::min(q, 1.0 - 1e-15));
      for (;;) {
        if (q < 1.0) {
          double u = 1.0 - st.next_u01();  // in (0,1]
          k += std::size_t(std::log(u) / lq);
        }
        if (k >= shell.size()) break;
        // radius conditioned on reaching the region: R >= max(d,1)
        double u2 = std::max(st.next_u01(), 1e-12);
        double base = std::max<double>(double(d), 1.0);
        double R = base * std::pow(u2, -1.0 / tau);
        double cap = double(d) + diam_bound_ + 1.0;
        int rad = int(std::min(R, cap));
        close_ball(c, shell[k], rad);
        ++k;
      }
    }
  }

  const Graph* g_;
  EnvironmentSpec spec_;
  VertexSet region_;
  // finitely dependent
  std::vector<std::vector<Vertex>> mark_ball_;
  std::vector<double> threshold_;
  // long range
  double lambda_ = 0;
  std::vector<std::vector<Vertex>> shells_;
  int diam_bound_ = 0;
  mutable std::vector<int> stamp_, depth_;
  mutable int epoch_ = 0;
};

inline Configuration sample(const EnvironmentSpec& spec, const Graph& g,
                            const VertexSet& region, std::uint64_t seed) {
  return Sampler(g, spec, region).sample(seed);
}

// used by lazy evaluation paths that cannot afford a Configuration
inline bool bernoulli_open(std::uint64_t seed, Vertex v, double p) {
  return uniform01(seed, tag::site, std::uint64_t(v), 0) < p;
}

// Randomized decreasingness check: flipping one closed support vertex open
// must never switch the event on.  Throws on the first violation found.
inline void spot_check_decreasing(const Event& ev, const Sampler& sampler,
                                  std::uint64_t seed, int configs = 4,
                                  int flips_per_config = 8) {
  for (int c = 0; c < configs; ++c) {
    Configuration base = sampler.sample(keyed(seed, tag::misc, 77, c));
    bool before = ev.holds(BitView(base, ev.support));
    if (before) continue;  // an up-flip may legally switch a decreasing event off
    std::vector<std::size_t> closed;
    for (Vertex v : ev.support) {
      auto i = base.region.index_of(v);
      if (i >= 0 && !base.open_at(std::size_t(i)))
        closed.push_back(std::size_t(i));
    }
    Stream st(seed, tag::misc, 78, std::uint64_t(c));
    for (int f = 0; f < flips_per_config && !closed.empty(); ++f) {
      std::size_t i = closed[st.next_below(closed.size())];
      Configuration flipped = base;
      flipped.set_at(i, true);
      if (ev.holds(BitView(flipped, ev.support)))
        throw std::domain_error(
            "event '" + ev.name + "' is not decreasing: flipping vertex " +
            std::to_string(base.region.members()[i]) + " open switched it on");
    }
  }
}

struct DecouplingReport {
  std::vector<int> r_values;
  std::vector<double> defects;        // P(GG') - P(G)P(G') estimates
  std::vector<double> ci_halfwidths;  // 95% halfwidth via the influence curve
  std::vector<double> p_inner, p_outer, p_joint;
  double fitted_alpha = 0;  // log-log slope over positive defects, 0 if < 2
  std::uint64_t trials = 0;
};

using EventPairBuilder = std::function<std::pair<Event, Event>(int r)>;

// standard pair: all-closed on B(x,r) and on an equal ball far along a
// geodesic ray, placed so the far support clears B(x,2r)
inline EventPairBuilder far_all_closed_builder(const Graph& g, Vertex x) {
  return [&g, x](int r) {
    PathSeq ray = geodesic_ray(g, x, 3 * r + 1);
    Vertex x2 = ray.vertices().back();
    return std::make_pair(all_closed_event(g, x, r),
                          all_closed_event(g, x2, r));
  };
}

inline Event closed_vertex_event(Vertex v) {
  return Event{"closed_at_" + std::to_string(v), VertexSet({v}),
               [v](const BitView& w) { return !w.open(v); }};
}

// The most sensitive admissible pair: single closed vertices at distances r
// and 2r+1 along one geodesic ray, i.e. the closest supports the exclusion
// zone permits.  Correlations between larger supports wash out in the
// all-closed probabilities, so this pair maximizes defect per unit of
// Monte-Carlo noise.
inline EventPairBuilder nearest_closed_pair_builder(const Graph& g, Vertex x) {
  return [&g, x](int r) {
    PathSeq ray = geodesic_ray(g, x, 2 * r + 1);
    return std::make_pair(closed_vertex_event(ray.vertices()[r]),
                          closed_vertex_event(ray.vertices()[2 * r + 1]));
  };
}

inline DecouplingReport estimate_decoupling_defect(
    const EnvironmentSpec& spec, const Graph& g, Vertex x,
    const std::vector<int>& r_values, const EventPairBuilder& builder,
    std::uint64_t trials, std::uint64_t seed) {
  if (trials < 2) throw std::domain_error("decoupling: need at least 2 trials");
  DecouplingReport rep;
  rep.trials = trials;
  for (std::size_t ri = 0; ri < r_values.size(); ++ri) {
    const int r = r_values[ri];
    if (r < 1) throw std::domain_error("decoupling: r must be >= 1");
    auto [ev_in, ev_out] = builder(r);
    VertexSet near = ball(g, x, r), excl = ball(g, x, 2 * r);
    if (!is_subset(ev_in.support, near))
      throw std::domain_error("decoupling: inner event support leaves B(x,r)");
    if (!set_intersect(ev_out.support, excl).empty())
      throw std::domain_error(
          "decoupling: outer event support intersects B(x,2r)");
    Sampler sampler(g, spec, set_union(ev_in.support, ev_out.support));
    spot_check_decreasing(ev_in, sampler, keyed(seed, tag::misc, 1, r));
    spot_check_decreasing(ev_out, sampler, keyed(seed, tag::misc, 2, r));
    std::uint64_t n11 = 0, n10 = 0, n01 = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      Configuration c = sampler.sample(keyed(seed, tag::trial, r, t));
      bool a = ev_in.holds(BitView(c, ev_in.support));
      bool b = ev_out.holds(BitView(c, ev_out.support));
      n11 += a && b;
      n10 += a && !b;
      n01 += !a && b;
    }
    const double N = double(trials);
    double p1 = double(n11 + n10) / N, p2 = double(n11 + n01) / N;
    double pj = double(n11) / N;
    double defect = pj - p1 * p2;
    // variance of the plug-in defect via its influence curve
    auto zval = [&](bool a, bool b) {
      return double(a && b) - p1 * double(b) - p2 * double(a);
    };
    std::uint64_t n00 = trials - n11 - n10 - n01;
    double zm = (zval(1, 1) * n11 + zval(1, 0) * n10 + zval(0, 1) * n01 +
                 zval(0, 0) * n00) /
                N;
    double zs = (zval(1, 1) * zval(1, 1) * n11 + zval(1, 0) * zval(1, 0) * n10 +
                 zval(0, 1) * zval(0, 1) * n01 +
                 zval(0, 0) * zval(0, 0) * n00) /
                N;
    double sd = std::sqrt(std::max(0.0, zs - zm * zm) / N);
    rep.r_values.push_back(r);
    rep.defects.push_back(defect);
    rep.ci_halfwidths.push_back(z95 * sd);
    rep.p_inner.push_back(p1);
    rep.p_outer.push_back(p2);
    rep.p_joint.push_back(pj);
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < rep.defects.size(); ++i)
    if (rep.defects[i] > 0) {
      lx.push_back(std::log(double(rep.r_values[i])));
      ly.push_back(std::log(rep.defects[i]));
    }
  if (lx.size() >= 2 && lx.front() != lx.back())
    rep.fitted_alpha = -least_squares(lx, ly).slope;
  return rep;
}

struct SeveralBoxesReport {
  double joint = 0;           // P(G_1 ... G_J) estimate
  double bound = 0;           // prod (P(G_i) + c_alpha r^-alpha)
  double sigma = 0;           // binomial sd of the joint estimate
  std::vector<double> probs;  // per-event estimates
  bool ok = false;            // joint <= bound + 3 sigma
};

inline SeveralBoxesReport several_boxes_check(const EnvironmentSpec& spec,
                                              const Graph& g,
                                              const std::vector<Vertex>& points,
                                              int r,
                                              const std::vector<Event>& events,
                                              std::uint64_t trials,
                                              std::uint64_t seed) {
  if (points.empty() || points.size() != events.size())
    throw std::domain_error("several_boxes: need one event per point");
  if (r < 1) throw std::domain_error("several_boxes: r must be >= 1");
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      int dij = distance(g, points[i], points[j]);
      if (dij < 3 * r)
        throw std::domain_error(
            "several_boxes: points " + std::to_string(points[i]) + " and " +
            std::to_string(points[j]) + " are at distance " +
            std::to_string(dij) + " < 3r = " + std::to_string(3 * r));
    }
  VertexSet region;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!is_subset(events[i].support, ball(g, points[i], r)))
      throw std::domain_error("several_boxes: event " + std::to_string(i) +
                              " support leaves its ball");
    region = set_union(region, events[i].support);
  }
  Sampler sampler(g, spec, region);
  for (std::size_t i = 0; i < events.size(); ++i)
    spot_check_decreasing(events[i], sampler, keyed(seed, tag::misc, 3, i));
  std::vector<std::uint64_t> hits(events.size(), 0);
  std::uint64_t joint_hits = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    Configuration c = sampler.sample(keyed(seed, tag::trial, 0, t));
    bool all = true;
    for (std::size_t i = 0; i < events.size(); ++i) {
      bool h = events[i].holds(BitView(c, events[i].support));
      hits[i] += h;
      all = all && h;
    }
    joint_hits += all;
  }
  SeveralBoxesReport rep;
  rep.joint = double(joint_hits) / double(trials);
  rep.bound = 1.0;
  double slack_term =
      spec.c_alpha == 0 ? 0.0 : spec.c_alpha * std::pow(double(r), -spec.alpha);
  for (std::size_t i = 0; i < events.size(); ++i) {
    rep.probs.push_back(double(hits[i]) / double(trials));
    rep.bound *= rep.probs.back() + slack_term;
  }
  rep.sigma = std::sqrt(rep.joint * (1 - rep.joint) / double(trials));
  rep.ok = rep.joint <= rep.bound + 3 * rep.sigma;
  return rep;
}

}  // namespace percolab
