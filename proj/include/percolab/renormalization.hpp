#pragma once
// Scale ladders, recursion parameters, Monte-Carlo estimation of the
// per-scale separation probabilities p_k, and arithmetic verification of the
// inductive inequality and decay target those probabilities should satisfy.
// Everything here runs at desk scale: the asymptotic setting starts the
// ladder at 10000, we default to 4 and flag the departure.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "percolab/environments.hpp"
#include "percolab/graph.hpp"
#include "percolab/rng.hpp"
#include "percolab/separation.hpp"
#include "percolab/stats.hpp"

namespace percolab {

struct ScaleLadder {
  long long L0 = 0;
  double gamma = 0;
  std::vector<long long> scales;  // L_{k+1} = ceil(L_k^gamma)
  std::vector<std::string> warnings;
};

// The successor map is exact integer ceiling of a real power; pow noise near
// exact integers (4^1.5 = 8) is snapped away with an absolute window far
// wider than long-double error and far narrower than any honest fraction.
inline ScaleLadder build_ladder(long long L0, double gamma, int k_max) {
  if (L0 < 2) throw std::domain_error("ladder: L0 must be at least 2");
  if (!(gamma > 1.0))
    throw std::domain_error("ladder: gamma must exceed 1, got " +
                            std::to_string(gamma));
  if (k_max < 0) throw std::domain_error("ladder: k_max must be >= 0");
  ScaleLadder lad;
  lad.L0 = L0;
  lad.gamma = gamma;
  lad.scales.push_back(L0);
  for (int k = 0; k < k_max; ++k) {
    long double v = std::pow((long double)lad.scales.back(), (long double)gamma);
    if (v > 4.0e15L)
      throw std::range_error("ladder: scale overflows past step " +
                             std::to_string(k));
    long double r = std::round(v);
    long long next = std::abs(v - r) < 1e-6L ? (long long)r : (long long)std::ceil(v);
    if (next <= lad.scales.back())
      throw std::logic_error("ladder: scales failed to increase");
    lad.scales.push_back(next);
  }
  if (L0 != 10000)
    lad.warnings.push_back("L0 = " + std::to_string(L0) +
                           " departs from the asymptotic setting's 10000");
  return lad;
}

enum class RecursionMode { bernoulli, dependent };

inline std::string to_string(RecursionMode m) {
  return m == RecursionMode::bernoulli ? "bernoulli" : "dependent";
}

// Every constant the recursion arithmetic consumes.  Zero means "not set";
// select_parameters fills gamma, d, beta, J and validates the rest.
struct RecursionParams {
  double d_i = 0, c_i = 0;  // local isoperimetry
  double d_u = 0, c_u = 0;  // volume upper bound
  double d_l = 0, c_l = 0;  // volume lower bound
  double alpha = 0, c_alpha = 0;  // decoupling certificate (dependent mode)
  double gamma = 0;               // scale growth exponent
  double d = 0;                   // covering density exponent, below d_l
  double beta = 0;                // decay target exponent
  long long J = 0;                // recursion power
  double chi = 0;                 // tail moment exponent
  double c5 = 0;                  // covering size constant
  double c9 = 0;                  // cascade count constant
};

namespace detail {

inline void need_positive(double v, const char* name) {
  if (!(v > 0))
    throw std::domain_error(std::string("parameters: ") + name +
                            " must be positive");
}

}  // namespace detail

// Re-assert every strict inequality a selected parameter set is built from.
// Throws naming the first violated one; never trusts the construction.
inline void verify_parameters(const RecursionParams& p, RecursionMode mode) {
  auto fail = [](const std::string& what) {
    throw std::domain_error("parameters: " + what);
  };
  if (!(p.d_i > 1)) fail("d_i must exceed 1");
  if (!(p.gamma > 1)) fail("gamma must exceed 1");
  if (!(p.gamma * (p.d_i - 1) / p.d_i > p.d_u - 1))
    fail("gamma (d_i - 1)/d_i must exceed d_u - 1, gamma = " +
         std::to_string(p.gamma) + " is too small");
  if (!(p.d > 0 && p.d < p.d_l)) fail("d must lie strictly inside (0, d_l)");
  double drift = p.gamma * p.d_u - p.d;
  if (mode == RecursionMode::bernoulli) {
    if (!(p.beta > drift)) fail("beta must exceed gamma d_u - d");
    if (!(p.beta > p.gamma * (1 + p.chi))) fail("beta must exceed gamma (1 + chi)");
    if (!(p.J >= 2)) fail("J must be at least 2");
    if (!(double(p.J) * (p.beta - drift) > p.gamma * p.beta))
      fail("J (beta - (gamma d_u - d)) must exceed gamma beta");
  } else {
    if (!(p.alpha > drift)) fail("alpha must exceed gamma d_u - d");
    if (!(p.beta > p.alpha)) fail("beta must exceed alpha");
    if (!(p.beta > p.gamma * (1 + p.chi))) fail("beta must exceed gamma (1 + chi)");
    if (!(p.J >= 2)) fail("J must be at least 2");
    if (!(double(p.J) * (p.alpha - drift) > p.gamma * p.beta))
      fail("J (alpha - (gamma d_u - d)) must exceed gamma beta");
  }
}

// Fill gamma, d, beta, J just above their strict bounds (5% margin), keeping
// anything the caller preset.  Dependent mode first checks that alpha clears
// the feasibility floor (1 v d_i(d_u-1)/(d_i-1)) d_u - d_l; for matching
// volume and isoperimetric dimensions D that floor is exactly D(D-1).
inline RecursionParams select_parameters(RecursionParams p, RecursionMode mode) {
  if (!(p.d_i > 1)) throw std::domain_error("parameters: d_i must exceed 1");
  detail::need_positive(p.c_i, "c_i");
  detail::need_positive(p.c_u, "c_u");
  detail::need_positive(p.c_l, "c_l");
  detail::need_positive(p.d_l, "d_l");
  detail::need_positive(p.chi, "chi");
  detail::need_positive(p.c5, "c5");
  detail::need_positive(p.c9, "c9");
  if (!(p.d_u >= 1)) throw std::domain_error("parameters: d_u must be at least 1");

  double gamma_floor = std::max(1.0, p.d_i * (p.d_u - 1) / (p.d_i - 1));
  if (mode == RecursionMode::dependent) {
    detail::need_positive(p.alpha, "alpha (dependent mode)");
    if (p.c_alpha < 0)
      throw std::domain_error("parameters: c_alpha must be nonnegative");
    double floor = gamma_floor * p.d_u - p.d_l;
    if (!(p.alpha > floor))
      throw std::domain_error(
          "parameters: alpha = " + std::to_string(p.alpha) +
          " is infeasible, the dependent recursion needs alpha > " +
          std::to_string(floor));
    if (p.gamma == 0) {
      double gamma_cap = (p.alpha + p.d_l) / p.d_u;  // keeps alpha room open
      p.gamma = gamma_floor + 0.05 * (gamma_cap - gamma_floor);
    }
    if (p.d == 0) {
      double d_floor = std::max(0.0, p.gamma * p.d_u - p.alpha);
      p.d = d_floor + 0.95 * (p.d_l - d_floor);
    }
    if (p.beta == 0) p.beta = 1.05 * std::max(p.alpha, p.gamma * (1 + p.chi));
    if (p.J == 0) {
      double denom = p.alpha - (p.gamma * p.d_u - p.d);
      if (!(denom > 0))
        throw std::domain_error(
            "parameters: preset gamma/d leave alpha <= gamma d_u - d");
      p.J = std::max<long long>(
          2, (long long)std::floor(p.gamma * p.beta / denom) + 1);
    }
  } else {
    if (p.gamma == 0) p.gamma = 1.05 * gamma_floor;
    if (p.d == 0) p.d = p.d_l / 2;
    if (p.beta == 0)
      p.beta = 1.05 * std::max(p.gamma * p.d_u - p.d, p.gamma * (1 + p.chi));
    if (p.J == 0) {
      double denom = p.beta - (p.gamma * p.d_u - p.d);
      if (!(denom > 0))
        throw std::domain_error(
            "parameters: preset beta does not exceed gamma d_u - d");
      p.J = std::max<long long>(
          2, (long long)std::floor(p.gamma * p.beta / denom) + 1);
    }
  }
  verify_parameters(p, mode);
  return p;
}

struct PkSeries {
  ScaleLadder ladder;
  std::vector<double> p_hat;    // max over anchors of the empirical frequency
  std::vector<double> ci;       // 95% Wilson halfwidth at the max anchor
  std::vector<long long> hits;  // raw hit count at the max anchor
  std::vector<Vertex> anchors;
  long long trials = 0;
  bool exact_detector = false;
  std::vector<std::string> notes;
};

// Greedy coarse net: anchors pairwise at least `spacing` apart and at least
// `margin` away from the truncation artifacts of the host graph.
inline std::vector<Vertex> coarse_anchor_net(const Graph& g, int spacing,
                                             int margin) {
  if (spacing < 1) throw std::domain_error("anchor net: spacing must be >= 1");
  std::vector<int> edge_dist(g.vertex_count(), -1);
  if (!g.host_boundary().empty()) {
    std::vector<Vertex> queue(g.host_boundary().begin(), g.host_boundary().end());
    for (Vertex v : queue) edge_dist[v] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      Vertex u = queue[head];
      for (Vertex w : g.neighbors(u))
        if (edge_dist[w] < 0) {
          edge_dist[w] = edge_dist[u] + 1;
          queue.push_back(w);
        }
    }
  }
  std::vector<Vertex> out;
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    if (edge_dist[v] >= 0 && edge_dist[v] < margin) continue;
    bool clear = true;
    for (Vertex a : out)
      if (distance(g, a, Vertex(v)) < spacing) {
        clear = false;
        break;
      }
    if (clear) out.push_back(Vertex(v));
  }
  return out;
}

// Empirical p_k: for each scale, the max over anchors of the frequency of a
// detected separation.  The heuristic detector only ever under-reports, so
// the estimates are lower-bound flavored; pass use_exact on tiny scales to
// get the exhaustive detector instead.
inline PkSeries estimate_pk(const Graph& g, const EnvironmentSpec& spec,
                            const ScaleLadder& ladder,
                            const std::vector<Vertex>& anchors, long long trials,
                            const SeparationThresholds& thr, std::uint64_t seed,
                            bool use_exact = false) {
  if (anchors.empty()) throw std::domain_error("estimate_pk: no anchors");
  if (trials < 1) throw std::domain_error("estimate_pk: trials must be >= 1");
  if (ladder.scales.empty()) throw std::domain_error("estimate_pk: empty ladder");
  long long top = ladder.scales.back();
  if (top > (1ll << 30)) throw std::domain_error("estimate_pk: ladder top too large");

  if (!g.host_boundary().empty()) {
    std::vector<int> edge_dist(g.vertex_count(), -1);
    std::vector<Vertex> queue(g.host_boundary().begin(), g.host_boundary().end());
    for (Vertex v : queue) edge_dist[v] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      Vertex u = queue[head];
      for (Vertex w : g.neighbors(u))
        if (edge_dist[w] < 0) {
          edge_dist[w] = edge_dist[u] + 1;
          queue.push_back(w);
        }
    }
    for (Vertex a : anchors)
      if (edge_dist[a] < top)
        throw std::domain_error(
            "estimate_pk: anchor " + std::to_string(a) + " sits " +
            std::to_string(edge_dist[a]) +
            " from the trimmed host edge, the ladder top needs " +
            std::to_string(top));
  }

  PkSeries out;
  out.ladder = ladder;
  out.anchors = anchors;
  out.trials = trials;
  out.exact_detector = use_exact;
  spec.validate();

  for (std::size_t k = 0; k < ladder.scales.size(); ++k) {
    int L = int(ladder.scales[k]);
    long long best_hits = -1;
    for (std::size_t ai = 0; ai < anchors.size(); ++ai) {
      Vertex x = anchors[ai];
      VertexSet region = ball(g, x, L);
      Sampler sampler(g, spec, region);
      long long h = 0;
      for (long long t = 0; t < trials; ++t) {
        std::uint64_t s =
            keyed(seed, tag::trial, (std::uint64_t(k) << 32) | ai, std::uint64_t(t));
        Configuration cfg = sampler.sample(s);
        bool sep = use_exact
                       ? detect_separation_exact(g, cfg, x, L, thr)
                       : detect_separation(g, cfg, x, L, thr).verdict ==
                             DetectorResult::Verdict::separated;
        h += sep;
      }
      best_hits = std::max(best_hits, h);
    }
    out.hits.push_back(best_hits);
    out.p_hat.push_back(double(best_hits) / double(trials));
    out.ci.push_back(wilson(std::uint64_t(best_hits), std::uint64_t(trials), z95)
                         .halfwidth());
  }
  out.notes.push_back(use_exact
                          ? "exact detector: estimates are unbiased per anchor"
                          : "heuristic detector: estimates are lower bounds of "
                            "the separation probability");
  return out;
}

enum class StepVerdict { pass, inconclusive, fail };

inline std::string to_string(StepVerdict v) {
  switch (v) {
    case StepVerdict::pass: return "pass";
    case StepVerdict::inconclusive: return "inconclusive";
    default: return "fail";
  }
}

struct RecursionStep {
  int k = 0;
  double lhs = 0;  // p_hat[k + 1]
  double rhs = 0;  // (c5 L_k^(gamma d_u - d))^J (p_hat[k] + dependent term)^J
  StepVerdict verdict = StepVerdict::inconclusive;
};

struct RecursionReport {
  std::vector<RecursionStep> steps;
  std::vector<char> decay_ok;  // p_hat[k] <= L_k^-beta per scale
  int decay_first = -1;        // first scale meeting the decay target
  bool decay_persists = false;
  bool all_steps_pass = false;
  bool any_step_fail = false;
};

// Arithmetic check of the inductive inequality between consecutive scales.
// The inequality relates true probabilities, so an estimate that lands above
// the right-hand side is only a "fail" when its one-sided 99% lower
// confidence bound clears it too; anything between is inconclusive.
inline RecursionReport check_recursion(const PkSeries& series,
                                       const RecursionParams& params,
                                       RecursionMode mode) {
  std::size_t K = series.ladder.scales.size();
  if (series.p_hat.size() != K || series.hits.size() != K)
    throw std::domain_error("recursion: series arrays disagree with its ladder");
  if (std::abs(series.ladder.gamma - params.gamma) > 1e-12)
    throw std::domain_error("recursion: ladder gamma " +
                            std::to_string(series.ladder.gamma) +
                            " does not match parameter gamma " +
                            std::to_string(params.gamma));
  if (params.J < 1) throw std::domain_error("recursion: J must be at least 1");

  RecursionReport rep;
  double drift = params.gamma * params.d_u - params.d;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    double Lk = double(series.ladder.scales[k]);
    double base = series.p_hat[k];
    if (mode == RecursionMode::dependent)
      base += params.c_alpha * std::pow(Lk, -params.alpha);
    double rhs = 0;
    if (base > 0) {
      double log_rhs =
          double(params.J) * (std::log(params.c5) + drift * std::log(Lk) +
                              std::log(base));
      rhs = log_rhs > 700 ? std::numeric_limits<double>::infinity()
                          : std::exp(log_rhs);
    }
    RecursionStep step;
    step.k = int(k);
    step.lhs = series.p_hat[k + 1];
    step.rhs = rhs;
    if (step.lhs <= rhs) {
      step.verdict = StepVerdict::pass;
    } else {
      double lower = wilson_lower(std::uint64_t(series.hits[k + 1]),
                                  std::uint64_t(series.trials), z99_one_sided);
      step.verdict = lower > rhs ? StepVerdict::fail : StepVerdict::inconclusive;
    }
    rep.steps.push_back(step);
  }

  for (std::size_t k = 0; k < K; ++k) {
    double target = std::pow(double(series.ladder.scales[k]), -params.beta);
    rep.decay_ok.push_back(series.p_hat[k] <= target);
  }
  for (std::size_t k = 0; k < K; ++k)
    if (rep.decay_ok[k]) {
      rep.decay_first = int(k);
      break;
    }
  if (rep.decay_first >= 0) {
    rep.decay_persists = true;
    for (std::size_t k = std::size_t(rep.decay_first); k < K; ++k)
      if (!rep.decay_ok[k]) rep.decay_persists = false;
  }
  rep.all_steps_pass = true;
  for (const auto& s : rep.steps) {
    if (s.verdict != StepVerdict::pass) rep.all_steps_pass = false;
    if (s.verdict == StepVerdict::fail) rep.any_step_fail = true;
  }
  return rep;
}

// Finite union bound over the tail of the ladder: each scale k contributes
// floor(L_{k+1}/L_k) copies of p_hat[k].  Requires the decay target to hold
// from k_o on, mirroring the hypothesis it is used under.
inline double gk_union_bound(const PkSeries& series, const RecursionParams& params,
                             int k_o) {
  std::size_t K = series.ladder.scales.size();
  if (series.p_hat.size() != K)
    throw std::domain_error("union bound: series arrays disagree with its ladder");
  if (k_o < 0 || std::size_t(k_o) >= K)
    throw std::domain_error("union bound: k_o out of range");
  for (std::size_t k = std::size_t(k_o); k < K; ++k) {
    double target = std::pow(double(series.ladder.scales[k]), -params.beta);
    if (series.p_hat[k] > target)
      throw std::domain_error(
          "union bound: decay precondition fails at scale index " +
          std::to_string(k) + ", p_hat = " + std::to_string(series.p_hat[k]) +
          " exceeds " + std::to_string(target));
  }
  double bound = 0;
  for (std::size_t k = std::size_t(k_o); k + 1 < K; ++k) {
    double copies =
        double(series.ladder.scales[k + 1] / series.ladder.scales[k]);
    bound += std::max(1.0, copies) * series.p_hat[k];
  }
  return bound;
}

}  // namespace percolab
