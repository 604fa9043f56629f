// percolab: experiment harness over the percolation laboratory headers.
// Subcommands share one config (INI or JSON, flags override); every artifact
// names the config hash, every run re-emits its resolved config, and writes
// are atomic.  Exit codes: 0 success, 1 a check failed, 2 usage/config error.

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "percolab/config.hpp"
#include "percolab/environments.hpp"
#include "percolab/graph.hpp"
#include "percolab/isoperimetry.hpp"
#include "percolab/percolation.hpp"
#include "percolab/renormalization.hpp"
#include "percolab/rng.hpp"
#include "percolab/separation.hpp"
#include "percolab/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace percolab;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string graph_file;  // shorthand for family=file
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<long long> trials;
  std::optional<double> p;
  std::uint64_t invocation = 0;
};

struct Opts {
  CommonOpts common;
  // gen-graph (mirrors [graph]; negative means "keep config value")
  std::string family;
  int dim = -1, radius = -1, branch = -1, depth = -1;
  // shared invocation arguments
  int x = 0;
  int r = 2;
  std::string mode = "sampled";
  long long iso_trials = 0;  // 0: fall back to run.trials
  // cover / cascade
  int s = 6;
  double dexp = 1.0;
  int fit_r = 12;
  int L_big = 32, L_small = 8;
  // pc-sweep
  double p_min = 0.3, p_max = 0.9;
  int steps = 7;
  int window_radius = 0;  // 0: auto
  bool box = false;
  // tail
  std::string volumes = "8,16,32,64";
  double chi = 1.0;
  // separation / pk
  int L = 8;
  bool exact = false;
  std::string ladder;
  std::string anchors = "auto";
  // decouple
  std::string radii = "1,2,4,8";
  std::string pair_family = "nearest";
  // sample
  long long count = 0;  // 0: run.trials
  // report
  std::string inputs;
};

struct RunContext {
  ExperimentConfig cfg;
  std::string hex;  // config hash, stamped into every artifact
  std::uint64_t sub_seed = 0;
  fs::path outdir;
};

ExperimentConfig resolve_config(const CommonOpts& c) {
  ExperimentConfig cfg =
      c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
  if (const char* env = std::getenv("PERCOLAB_SEED")) {
    cfg.run.seed = detail::parse_int<std::uint64_t>(env);
    std::cerr << "seed override: PERCOLAB_SEED = " << cfg.run.seed << "\n";
  }
  if (c.seed) cfg.run.seed = *c.seed;
  if (c.trials) cfg.run.trials = *c.trials;
  if (c.p) cfg.env.p = *c.p;
  if (!c.out.empty()) cfg.run.out = c.out;
  if (!c.graph_file.empty()) {
    cfg.graph.family = "file";
    cfg.graph.file = c.graph_file;
  }
  return cfg;
}

// hash the resolved config, derive the subcommand seed, emit the config copy
RunContext finalize(ExperimentConfig cfg, const char* name,
                    std::uint64_t invocation) {
  RunContext ctx;
  ctx.cfg = std::move(cfg);
  ctx.hex = hash_hex(config_hash(ctx.cfg));
  ctx.sub_seed = keyed(ctx.cfg.run.seed, tag::subcommand,
                       fnv1a(std::string_view(name)), invocation);
  ctx.outdir = ctx.cfg.run.out;
  fs::create_directories(ctx.outdir);
  write_atomic(ctx.outdir / (std::string(name) + ".config.ini"),
               to_ini(ctx.cfg));
  return ctx;
}

std::string iso_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// the timestamp is confined to this one header line
std::string csv_head(const RunContext& ctx, const char* op) {
  std::ostringstream o;
  o << "# percolab " << op << "\n# config " << ctx.hex << "\n# seed "
    << ctx.cfg.run.seed << "\n# generated " << iso_now() << "\n";
  return o.str();
}

json jbase(const RunContext& ctx, const char* op) {
  json j;
  j["op"] = op;
  j["config"] = ctx.hex;
  j["seed"] = ctx.cfg.run.seed;
  return j;
}

void write_json(const fs::path& path, const json& j) {
  write_atomic(path, j.dump(2) + "\n");
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ','))
    out.push_back(detail::parse_int<int>(detail::trim(tok)));
  if (out.empty())
    throw config_error(std::string(what) + ": empty list '" + s + "'");
  return out;
}

std::string fd(double v) { return detail::fmt_double(v); }

VertexSet whole_host(const Graph& g) {
  std::vector<Vertex> all(g.vertex_count());
  for (std::size_t v = 0; v < all.size(); ++v) all[v] = Vertex(v);
  return VertexSet(std::move(all));
}

json witness_json(const SeparationWitness& w) {
  json j;
  j["x"] = w.x;
  j["L"] = w.L;
  j["A"] = std::vector<Vertex>(w.A.begin(), w.A.end());
  j["B"] = std::vector<Vertex>(w.B.begin(), w.B.end());
  return j;
}

json thresholds_json(const SeparationThresholds& t) {
  return json{{"inner_num", t.inner_num},
              {"inner_den", t.inner_den},
              {"min_diam_den", t.min_diam_den},
              {"relax_diam_den", t.relax_diam_den},
              {"relax_dist_den", t.relax_dist_den},
              {"scale_ratio", t.scale_ratio},
              {"c9", t.c9},
              {"gamma", t.gamma},
              {"iso_dim", t.iso_dim},
              {"upper_dim", t.upper_dim}};
}

int run_gen_graph(Opts& o) {
  ExperimentConfig cfg = resolve_config(o.common);
  if (!o.family.empty()) cfg.graph.family = o.family;
  if (o.dim > 0) cfg.graph.dim = o.dim;
  if (o.radius >= 0) cfg.graph.radius = o.radius;
  if (o.branch > 0) cfg.graph.branch = o.branch;
  if (o.depth >= 0) cfg.graph.depth = o.depth;
  RunContext ctx = finalize(std::move(cfg), "gen-graph", o.common.invocation);
  Graph g = build_graph(ctx.cfg.graph);
  std::ostringstream body;
  serialize(g, body);
  body << "# config " << ctx.hex << "\n";
  write_atomic(ctx.outdir / "graph.plgraph", body.str());
  std::cout << "graph.plgraph: " << g.vertex_count() << " vertices, "
            << g.edge_count() << " edges\n";
  return 0;
}

int run_iso(Opts& o) {
  RunContext ctx = finalize(resolve_config(o.common), "iso", o.common.invocation);
  Graph g = build_graph(ctx.cfg.graph);
  double d_i = ctx.cfg.thresholds.iso_dim;
  long long trials = o.iso_trials > 0 ? o.iso_trials : ctx.cfg.run.trials;
  IsoProfile prof;
  if (o.mode == "exhaustive")
    prof = verify_local_iso_exhaustive(g, Vertex(o.x), o.r, d_i);
  else if (o.mode == "sampled")
    prof = estimate_iso_profile_sampled(g, Vertex(o.x), o.r, d_i,
                                        std::uint64_t(trials), ctx.sub_seed);
  else
    throw config_error("iso: mode must be 'exhaustive' or 'sampled'");
  json j = jbase(ctx, "iso");
  j["inputs"] = {{"x", o.x}, {"r", o.r}, {"mode", o.mode}, {"trials", trials}};
  j["constants"] = {{"d_i", d_i}};
  j["c_i"] = prof.c_i;
  j["worst_ratio"] = prof.worst_ratio;
  j["worst_set"] = std::vector<Vertex>(prof.worst_set.begin(), prof.worst_set.end());
  j["ball_size"] = prof.ball_size;
  j["sets_examined"] = prof.sets_examined;
  j["pass"] = prof.c_i > 0;
  write_json(ctx.outdir / "iso.json", j);
  std::cout << "iso: c_i = " << fd(prof.c_i) << " over " << prof.sets_examined
            << " sets (" << o.mode << ")\n";
  return prof.c_i > 0 ? 0 : 1;
}

int run_cover(Opts& o) {
  RunContext ctx = finalize(resolve_config(o.common), "cover", o.common.invocation);
  Graph g = build_graph(ctx.cfg.graph);
  int fr = std::max(2, std::min({o.fit_r, o.r, eccentricity(g, Vertex(o.x))}));
  VolumeFit fit = fit_volume_bounds(g, {Vertex(o.x)}, fr);
  CoveringSet K = build_covering_set(g, Vertex(o.x), o.r, o.s, o.dexp, fit,
                                     ctx.sub_seed);
  // recheck the contract independently of the builder's own accounting
  bool covered = is_subset(ball(g, Vertex(o.x), frac_floor(4LL * o.r, 6)),
                           ball(g, K.K, o.s / 6));
  bool size_ok = double(K.K.size()) <=
                 K.c5 * std::pow(double(o.r), fit.d_u) / std::pow(double(o.s), o.dexp);
  json j = jbase(ctx, "cover");
  j["inputs"] = {{"x", o.x}, {"r", o.r}, {"s", o.s}, {"d", o.dexp}};
  j["constants"] = {{"c5", K.c5}, {"d_u", fit.d_u}, {"c_u", fit.c_u}};
  j["K"] = std::vector<Vertex>(K.K.begin(), K.K.end());
  j["size"] = K.K.size();
  j["attempts"] = K.attempts;
  j["first_try_ok"] = K.first_try_ok;
  j["greedy_fallback"] = K.greedy_fallback;
  j["warnings"] = K.warnings;
  j["covered"] = covered;
  j["size_ok"] = size_ok;
  j["pass"] = covered && size_ok;
  write_json(ctx.outdir / "cover.json", j);
  std::cout << "cover: |K| = " << K.K.size() << ", covered = " << covered
            << ", size_ok = " << size_ok << "\n";
  return covered && size_ok ? 0 : 1;
}

int run_sample(Opts& o) {
  RunContext ctx = finalize(resolve_config(o.common), "sample", o.common.invocation);
  Graph g = build_graph(ctx.cfg.graph);
  VertexSet region = whole_host(g);
  Sampler sampler(g, ctx.cfg.env, region);
  long long count = o.count > 0 ? o.count : ctx.cfg.run.trials;
  std::ostringstream csv;
  csv << csv_head(ctx, "sample");
  csv << "# region_hash " << hash_hex(region.hash64()) << "\n";
  csv << "trial,open_count,cluster_count,largest_cluster\n";
  for (long long t = 0; t < count; ++t) {
    Configuration c = sampler.sample(keyed(ctx.sub_seed, tag::trial, std::uint64_t(t)));
    std::size_t open = 0;
    for (std::size_t i = 0; i < region.size(); ++i) open += c.open_at(i);
    ClusterLabeling lab = label_clusters(g, c, region);
    std::size_t largest = 0;
    for (std::size_t s : lab.cluster_sizes) largest = std::max(largest, s);
    csv << t << "," << open << "," << lab.cluster_count() << "," << largest << "\n";
  }
  write_atomic(ctx.outdir / "sample.csv", csv.str());
  std::cout << "sample: " << count << " configurations over " << region.size()
            << " vertices\n";
  return 0;
}

int run_pc_sweep(Opts& o) {
  RunContext ctx = finalize(resolve_config(o.common), "pc-sweep", o.common.invocation);
  Graph g = build_graph(ctx.cfg.graph);
  int wr = o.window_radius > 0 ? o.window_radius
                               : std::max(2, eccentricity(g, Vertex(o.x)) / 2);
  Window w = o.box ? make_box_window(g, Vertex(o.x), wr)
                   : make_window(g, Vertex(o.x), wr);
  if (o.steps < 1) throw config_error("pc-sweep: steps must be >= 1");
  std::vector<double> grid;
  for (int i = 0; i < o.steps; ++i)
    grid.push_back(o.steps == 1 ? o.p_min
                                : o.p_min + i * (o.p_max - o.p_min) / (o.steps - 1));
  SweepCurve curve = pc_sweep(g, w, std::uint64_t(ctx.cfg.run.trials), grid,
                              ctx.sub_seed);
  std::ostringstream csv;
  csv << csv_head(ctx, "pc-sweep");
  csv << "# window " << (o.box ? "box" : "ball") << " radius " << wr << "\n";
  csv << "p,spanning_prob,ci\n";
  for (std::size_t i = 0; i < curve.p_grid.size(); ++i)
    csv << fd(curve.p_grid[i]) << "," << fd(curve.probs[i]) << ","
        << fd(curve.ci_half[i]) << "\n";
  write_atomic(ctx.outdir / "pc_sweep.csv", csv.str());
  std::cout << "pc-sweep: " << curve.p_grid.size() << " grid points, "
            << curve.samples << " samples\n";
  return 0;
}

int run_tail(Opts& o) {
  RunContext ctx = finalize(resolve_config(o.common), "tail", o.common.invocation);
  Graph g = build_graph(ctx.cfg.graph);
  std::vector<int> V = parse_int_list(o.volumes, "tail");
  int wr = o.window_radius > 0 ? o.window_radius : eccentricity(g, Vertex(o.x));
  Window w = make_window(g, Vertex(o.x), wr);
  TailCurve curve = tail_estimate(g, ctx.cfg.env, Vertex(o.x), V, o.chi,
                                  std::uint64_t(ctx.cfg.run.trials),
                                  ctx.sub_seed, w);
  std::ostringstream csv;
  csv << csv_head(ctx, "tail");
  csv << "# chi " << fd(o.chi) << " window_radius " << wr << "\n";
  csv << "V,prob,weighted,ci\n";
  for (std::size_t i = 0; i < curve.V_values.size(); ++i)
    csv << curve.V_values[i] << "," << fd(curve.probs[i]) << ","
        << fd(curve.weighted[i]) << "," << fd(curve.ci_half[i]) << "\n";
  write_atomic(ctx.outdir / "tail.csv", csv.str());
  std::cout << "tail: " << curve.V_values.size() << " volumes, "
            << curve.trials << " trials\n";
  return 0;
}

int run_separation(Opts& o) {
  RunContext ctx = finalize(resolve_config(o.common), "separation",
                            o.common.invocation);
  Graph g = build_graph(ctx.cfg.graph);
  const SeparationThresholds& thr = ctx.cfg.thresholds;
  VertexSet region = ball(g, Vertex(o.x), o.L);
  Sampler sampler(g, ctx.cfg.env, region);
  Configuration c = sampler.sample(keyed(ctx.sub_seed, tag::trial, 0));
  DetectorResult res;
  if (o.exact) {
    auto w = find_witness_exhaustive(g, c, Vertex(o.x), o.L, thr);
    res.method = DetectorResult::Method::exact;
    res.verdict = w ? DetectorResult::Verdict::separated
                    : DetectorResult::Verdict::not_separated;
    res.witness = w;
    res.thresholds = thr;
  } else {
    res = detect_separation(g, c, Vertex(o.x), o.L, thr);
  }
  json j = jbase(ctx, "separation");
  j["inputs"] = {{"x", o.x}, {"L", o.L}, {"exact", o.exact}};
  j["verdict"] = to_string(res.verdict);
  j["method"] = res.method == DetectorResult::Method::exact ? "exact" : "heuristic";
  j["thresholds"] = thresholds_json(thr);
  if (res.witness) {
    json w = witness_json(*res.witness);
    w["thresholds"] = thresholds_json(thr);
    j["witness"] = w;
  } else {
    j["witness"] = nullptr;
  }
  write_json(ctx.outdir / "separation.json", j);
  std::cout << "separation: " << to_string(res.verdict) << " ("
            << j["method"].get<std::string>() << ")\n";
  return 0;
}

// [parameters] entries left at zero get desk-scale defaults; gamma always
// follows the ladder
RecursionParams fill_recursion_defaults(RecursionParams p, double ladder_gamma,
                                        const EnvironmentSpec& env) {
  if (p.gamma == 0) p.gamma = ladder_gamma;
  else if (std::abs(p.gamma - ladder_gamma) > 1e-12)
    throw config_error("pk: [parameters] gamma " + fd(p.gamma) +
                       " disagrees with [ladder] gamma " + fd(ladder_gamma));
  if (p.d_i == 0) p.d_i = 2.0;
  if (p.c_i == 0) p.c_i = 1.0;
  if (p.d_u == 0) p.d_u = 1.25;
  if (p.c_u == 0) p.c_u = 1.0;
  if (p.d_l == 0) p.d_l = 2.0;
  if (p.c_l == 0) p.c_l = 1.0;
  if (p.chi == 0) p.chi = 0.2;
  if (p.c5 == 0) p.c5 = 1.0;
  if (p.c9 == 0) p.c9 = 1.0;
  if (env.kind != EnvKind::bernoulli) {
    if (p.alpha == 0) p.alpha = env.alpha;
    if (p.c_alpha == 0) p.c_alpha = env.c_alpha;
    if (!std::isfinite(p.alpha))
      throw config_error("pk: dependent environment needs a finite alpha");
  }
  return p;
}

int run_pk(Opts& o) {
  ExperimentConfig cfg = resolve_config(o.common);
  if (!o.ladder.empty()) {
    std::vector<std::string> parts;
    std::stringstream in(o.ladder);
    std::string tok;
    while (std::getline(in, tok, ',')) parts.push_back(detail::trim(tok));
    if (parts.size() != 3)
      throw config_error("pk: --ladder wants 'L0,gamma,kmax', got '" + o.ladder + "'");
    cfg.ladder.L0 = detail::parse_int<long long>(parts[0]);
    cfg.ladder.gamma = detail::parse_double(parts[1]);
    cfg.ladder.k_max = detail::parse_int<int>(parts[2]);
  }
  RunContext ctx = finalize(std::move(cfg), "pk", o.common.invocation);
  Graph g = build_graph(ctx.cfg.graph);
  ScaleLadder lad = build_ladder(ctx.cfg.ladder.L0, ctx.cfg.ladder.gamma,
                                 ctx.cfg.ladder.k_max);
  int top = int(lad.scales.back());
  std::vector<Vertex> anchors;
  if (o.anchors == "auto") {
    anchors = coarse_anchor_net(g, top, top);
    if (anchors.empty())
      throw config_error("pk: anchor net is empty, the host cannot keep margin " +
                         std::to_string(top) + " from its edge");
  } else {
    for (int id : parse_int_list(o.anchors, "pk anchors"))
      anchors.push_back(Vertex(id));
  }
  PkSeries series = estimate_pk(g, ctx.cfg.env, lad, anchors, ctx.cfg.run.trials,
                                ctx.cfg.thresholds, ctx.sub_seed, o.exact);
  RecursionMode mode = ctx.cfg.env.kind == EnvKind::bernoulli
                           ? RecursionMode::bernoulli
                           : RecursionMode::dependent;
  RecursionParams params = select_parameters(
      fill_recursion_defaults(ctx.cfg.parameters, lad.gamma, ctx.cfg.env), mode);
  RecursionReport rep = check_recursion(series, params, mode);

  std::ostringstream csv;
  csv << csv_head(ctx, "pk");
  for (const auto& n : series.notes) csv << "# note " << n << "\n";
  for (const auto& w : lad.warnings) csv << "# warning " << w << "\n";
  csv << "k,L_k,p_hat,ci\n";
  for (std::size_t k = 0; k < lad.scales.size(); ++k)
    csv << k << "," << lad.scales[k] << "," << fd(series.p_hat[k]) << ","
        << fd(series.ci[k]) << "\n";
  write_atomic(ctx.outdir / "pk.csv", csv.str());

  json j = jbase(ctx, "pk");
  j["mode"] = to_string(mode);
  j["trials"] = series.trials;
  j["exact_detector"] = series.exact_detector;
  j["anchors"] = anchors;
  j["ladder"] = {{"L0", lad.L0}, {"gamma", lad.gamma}, {"scales", lad.scales}};
  j["parameters"] = {{"d_i", params.d_i}, {"c_i", params.c_i},
                     {"d_u", params.d_u}, {"c_u", params.c_u},
                     {"d_l", params.d_l}, {"c_l", params.c_l},
                     {"alpha", std::isfinite(params.alpha) ? params.alpha : 0.0},
                     {"c_alpha", params.c_alpha},
                     {"gamma", params.gamma}, {"d", params.d},
                     {"beta", params.beta}, {"J", params.J},
                     {"chi", params.chi}, {"c5", params.c5}, {"c9", params.c9}};
  j["p_hat"] = series.p_hat;
  j["ci"] = series.ci;
  j["hits"] = series.hits;
  json steps = json::array();
  for (const auto& s : rep.steps)
    steps.push_back({{"k", s.k}, {"lhs", s.lhs}, {"rhs", s.rhs},
                     {"verdict", to_string(s.verdict)}});
  j["steps"] = steps;
  j["decay_k"] = rep.decay_first;
  j["decay_persists"] = rep.decay_persists;
  j["all_steps_pass"] = rep.all_steps_pass;
  j["any_step_fail"] = rep.any_step_fail;
  write_json(ctx.outdir / "recursion.json", j);

  for (std::size_t k = 0; k < lad.scales.size(); ++k)
    std::cout << "pk: L_" << k << " = " << lad.scales[k]
              << ", p_hat = " << fd(series.p_hat[k]) << " +- "
              << fd(series.ci[k]) << "\n";
  for (const auto& s : rep.steps)
    std::cout << "pk: step " << s.k << " " << to_string(s.verdict)
              << " (lhs = " << fd(s.lhs) << ", rhs = " << fd(s.rhs) << ")\n";
  if (rep.decay_first >= 0)
    std::cout << "pk: decay target first met at scale index " << rep.decay_first
              << (rep.decay_persists ? ", persists" : ", does not persist") << "\n";
  else
    std::cout << "pk: decay target unmet at all scales\n";
  return rep.any_step_fail ? 1 : 0;
}

int run_cascade(Opts& o) {
  RunContext ctx = finalize(resolve_config(o.common), "cascade",
                            o.common.invocation);
  Graph g = build_graph(ctx.cfg.graph);
  const SeparationThresholds& thr = ctx.cfg.thresholds;
  int fr = std::max(
      2, std::min({o.fit_r, o.L_big / 2, eccentricity(g, Vertex(o.x))}));
  VolumeFit fit = fit_volume_bounds(g, {Vertex(o.x)}, fr);
  CoveringSet K = build_covering_set(g, Vertex(o.x), o.L_big, o.L_small, o.dexp,
                                     fit, ctx.sub_seed);
  VertexSet region = ball(g, Vertex(o.x), o.L_big);
  Sampler sampler(g, ctx.cfg.env, region);
  Configuration c = sampler.sample(keyed(ctx.sub_seed, tag::trial, 0));
  CascadeReport rep = cascade_check(g, c, Vertex(o.x), o.L_big, o.L_small, K, thr);
  json j = jbase(ctx, "cascade");
  j["inputs"] = {{"x", o.x}, {"L_big", o.L_big}, {"L_small", o.L_small},
                 {"d", o.dexp}};
  j["cover_size"] = K.K.size();
  j["path_count"] = rep.path_count;
  j["raw_found"] = rep.raw_found;
  j["N_target"] = rep.N_target;
  j["pairwise_min_distance"] = rep.pairwise_min_distance;
  j["degenerate"] = rep.degenerate;
  j["thresholds"] = thresholds_json(thr);
  json found = json::array();
  for (const auto& [y, w] : rep.found) {
    json e = witness_json(w);
    e["y"] = y;
    found.push_back(e);
  }
  j["found"] = found;
  write_json(ctx.outdir / "cascade.json", j);
  std::cout << "cascade: " << rep.found.size() << " spaced witnesses (target "
            << rep.N_target << ") along " << rep.path_count << " paths\n";
  return 0;
}

int run_decouple(Opts& o) {
  RunContext ctx = finalize(resolve_config(o.common), "decouple",
                            o.common.invocation);
  Graph g = build_graph(ctx.cfg.graph);
  std::vector<int> radii = parse_int_list(o.radii, "decouple");
  EventPairBuilder builder;
  if (o.pair_family == "nearest")
    builder = nearest_closed_pair_builder(g, Vertex(o.x));
  else if (o.pair_family == "far")
    builder = far_all_closed_builder(g, Vertex(o.x));
  else
    throw config_error("decouple: family must be 'nearest' or 'far'");
  DecouplingReport rep = estimate_decoupling_defect(
      ctx.cfg.env, g, Vertex(o.x), radii, builder,
      std::uint64_t(ctx.cfg.run.trials), ctx.sub_seed);
  std::ostringstream csv;
  csv << csv_head(ctx, "decouple");
  csv << "# family " << o.pair_family << "\n";
  csv << "# fitted_alpha " << fd(rep.fitted_alpha) << "\n";
  csv << "r,p_inner,p_outer,p_joint,defect,ci\n";
  for (std::size_t i = 0; i < rep.r_values.size(); ++i)
    csv << rep.r_values[i] << "," << fd(rep.p_inner[i]) << ","
        << fd(rep.p_outer[i]) << "," << fd(rep.p_joint[i]) << ","
        << fd(rep.defects[i]) << "," << fd(rep.ci_halfwidths[i]) << "\n";
  write_atomic(ctx.outdir / "decouple.csv", csv.str());
  std::cout << "decouple: " << radii.size() << " radii, fitted_alpha = "
            << fd(rep.fitted_alpha) << "\n";
  return 0;
}

struct CsvArtifact {
  std::string hash;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

std::optional<CsvArtifact> read_csv_artifact(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  CsvArtifact art;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# config ", 0) == 0)
        art.hash = detail::trim(std::string_view(line).substr(9));
      continue;
    }
    std::stringstream row(line);
    std::string tok;
    if (art.header.empty()) {
      while (std::getline(row, tok, ',')) art.header.push_back(tok);
      continue;
    }
    std::vector<double> vals;
    while (std::getline(row, tok, ',')) vals.push_back(detail::parse_double(tok));
    art.rows.push_back(std::move(vals));
  }
  return art;
}

std::optional<json> read_json_artifact(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  return json::parse(in);
}

int run_report(Opts& o) {
  RunContext ctx = finalize(resolve_config(o.common), "report",
                            o.common.invocation);
  fs::path dir = o.inputs.empty() ? ctx.outdir : fs::path(o.inputs);

  struct Check {
    std::string name, status, detail;
  };
  std::vector<Check> checks;
  std::vector<std::pair<std::string, std::string>> artifacts;  // name, hash

  auto csv_of = [&](const char* name) {
    auto a = read_csv_artifact(dir / name);
    if (a) artifacts.push_back({name, a->hash});
    return a;
  };
  auto json_of = [&](const char* name) {
    auto a = read_json_artifact(dir / name);
    if (a) artifacts.push_back({name, a->value("config", std::string())});
    return a;
  };

  auto pk_csv = csv_of("pk.csv");
  auto sweep_csv = csv_of("pc_sweep.csv");
  auto tail_csv = csv_of("tail.csv");
  auto decouple_csv = csv_of("decouple.csv");
  auto sample_csv = csv_of("sample.csv");
  auto recursion_j = json_of("recursion.json");
  auto iso_j = json_of("iso.json");
  auto cover_j = json_of("cover.json");
  auto separation_j = json_of("separation.json");
  auto cascade_j = json_of("cascade.json");
  (void)pk_csv;
  (void)sample_csv;
  (void)separation_j;
  (void)cascade_j;

  if (artifacts.empty())
    throw config_error("report: no artifacts found in '" + dir.string() + "'");
  for (const auto& [name, hash] : artifacts)
    if (hash != artifacts.front().second) {
      std::cerr << "report: refusing to aggregate, config hashes differ:\n";
      for (const auto& [n, h] : artifacts)
        std::cerr << "  " << n << ": " << (h.empty() ? "<missing>" : h) << "\n";
      return 2;
    }
  const std::string& common_hash = artifacts.front().second;

  if (recursion_j) {
    const json& r = *recursion_j;
    bool fail = r.value("any_step_fail", false);
    checks.push_back({"recursion_steps", fail ? "fail" : "pass",
                      fail ? "at least one inductive step hard-fails"
                           : "no inductive step hard-fails"});
    int decay_k = r.value("decay_k", -1);
    bool persists = r.value("decay_persists", false);
    if (decay_k < 0)
      checks.push_back({"decay_target", "fail",
                        "decay target p_hat <= L^-beta unmet at all scales"});
    else if (!persists)
      checks.push_back({"decay_target", "fail",
                        "met at scale index " + std::to_string(decay_k) +
                            " but broken at a later scale"});
    else
      checks.push_back({"decay_target", "pass",
                        "holds from scale index " + std::to_string(decay_k) +
                            " on"});
  }
  if (tail_csv && tail_csv->header.size() >= 4) {
    bool ok = true;
    std::string where;
    for (std::size_t i = 0; i + 1 < tail_csv->rows.size(); ++i) {
      double w0 = tail_csv->rows[i][2], w1 = tail_csv->rows[i + 1][2];
      double slack = tail_csv->rows[i][3] + tail_csv->rows[i + 1][3];
      if (w1 > w0 + slack) {
        ok = false;
        where = "V = " + fd(tail_csv->rows[i + 1][0]);
        break;
      }
    }
    checks.push_back({"tail_weighted_monotone", ok ? "pass" : "fail",
                      ok ? "V^chi P[V < |C| < inf] nonincreasing within CI"
                         : "increases beyond CI at " + where});
  }
  if (sweep_csv && sweep_csv->header.size() >= 3) {
    bool ok = true;
    std::string where;
    for (std::size_t i = 0; i + 1 < sweep_csv->rows.size(); ++i) {
      double a = sweep_csv->rows[i][1], b = sweep_csv->rows[i + 1][1];
      double slack = sweep_csv->rows[i][2] + sweep_csv->rows[i + 1][2];
      if (b < a - slack) {
        ok = false;
        where = "p = " + fd(sweep_csv->rows[i + 1][0]);
        break;
      }
    }
    checks.push_back({"sweep_monotone", ok ? "pass" : "fail",
                      ok ? "spanning probability nondecreasing within CI"
                         : "decreases beyond CI at " + where});
  }
  if (decouple_csv) {
    checks.push_back({"decoupling_measured", "pass",
                      std::to_string(decouple_csv->rows.size()) +
                          " radii estimated"});
  }
  if (iso_j)
    checks.push_back({"iso_positive", iso_j->value("pass", false) ? "pass" : "fail",
                      "c_i = " + fd(iso_j->value("c_i", 0.0))});
  if (cover_j)
    checks.push_back({"cover_valid", cover_j->value("pass", false) ? "pass" : "fail",
                      "size " + std::to_string(cover_j->value("size", 0))});

  bool any_fail = false;
  std::printf("%-26s %-6s %s\n", "check", "status", "detail");
  for (const auto& c : checks) {
    any_fail = any_fail || c.status == "fail";
    std::printf("%-26s %-6s %s\n", c.name.c_str(), c.status.c_str(),
                c.detail.c_str());
  }

  json j = jbase(ctx, "report");
  j["config"] = common_hash;  // the hash the aggregated artifacts agree on
  json arts = json::array();
  for (const auto& [name, hash] : artifacts)
    arts.push_back({{"file", name}, {"hash", hash}});
  j["artifacts"] = arts;
  json jchecks = json::array();
  for (const auto& c : checks)
    jchecks.push_back({{"name", c.name}, {"status", c.status},
                       {"detail", c.detail}});
  j["checks"] = jchecks;
  write_json(dir / "report.json", j);
  return any_fail ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"percolation laboratory experiment harness"};
  app.require_subcommand(1);
  Opts o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.common.config_path,
                    "config file, INI sections or JSON");
    sub->add_option("--graph", o.common.graph_file, "plgraph file to load");
    sub->add_option("--out", o.common.out, "output directory");
    sub->add_option("--seed", o.common.seed, "master seed override");
    sub->add_option("--trials", o.common.trials, "trial count override");
    sub->add_option("--p", o.common.p, "environment density override");
    sub->add_option("--invocation", o.common.invocation,
                    "pipeline invocation index for seed derivation");
    return sub;
  };

  auto* gen = add_common(app.add_subcommand("gen-graph", "write a plgraph host"));
  gen->add_option("--family", o.family, "grid | tree | joined | file");
  gen->add_option("--dim", o.dim);
  gen->add_option("--radius", o.radius);
  gen->add_option("--branch", o.branch);
  gen->add_option("--depth", o.depth);

  auto* iso = add_common(app.add_subcommand("iso", "local isoperimetric profile"));
  iso->add_option("--x", o.x);
  iso->add_option("--r", o.r);
  iso->add_option("--mode", o.mode, "exhaustive | sampled");
  iso->add_option("--iso-trials", o.iso_trials, "sampled subsets, 0 = run.trials");

  auto* cover = add_common(app.add_subcommand("cover", "sparse covering set"));
  cover->add_option("--x", o.x);
  cover->add_option("--r", o.r);
  cover->add_option("--s", o.s);
  cover->add_option("--d", o.dexp);
  cover->add_option("--fit-r", o.fit_r, "volume-fit radius");

  auto* sample = add_common(app.add_subcommand("sample", "draw configurations"));
  sample->add_option("--count", o.count, "configurations, 0 = run.trials");

  auto* sweep = add_common(app.add_subcommand("pc-sweep", "spanning probability curve"));
  sweep->add_option("--x", o.x);
  sweep->add_option("--p-min", o.p_min);
  sweep->add_option("--p-max", o.p_max);
  sweep->add_option("--steps", o.steps);
  sweep->add_option("--window-radius", o.window_radius, "0 = auto");
  sweep->add_flag("--box", o.box, "box window instead of a ball");

  auto* tail = add_common(app.add_subcommand("tail", "finite-cluster tail curve"));
  tail->add_option("--x", o.x);
  tail->add_option("--volumes", o.volumes, "comma list of V thresholds");
  tail->add_option("--chi", o.chi);
  tail->add_option("--window-radius", o.window_radius, "0 = auto");

  auto* sep = add_common(app.add_subcommand("separation", "detect a separation event"));
  sep->add_option("--x", o.x);
  sep->add_option("--L", o.L);
  sep->add_flag("--exact", o.exact, "exhaustive witness search");

  auto* pk = add_common(app.add_subcommand("pk", "per-scale separation probabilities"));
  pk->add_option("--ladder", o.ladder, "L0,gamma,kmax (overrides [ladder])");
  pk->add_option("--anchors", o.anchors, "'auto' or comma list of vertex ids");
  pk->add_flag("--exact", o.exact, "exhaustive detector");

  auto* cas = add_common(app.add_subcommand("cascade", "descend one scale"));
  cas->add_option("--x", o.x);
  cas->add_option("--L-big", o.L_big);
  cas->add_option("--L-small", o.L_small);
  cas->add_option("--d", o.dexp, "covering density exponent");
  cas->add_option("--fit-r", o.fit_r, "volume-fit radius");

  auto* dec = add_common(app.add_subcommand("decouple", "decoupling defect estimates"));
  dec->add_option("--x", o.x);
  dec->add_option("--radii", o.radii, "comma list of r values");
  dec->add_option("--family", o.pair_family, "nearest | far");

  auto* rep = add_common(app.add_subcommand("report", "aggregate prior outputs"));
  rep->add_option("--inputs", o.inputs, "artifact directory, default run.out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "gen-graph") return run_gen_graph(o);
    if (name == "iso") return run_iso(o);
    if (name == "cover") return run_cover(o);
    if (name == "sample") return run_sample(o);
    if (name == "pc-sweep") return run_pc_sweep(o);
    if (name == "tail") return run_tail(o);
    if (name == "separation") return run_separation(o);
    if (name == "pk") return run_pk(o);
    if (name == "cascade") return run_cascade(o);
    if (name == "decouple") return run_decouple(o);
    if (name == "report") return run_report(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << "error: unknown subcommand '" << name << "'\n";
  return 2;
}
