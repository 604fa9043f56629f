#pragma once
// Experiment configuration: one struct covering graph, environment,
// thresholds, ladder, recursion parameters, and run plumbing.  Serializes to
// an INI-style text (canonical key order, shortest round-trip numerals) that
// parses back bit-exactly; JSON is accepted as an alternative input.  The
// FNV-1a hash of the canonical text is stamped into every output artifact.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "percolab/environments.hpp"
#include "percolab/renormalization.hpp"
#include "percolab/separation.hpp"

namespace percolab {

struct GraphSpec {
  std::string family = "grid";  // grid | tree | joined | file
  int dim = 2;
  int radius = 8;
  int branch = 3;  // tree family
  int depth = 6;   // tree family
  std::string file;  // plgraph path when family = file
};

struct LadderSpec {
  long long L0 = 4;
  double gamma = 1.5;
  int k_max = 2;
};

struct RunSpec {
  long long trials = 200;
  std::uint64_t seed = 1;
  std::string out = "out";
};

struct ExperimentConfig {
  GraphSpec graph;
  EnvironmentSpec env;
  SeparationThresholds thresholds;
  LadderSpec ladder;
  RecursionParams parameters;  // partial is fine; zero means "fill for me"
  RunSpec run;
};

inline EnvKind env_kind_from_string(const std::string& s) {
  if (s == "bernoulli") return EnvKind::bernoulli;
  if (s == "finitely_dependent") return EnvKind::finitely_dependent;
  if (s == "long_range") return EnvKind::long_range;
  throw config_error("environment: unknown kind '" + s + "'");
}

namespace detail {

// shortest representation that parses back to the same double
inline std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  const char* b = s.data();
  const char* e = b + s.size();
  bool neg = b != e && *b == '-';
  double v = 0;
  // from_chars rejects the infinities to_chars emits for unset certificates
  if (std::string_view(neg ? b + 1 : b, e - (neg ? b + 1 : b)) == "inf")
    return neg ? -std::numeric_limits<double>::infinity()
               : std::numeric_limits<double>::infinity();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e)
    throw config_error("cannot parse '" + s + "' as a real number");
  return v;
}

template <typename Int>
inline Int parse_int(const std::string& s) {
  Int v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw config_error("cannot parse '" + s + "' as an integer");
  return v;
}

struct ConfigField {
  const char* section;
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

// Single source of truth for serialization and both parsers; canonical
// output order is the order here.
inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> f;
    auto add = [&f](const char* sec, const char* key, auto getter, auto setter) {
      f.push_back({sec, key, getter, setter});
    };
#define PL_STR(sec, key, expr)                                            \
  add(sec, key, [](const ExperimentConfig& c) { return c.expr; },         \
      [](ExperimentConfig& c, const std::string& v) { c.expr = v; })
#define PL_INT(sec, key, type, expr)                                      \
  add(sec, key,                                                           \
      [](const ExperimentConfig& c) { return std::to_string(c.expr); },   \
      [](ExperimentConfig& c, const std::string& v) {                     \
        c.expr = parse_int<type>(v);                                      \
      })
#define PL_DBL(sec, key, expr)                                            \
  add(sec, key, [](const ExperimentConfig& c) { return fmt_double(c.expr); }, \
      [](ExperimentConfig& c, const std::string& v) {                     \
        c.expr = parse_double(v);                                         \
      })
    PL_STR("graph", "family", graph.family);
    PL_INT("graph", "dim", int, graph.dim);
    PL_INT("graph", "radius", int, graph.radius);
    PL_INT("graph", "branch", int, graph.branch);
    PL_INT("graph", "depth", int, graph.depth);
    PL_STR("graph", "file", graph.file);
    add("environment", "kind",
        [](const ExperimentConfig& c) { return std::string(to_string(c.env.kind)); },
        [](ExperimentConfig& c, const std::string& v) {
          c.env.kind = env_kind_from_string(v);
        });
    PL_DBL("environment", "p", env.p);
    PL_INT("environment", "radius", int, env.radius);
    PL_DBL("environment", "tail_exponent", env.tail_exponent);
    PL_DBL("environment", "alpha", env.alpha);
    PL_DBL("environment", "c_alpha", env.c_alpha);
    PL_INT("thresholds", "inner_num", int, thresholds.inner_num);
    PL_INT("thresholds", "inner_den", int, thresholds.inner_den);
    PL_INT("thresholds", "min_diam_den", int, thresholds.min_diam_den);
    PL_INT("thresholds", "relax_diam_den", int, thresholds.relax_diam_den);
    PL_INT("thresholds", "relax_dist_den", int, thresholds.relax_dist_den);
    PL_INT("thresholds", "scale_ratio", int, thresholds.scale_ratio);
    PL_DBL("thresholds", "c9", thresholds.c9);
    PL_DBL("thresholds", "gamma", thresholds.gamma);
    PL_DBL("thresholds", "iso_dim", thresholds.iso_dim);
    PL_DBL("thresholds", "upper_dim", thresholds.upper_dim);
    PL_INT("ladder", "L0", long long, ladder.L0);
    PL_DBL("ladder", "gamma", ladder.gamma);
    PL_INT("ladder", "k_max", int, ladder.k_max);
    PL_DBL("parameters", "d_i", parameters.d_i);
    PL_DBL("parameters", "c_i", parameters.c_i);
    PL_DBL("parameters", "d_u", parameters.d_u);
    PL_DBL("parameters", "c_u", parameters.c_u);
    PL_DBL("parameters", "d_l", parameters.d_l);
    PL_DBL("parameters", "c_l", parameters.c_l);
    PL_DBL("parameters", "alpha", parameters.alpha);
    PL_DBL("parameters", "c_alpha", parameters.c_alpha);
    PL_DBL("parameters", "gamma", parameters.gamma);
    PL_DBL("parameters", "d", parameters.d);
    PL_DBL("parameters", "beta", parameters.beta);
    PL_INT("parameters", "J", long long, parameters.J);
    PL_DBL("parameters", "chi", parameters.chi);
    PL_DBL("parameters", "c5", parameters.c5);
    PL_DBL("parameters", "c9", parameters.c9);
    PL_INT("run", "trials", long long, run.trials);
    PL_INT("run", "seed", std::uint64_t, run.seed);
    PL_STR("run", "out", run.out);
#undef PL_STR
#undef PL_INT
#undef PL_DBL
    return f;
  }();
  return fields;
}

inline const ConfigField* find_field(std::string_view section,
                                     std::string_view key) {
  for (const auto& f : config_fields())
    if (section == f.section && key == f.key) return &f;
  return nullptr;
}

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

inline std::string to_ini(const ExperimentConfig& cfg) {
  std::string out;
  std::string current;
  for (const auto& f : detail::config_fields()) {
    if (current != f.section) {
      if (!out.empty()) out += "\n";
      current = f.section;
      out += "[" + current + "]\n";
    }
    out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

// INI-style parser: [section] headers, key = value lines, # or ; comments.
// Unknown sections or keys are errors; diagnostics carry the line number.
inline ExperimentConfig parse_ini(const std::string& text,
                                  const std::string& where = "config") {
  ExperimentConfig cfg;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = detail::trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    auto at = [&](const std::string& msg) {
      return config_error(where + ":" + std::to_string(line) + ": " + msg);
    };
    if (s.front() == '[') {
      if (s.back() != ']') throw at("unterminated section header");
      section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
      bool known = false;
      for (const auto& f : detail::config_fields())
        if (section == f.section) known = true;
      if (!known) throw at("unknown section [" + section + "]");
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) throw at("expected 'key = value'");
    std::string key = detail::trim(std::string_view(s).substr(0, eq));
    std::string value = detail::trim(std::string_view(s).substr(eq + 1));
    if (section.empty()) throw at("key '" + key + "' before any [section]");
    const auto* f = detail::find_field(section, key);
    if (!f) throw at("unknown key '" + key + "' in [" + section + "]");
    try {
      f->set(cfg, value);
    } catch (const std::exception& e) {
      throw at(std::string(e.what()) + " (key '" + key + "')");
    }
  }
  return cfg;
}

// JSON alternative: one object per section.  Malformed JSON reports the line
// computed from the parser's byte offset; unknown keys report their path.
inline ExperimentConfig parse_json(const std::string& text,
                                   const std::string& where = "config") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      line += text[i] == '\n';
    throw config_error(where + ":" + std::to_string(line) + ": " + e.what());
  }
  ExperimentConfig cfg;
  if (!j.is_object()) throw config_error(where + ": top level must be an object");
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object())
      throw config_error(where + ": [" + section + "] must be an object");
    for (const auto& [key, val] : body.items()) {
      const auto* f = detail::find_field(section, key);
      if (!f)
        throw config_error(where + ": unknown key '" + section + "." + key + "'");
      std::string s = val.is_string() ? val.get<std::string>() : val.dump();
      try {
        f->set(cfg, s);
      } catch (const std::exception& e) {
        throw config_error(where + ": " + section + "." + key + ": " + e.what());
      }
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text,
                                          const std::string& where = "config") {
  for (char ch : text) {
    if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') continue;
    return ch == '{' ? parse_json(text, where) : parse_ini(text, where);
  }
  return ExperimentConfig{};  // empty file: all defaults
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  return fnv1a(to_ini(cfg));
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return std::string(buf, 16);
}

// temp file + rename, so readers never see a partial artifact
inline void write_atomic(const std::filesystem::path& path,
                         const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline Graph build_graph(const GraphSpec& spec) {
  if (spec.family == "grid") return grid_zd(spec.dim, spec.radius);
  if (spec.family == "tree") return regular_tree(spec.branch, spec.depth);
  if (spec.family == "joined") return joined_grids(spec.dim, spec.radius);
  if (spec.family == "file") {
    if (spec.file.empty())
      throw config_error("graph: family 'file' needs a file path");
    std::ifstream in(spec.file, std::ios::binary);
    if (!in) throw config_error("graph: cannot open '" + spec.file + "'");
    return from_edge_list(in, spec.file);
  }
  throw config_error("graph: unknown family '" + spec.family + "'");
}

}  // namespace percolab
