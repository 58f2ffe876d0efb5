#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronosync/certificate.hpp"
#include "chronosync/disturbance.hpp"
#include "chronosync/error.hpp"
#include "chronosync/graph.hpp"
#include "chronosync/simulator.hpp"

namespace chronosync {

/// Certificate search and constants settings that sit next to the simulation setup.
struct CertifyOptions {
  SearchOptions search;
  std::optional<double> epsilon;  // balanced_epsilon when unset
  double kappa_fraction = 0.5;
  double nu = 0.06;
};

struct AppConfig {
  SimConfig sim;
  CertifyOptions certify;
};

/// The twelve-agent experiment: every field has a default so a seed is all that is needed.
inline AppConfig section6_config(std::uint64_t seed = 42) {
  AppConfig app;
  SimConfig& s = app.sim;
  s.graph = GeneratorSpec{GeneratorKind::RandomConnected, 12, 4, 0.3};
  s.a = UniformRange{1.0 - 1e-4, 1.0 + 1e-4};
  s.delta = 2e-5;
  s.b = 1.0;
  s.T1 = 0.05;
  s.T2 = 0.1;
  s.gains = {0.72, 4.2, 3.0};
  s.a_star = 1.0;
  s.disturbance = PiecewiseRandomDisturbance{0.01, 0};
  s.t_end = 120.0;
  s.h = 1e-3;
  s.log_stride = 10;
  s.seed = seed;
  app.certify.search.sigma = 35.0;
  app.certify.search.tune_sigma = false;
  app.certify.search.seed = 1;
  return app;
}

namespace detail {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected a table");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::InvalidConfig, (path_.empty() ? std::string("<root>") : path_) + ": " + msg);
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  Reader sub(const std::string& key) {
    seen_.insert(key);
    return Reader(j_.at(key), at(key));
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw Error(ErrorKind::InvalidConfig, at(key) + ": expected a number");
    return v.get<double>();
  }

  std::uint64_t uint(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw Error(ErrorKind::InvalidConfig, at(key) + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw Error(ErrorKind::InvalidConfig, at(key) + ": expected an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw Error(ErrorKind::InvalidConfig, at(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw Error(ErrorKind::InvalidConfig, at(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw Error(ErrorKind::InvalidConfig, at(key) + ": expected a list of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw Error(ErrorKind::InvalidConfig, at(key) + ": expected a list of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  /// Rejects keys nobody asked for, which catches typos in field names.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw Error(ErrorKind::InvalidConfig, at(it.key()) + ": unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline ValueSpec parse_value(const json& v, const std::string& path, bool allow_alias) {
  if (v.is_number()) return v.get<double>();
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw Error(ErrorKind::InvalidConfig, path + ": list entries must be numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  if (v.is_object() && v.contains("uniform")) {
    const json& r = v.at("uniform");
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number() || v.size() != 1) {
      throw Error(ErrorKind::InvalidConfig, path + ": expected {\"uniform\": [lo, hi]}");
    }
    return UniformRange{r[0].get<double>(), r[1].get<double>()};
  }
  if (allow_alias && v.is_string()) return AliasOf{v.get<std::string>()};
  throw Error(ErrorKind::InvalidConfig,
              path + ": expected a number, a list, {\"uniform\": [lo, hi]}" + (allow_alias ? " or a name" : ""));
}

inline std::vector<double> per_agent(const json& v, int n, const std::string& path) {
  if (v.is_number()) return std::vector<double>(n, v.get<double>());
  if (v.is_array() && static_cast<int>(v.size()) == n) {
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw Error(ErrorKind::InvalidConfig, path + ": list entries must be numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  throw Error(ErrorKind::InvalidConfig, path + ": expected a number or " + std::to_string(n) + " numbers");
}

inline int graph_size(const GraphSpec& g) {
  if (const auto* e = std::get_if<EdgeListSpec>(&g)) return e->n_agents;
  return std::get<GeneratorSpec>(g).n_agents;
}

inline GraphSpec parse_graph(Reader r, const GraphSpec& fallback) {
  const std::string kind = r.string("kind", "");
  GraphSpec out = fallback;
  if (kind == "edges" || (kind.empty() && r.has("edges"))) {
    EdgeListSpec e;
    e.n_agents = r.integer("n_agents", 0);
    const json& list = r.raw("edges");
    if (!list.is_array()) r.fail("edges must be a list of [p, q] pairs");
    for (const auto& pair : list) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer()) {
        throw Error(ErrorKind::InvalidConfig, r.at("edges") + ": each edge must be a pair of 1-based agent indices");
      }
      // Agents are numbered from 1 in files, from 0 in memory.
      e.edges.emplace_back(pair[0].get<int>() - 1, pair[1].get<int>() - 1);
    }
    out = e;
  } else {
    GeneratorSpec g = std::holds_alternative<GeneratorSpec>(fallback) ? std::get<GeneratorSpec>(fallback)
                                                                       : GeneratorSpec{};
    if (kind == "path") g.kind = GeneratorKind::Path;
    else if (kind == "ring") g.kind = GeneratorKind::Ring;
    else if (kind == "complete") g.kind = GeneratorKind::Complete;
    else if (kind == "random_connected") g.kind = GeneratorKind::RandomConnected;
    else if (!kind.empty()) throw Error(ErrorKind::InvalidConfig, r.at("kind") + ": unknown graph kind '" + kind + "'");
    g.n_agents = r.integer("n_agents", g.n_agents);
    g.seed = r.uint("seed", g.seed);
    g.edge_probability = r.number("edge_probability", g.edge_probability);
    out = g;
  }
  r.finish();
  if (graph_size(out) < 2) throw Error(ErrorKind::InvalidConfig, r.at("n_agents") + ": at least 2 agents required");
  return out;
}

inline DisturbanceModel parse_disturbance(Reader r, int n, const DisturbanceModel& fallback) {
  const std::string model = r.string("model", "");
  DisturbanceModel out = fallback;
  if (model == "zero") {
    out = ZeroDisturbance{};
  } else if (model == "constant") {
    out = ConstantDisturbance{per_agent(r.raw("signs"), n, r.at("signs"))};
  } else if (model == "sinusoid") {
    SinusoidDisturbance s;
    s.amplitude = per_agent(r.raw("amplitude"), n, r.at("amplitude"));
    s.frequency = r.number("frequency", 1.0);
    s.phase = r.has("phase") ? per_agent(r.raw("phase"), n, r.at("phase")) : std::vector<double>(n, 0.0);
    out = s;
  } else if (model == "piecewise_random") {
    PiecewiseRandomDisturbance m;
    m.hold = r.number("hold", 0.01);
    m.seed = r.uint("seed", 0);
    out = m;
  } else if (!model.empty()) {
    throw Error(ErrorKind::InvalidConfig, r.at("model") + ": unknown disturbance model '" + model + "'");
  }
  r.finish();
  return out;
}

}  // namespace detail

/**
 * Reads a JSON configuration on top of the twelve-agent defaults. Agents are
 * 1-based in edge lists. Unknown fields and type mismatches are rejected with
 * the dotted path of the offending field.
 */
inline AppConfig parse_config(const nlohmann::json& root, AppConfig app = section6_config()) {
  using detail::Reader;
  Reader r(root, "");
  SimConfig& s = app.sim;
  if (r.has("seed")) s.seed = r.uint("seed", s.seed);
  if (r.has("graph")) s.graph = detail::parse_graph(r.sub("graph"), s.graph);
  const int n = detail::graph_size(s.graph);
  if (r.has("params")) {
    Reader p = r.sub("params");
    if (p.has("a")) s.a = detail::parse_value(p.raw("a"), p.at("a"), false);
    if (p.has("delta")) s.delta = detail::parse_value(p.raw("delta"), p.at("delta"), false);
    if (p.has("b")) s.b = detail::parse_value(p.raw("b"), p.at("b"), false);
    if (p.has("T1")) s.T1 = detail::parse_value(p.raw("T1"), p.at("T1"), false);
    if (p.has("T2")) s.T2 = detail::parse_value(p.raw("T2"), p.at("T2"), false);
    s.a_star = p.number("a_star", s.a_star);
    p.finish();
  }
  if (r.has("gains")) {
    Reader g = r.sub("gains");
    s.gains.k_u = g.number("k_u", s.gains.k_u);
    s.gains.k_a = g.number("k_a", s.gains.k_a);
    s.gains.k_theta = g.number("k_theta", s.gains.k_theta);
    g.finish();
  }
  if (r.has("initial")) {
    Reader i = r.sub("initial");
    auto& ic = s.initial;
    for (auto [key, field] : {std::pair{"theta", &ic.theta}, {"vartheta", &ic.vartheta},
                              {"vartheta_hat", &ic.vartheta_hat}, {"a_hat", &ic.a_hat},
                              {"theta_hat", &ic.theta_hat}, {"tau", &ic.tau}}) {
      if (i.has(key)) *field = detail::parse_value(i.raw(key), i.at(key), true);
    }
    i.finish();
  }
  if (r.has("disturbance")) {
    Reader d = r.sub("disturbance");
    const bool independent = d.boolean("independent", s.independent_disturbances);
    s.disturbance = detail::parse_disturbance(std::move(d), n, s.disturbance);
    s.independent_disturbances = independent;
  }
  if (r.has("sim")) {
    Reader m = r.sub("sim");
    s.t_end = m.number("t_end", s.t_end);
    s.h = m.number("h", s.h);
    s.event_tol = m.number("event_tol", s.event_tol);
    s.log_stride = m.integer("log_stride", s.log_stride);
    const std::string reset = m.string("reset", s.reset == ResetKind::Fixed ? "fixed" : "uniform");
    if (reset == "fixed") s.reset = ResetKind::Fixed;
    else if (reset == "uniform") s.reset = ResetKind::Uniform;
    else throw Error(ErrorKind::InvalidConfig, m.at("reset") + ": expected \"uniform\" or \"fixed\"");
    if (m.has("fixed_reset")) s.fixed_reset = m.number("fixed_reset", 0.0);
    m.finish();
  }
  if (r.has("certificate")) {
    Reader c = r.sub("certificate");
    auto& so = app.certify.search;
    so.sigma = c.number("sigma", so.sigma);
    so.tune_sigma = c.boolean("tune_sigma", so.tune_sigma);
    so.budget = c.integer("budget", so.budget);
    so.grid_size = c.integer("grid_size", so.grid_size);
    so.seed = c.uint("search_seed", so.seed);
    if (c.has("epsilon")) app.certify.epsilon = c.number("epsilon", 0.5);
    app.certify.kappa_fraction = c.number("kappa_fraction", app.certify.kappa_fraction);
    c.finish();
  }
  app.certify.nu = r.number("nu", app.certify.nu);
  r.finish();

  validate_config(s);
  if (!(app.certify.nu > 0.0)) throw Error(ErrorKind::InvalidConfig, "nu: must be positive");
  if (!(app.certify.search.sigma > 0.0)) throw Error(ErrorKind::InvalidConfig, "certificate.sigma: must be positive");
  if (app.certify.search.budget <= 0) throw Error(ErrorKind::InvalidConfig, "certificate.budget: must be positive");
  if (app.certify.search.grid_size < 0) {
    throw Error(ErrorKind::InvalidConfig, "certificate.grid_size: must be non-negative");
  }
  if (!(app.certify.kappa_fraction > 0.0 && app.certify.kappa_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "certificate.kappa_fraction: must lie in (0, 1)");
  }
  if (app.certify.epsilon && !(*app.certify.epsilon > 0.0 && *app.certify.epsilon < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "certificate.epsilon: must lie in (0, 1)");
  }
  return app;
}

/// Parses text, turning syntax errors into line/column diagnostics.
inline AppConfig parse_config_text(const std::string& text, AppConfig defaults = section6_config()) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte, text.size());
    int line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < pos; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::InvalidConfig,
                "line " + std::to_string(line) + ", column " + std::to_string(col) + ": syntax error");
  }
  return parse_config(root, std::move(defaults));
}

inline AppConfig load_config(const std::string& path, AppConfig defaults = section6_config()) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str(), std::move(defaults));
  } catch (const Error& e) {
    const std::string what = e.what();
    const auto colon = what.find(": ");
    throw Error(e.kind(), path + ": " + (colon == std::string::npos ? what : what.substr(colon + 2)));
  }
}

}  // namespace chronosync
