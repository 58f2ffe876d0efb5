#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "chronosync/analysis.hpp"
#include "chronosync/batch.hpp"
#include "chronosync/certificate.hpp"
#include "chronosync/config.hpp"
#include "chronosync/simulator.hpp"

namespace chronosync {

using nlohmann::json;

inline std::string fmt17(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void dump(const json& j, std::string& out, int indent) {
  const std::string pad(indent + 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(it.key()).dump() + ": ";
        dump(it.value(), out, indent + 2);
      }
      out += "\n" + std::string(indent, ' ') + "}";
      return;
    }
    case json::value_t::array: {
      // Numeric rows stay on one line; the matrices are small.
      bool flat = true;
      for (const auto& x : j) flat = flat && x.is_primitive();
      out += "[";
      bool first = true;
      for (const auto& x : j) {
        if (!first) out += flat ? ", " : ",";
        first = false;
        if (!flat) out += "\n" + pad;
        dump(x, out, indent + 2);
      }
      if (!flat && !j.empty()) out += "\n" + std::string(indent, ' ');
      out += "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>() + 0.0;  // no negative zeros in the output
      // JSON has no non-finite numbers; they go out as null.
      out += std::isfinite(v) ? fmt17(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// JSON text with every float at 17 significant digits.
inline std::string to_text(const json& j) {
  std::string out;
  detail::dump(j, out, 0);
  out += "\n";
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path + "'");
  out << text;
}

inline json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  require(j.is_array() && !j.empty(), ErrorKind::InvalidConfig, what + ": expected a non-empty matrix");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    require(j[r].is_array() && static_cast<Eigen::Index>(j[r].size()) == cols, ErrorKind::InvalidConfig,
            what + ": ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) {
      require(j[r][c].is_number(), ErrorKind::InvalidConfig, what + ": entries must be numbers");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

inline json certificate_json(const Certificate& c) {
  return json{{"sigma", c.sigma},
              {"P1", matrix_json(c.P1)},
              {"P2_weights", vector_json(c.P2_weights)},
              {"P3", matrix_json(c.P3)}};
}

inline Certificate certificate_from_json(const json& j) {
  require(j.is_object() && j.contains("sigma") && j.contains("P1") && j.contains("P2_weights") && j.contains("P3"),
          ErrorKind::InvalidConfig, "certificate needs sigma, P1, P2_weights and P3");
  require(j.at("sigma").is_number(), ErrorKind::InvalidConfig, "certificate.sigma: expected a number");
  Certificate c;
  c.sigma = j.at("sigma").get<double>();
  c.P1 = matrix_from_json(j.at("P1"), "certificate.P1");
  c.P3 = matrix_from_json(j.at("P3"), "certificate.P3");
  const json& w = j.at("P2_weights");
  require(w.is_array(), ErrorKind::InvalidConfig, "certificate.P2_weights: expected a list");
  c.P2_weights.resize(static_cast<Eigen::Index>(w.size()));
  for (std::size_t k = 0; k < w.size(); ++k) {
    require(w[k].is_number(), ErrorKind::InvalidConfig, "certificate.P2_weights: entries must be numbers");
    c.P2_weights(static_cast<Eigen::Index>(k)) = w[k].get<double>();
  }
  c.validate();
  return c;
}

inline json report_json(const CertificateReport& r) {
  return json{{"mu", r.mu},
              {"alpha1", r.alpha1},
              {"alpha2", r.alpha2},
              {"norm_P_T2", r.norm_P_T2},
              {"feasible", r.feasible},
              {"corollary_check", r.corollary_check},
              {"corollary_lambda_max", r.corollary_lambda_max},
              {"sampled_min_margin", r.sampled_min_margin},
              {"lambda_max_at_zero", r.lambda_max_at_zero},
              {"rank_F", r.rank_F},
              {"samples_evaluated", r.samples_evaluated}};
}

inline json constants_json(const GpesConstants& g) {
  return json{{"kappa", g.kappa},         {"mu_bar", g.mu_bar},     {"epsilon", g.epsilon},
              {"kappa1", g.kappa1},       {"kappa2", g.kappa2},     {"alpha", g.alpha},
              {"delta_max", g.delta_max}, {"delta_max_exact", g.delta_max_exact},
              {"T_min", g.T_min},         {"T_max", g.T_max},       {"b_min", g.b_min},
              {"b_max", g.b_max}};
}

inline json sync_time_json(const SyncTime& st, double nu, double d0) {
  const char* status = st.status == SyncTime::Status::Guaranteed      ? "guaranteed"
                       : st.status == SyncTime::Status::AlreadyInside ? "already_inside"
                                                                      : "not_guaranteed";
  json j{{"nu", nu}, {"initial_distance", d0}, {"status", status}};
  j["T"] = st.defined() ? json(st.T) : json(nullptr);
  return j;
}

inline json verification_json(const VerificationReport& v) {
  json j{{"lyap_jump_violations", v.lyap_jump_violations},
         {"lyap_flow_violations", v.lyap_flow_violations},
         {"envelope_ok", v.envelope_ok},
         {"envelope_violations", v.envelope_violations},
         {"max_timer_interval_violations", v.max_timer_interval_violations},
         {"domain_bound_violations", v.domain_bound_violations},
         {"domain_bound_violations_corrected", v.domain_bound_violations_corrected},
         {"v_consistency_violations", v.v_consistency_violations},
         {"jumps_checked", v.jumps_checked},
         {"flow_intervals_checked", v.flow_intervals_checked},
         {"max_jump_increase", v.max_jump_increase},
         {"worst_flow_excess", v.worst_flow_excess},
         {"worst_envelope_ratio", v.worst_envelope_ratio}};
  // Within the horizon only: the bound is confirmed up to t_end, not beyond.
  j["nu_sync_time_observed"] = v.nu_sync_time_observed ? json(*v.nu_sync_time_observed) : json(nullptr);
  return j;
}

inline json summary_json(const RunSummary& s) {
  json j{{"run", s.run},
         {"seed", s.seed},
         {"initial_dist", s.initial_dist},
         {"final_eta_norm", s.final_eta_norm},
         {"final_dist", s.final_dist},
         {"final_uniform_norm", s.final_uniform_norm},
         {"max_interval", s.max_interval},
         {"min_interval", s.min_interval},
         {"events", s.events},
         {"lyap_violations", s.lyap_violations},
         {"objectives",
          {{"rate", s.objectives.rate}, {"a_tilde", s.objectives.a_tilde}, {"theta_tilde", s.objectives.theta_tilde}}},
         {"verification", verification_json(s.verification)}};
  return j;
}

namespace detail {

inline json value_json(const ValueSpec& v) {
  if (const auto* s = std::get_if<double>(&v)) return *s;
  if (const auto* l = std::get_if<std::vector<double>>(&v)) return *l;
  if (const auto* r = std::get_if<UniformRange>(&v)) return json{{"uniform", {r->lo, r->hi}}};
  return std::get<AliasOf>(v).name;
}

}  // namespace detail

/// The configuration in the input schema; feeding it back reproduces the run.
inline json config_json(const AppConfig& app) {
  const SimConfig& s = app.sim;
  json j;
  j["seed"] = s.seed;
  if (const auto* e = std::get_if<EdgeListSpec>(&s.graph)) {
    json edges = json::array();
    for (auto [p, q] : e->edges) edges.push_back({p + 1, q + 1});
    j["graph"] = {{"kind", "edges"}, {"n_agents", e->n_agents}, {"edges", edges}};
  } else {
    const auto& g = std::get<GeneratorSpec>(s.graph);
    const char* kind = g.kind == GeneratorKind::Path       ? "path"
                       : g.kind == GeneratorKind::Ring     ? "ring"
                       : g.kind == GeneratorKind::Complete ? "complete"
                                                           : "random_connected";
    j["graph"] = {{"kind", kind}, {"n_agents", g.n_agents}, {"seed", g.seed}, {"edge_probability", g.edge_probability}};
  }
  j["params"] = {{"a", detail::value_json(s.a)},   {"delta", detail::value_json(s.delta)},
                 {"b", detail::value_json(s.b)},   {"T1", detail::value_json(s.T1)},
                 {"T2", detail::value_json(s.T2)}, {"a_star", s.a_star}};
  j["gains"] = {{"k_u", s.gains.k_u}, {"k_a", s.gains.k_a}, {"k_theta", s.gains.k_theta}};
  const auto& ic = s.initial;
  j["initial"] = {{"theta", detail::value_json(ic.theta)},
                  {"vartheta", detail::value_json(ic.vartheta)},
                  {"vartheta_hat", detail::value_json(ic.vartheta_hat)},
                  {"a_hat", detail::value_json(ic.a_hat)},
                  {"theta_hat", detail::value_json(ic.theta_hat)},
                  {"tau", detail::value_json(ic.tau)}};
  json d = std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ZeroDisturbance>) return {{"model", "zero"}};
        else if constexpr (std::is_same_v<M, ConstantDisturbance>) return {{"model", "constant"}, {"signs", m.signs}};
        else if constexpr (std::is_same_v<M, SinusoidDisturbance>)
          return {{"model", "sinusoid"}, {"amplitude", m.amplitude}, {"frequency", m.frequency}, {"phase", m.phase}};
        else return {{"model", "piecewise_random"}, {"hold", m.hold}, {"seed", m.seed}};
      },
      s.disturbance);
  d["independent"] = s.independent_disturbances;
  j["disturbance"] = d;
  j["sim"] = {{"t_end", s.t_end},
              {"h", s.h},
              {"event_tol", s.event_tol},
              {"log_stride", s.log_stride},
              {"reset", s.reset == ResetKind::Fixed ? "fixed" : "uniform"}};
  if (s.fixed_reset) j["sim"]["fixed_reset"] = *s.fixed_reset;
  const auto& so = app.certify.search;
  j["certificate"] = {{"sigma", so.sigma},         {"tune_sigma", so.tune_sigma}, {"budget", so.budget},
                      {"grid_size", so.grid_size}, {"search_seed", so.seed},      {"kappa_fraction", app.certify.kappa_fraction}};
  if (app.certify.epsilon) j["certificate"]["epsilon"] = *app.certify.epsilon;
  j["nu"] = app.certify.nu;
  return j;
}

// ---- CSV -----------------------------------------------------------------

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path, const std::string& header) : f_(std::fopen(path.c_str(), "wb")) {
    if (!f_) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path + "'");
    std::fputs(header.c_str(), f_);
    std::fputc('\n', f_);
  }
  ~CsvWriter() {
    if (f_) std::fclose(f_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& num(double v) {
    sep();
    std::fprintf(f_, "%.17g", v);
    return *this;
  }
  CsvWriter& integer(long long v) {
    sep();
    std::fprintf(f_, "%lld", v);
    return *this;
  }
  void end() {
    std::fputc('\n', f_);
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) std::fputc(',', f_);
    first_ = false;
  }
  std::FILE* f_;
  bool first_ = true;
};

inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  CsvWriter w(path, "t,j,agent,theta,vartheta,vartheta_hat,a_hat,theta_hat,tau,u,d");
  for (const auto& r : traj.samples) {
    for (int p = 0; p < traj.size(); ++p) {
      const AgentSnapshot& a = r.agents[p];
      w.num(r.t).integer(r.j).integer(p + 1).num(a.theta).num(a.vartheta).num(a.vartheta_hat).num(a.a_hat)
          .num(a.theta_hat).num(a.tau).num(a.u).num(a.d);
      w.end();
    }
  }
}

inline void write_metrics_csv(const Trajectory& traj, const std::string& path) {
  CsvWriter w(path, "t,j,eta_norm,dist_A,uniform_norm,V");
  for (const auto& r : traj.samples) {
    w.num(r.t).integer(r.j).num(r.eta_norm).num(r.dist).num(r.uniform_norm).num(r.V);
    w.end();
  }
}

inline void write_events_csv(const Trajectory& traj, const std::string& path) {
  CsvWriter w(path, "t,j,agent,broadcast_value,tau_reset");
  for (const auto& e : traj.events) {
    w.num(e.t).integer(e.j).integer(e.agent + 1).num(e.broadcast_value).num(e.tau_reset);
    w.end();
  }
}

}  // namespace chronosync
