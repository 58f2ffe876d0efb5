#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "chronosync/agent.hpp"
#include "chronosync/certificate.hpp"
#include "chronosync/disturbance.hpp"
#include "chronosync/ensemble.hpp"
#include "chronosync/error.hpp"
#include "chronosync/graph.hpp"
#include "chronosync/random.hpp"

namespace chronosync {

struct UniformRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Initial value taken from another per-agent quantity: "theta", "vartheta", "a" or "a_star".
struct AliasOf {
  std::string name;
};

/// Per-agent value: a scalar broadcast to every agent, an explicit vector, a
/// seeded uniform range, or a copy of another quantity.
using ValueSpec = std::variant<double, std::vector<double>, UniformRange, AliasOf>;

struct InitialConditions {
  ValueSpec theta = UniformRange{0.0, 5.0};
  ValueSpec vartheta = UniformRange{0.0, 5.0};
  ValueSpec vartheta_hat = AliasOf{"vartheta"};
  ValueSpec a_hat = AliasOf{"a_star"};
  ValueSpec theta_hat = AliasOf{"theta"};
  ValueSpec tau = AliasOf{"uniform_window"};  // uniform in [T1_p, T2_p]
};

enum class ResetKind { Uniform, Fixed };

struct SimConfig {
  GraphSpec graph = GeneratorSpec{GeneratorKind::RandomConnected, 12, 7, 0.3};
  ValueSpec a = UniformRange{1.0 - 1e-4, 1.0 + 1e-4};
  ValueSpec delta = 2e-5;
  ValueSpec b = 1.0;
  ValueSpec T1 = 0.05;
  ValueSpec T2 = 0.1;
  Gains gains;
  double a_star = 1.0;
  InitialConditions initial;
  DisturbanceModel disturbance = PiecewiseRandomDisturbance{0.01, 0};
  bool independent_disturbances = false;
  double t_end = 120.0;
  double h = 1e-3;
  double event_tol = 1e-9;
  ResetKind reset = ResetKind::Uniform;
  std::optional<double> fixed_reset;  // defaults to T2 of each agent
  std::uint64_t seed = 42;
  int log_stride = 1;
  std::optional<Certificate> certificate;  // enables V logging
};

struct AgentSnapshot {
  double theta, vartheta, vartheta_hat, a_hat, theta_hat, tau, u, d;
};

/// One logged point of the hybrid arc.
struct Record {
  double t = 0.0;
  long j = 0;
  std::vector<AgentSnapshot> agents;
  Eigen::VectorXd z;
  Eigen::VectorXd tau;
  double V = std::numeric_limits<double>::quiet_NaN();
  double eta_norm = 0.0;
  double dist = 0.0;  // |xi|_A = ||z||
  double uniform_norm = 0.0;

  EnsembleState xi() const { return EnsembleState::from_z(z, tau, {t, j}); }
};

struct Event {
  double t = 0.0;
  long j = 0;  // jump counter after the jump
  int agent = 0;
  double broadcast_value = 0.0;
  double tau_reset = 0.0;
};

/// Everything a resolved configuration fixes before integration starts.
struct Scenario {
  Graph graph;
  SpectralData sd;
  std::vector<AgentParams> params;
  std::vector<AgentState> initial;
};

struct Trajectory {
  std::vector<Record> samples;
  std::vector<Event> events;
  Scenario scenario;
  std::uint64_t seed = 0;
  std::size_t steps = 0;

  int size() const { return scenario.graph.size(); }
};

namespace detail {

inline std::vector<double> resolve_values(const ValueSpec& spec, int n, std::uint64_t seed, const std::string& name) {
  if (const auto* s = std::get_if<double>(&spec)) return std::vector<double>(n, *s);
  if (const auto* v = std::get_if<std::vector<double>>(&spec)) {
    require(static_cast<int>(v->size()) == n, ErrorKind::InvalidConfig,
            name + ": expected " + std::to_string(n) + " values, got " + std::to_string(v->size()));
    return *v;
  }
  if (const auto* r = std::get_if<UniformRange>(&spec)) {
    require(r->lo <= r->hi, ErrorKind::InvalidConfig, name + ": uniform range needs lo <= hi");
    Rng rng = make_stream(seed, name);
    std::vector<double> out(n);
    for (auto& x : out) x = uniform(rng, r->lo, r->hi);
    return out;
  }
  throw Error(ErrorKind::InvalidConfig, name + ": alias not allowed here");
}

inline std::vector<double> resolve_initial(const ValueSpec& spec, int n, std::uint64_t seed, const std::string& name,
                                           const std::vector<AgentParams>& params, const std::vector<double>& theta,
                                           const std::vector<double>& vartheta) {
  const auto* alias = std::get_if<AliasOf>(&spec);
  if (!alias) return resolve_values(spec, n, seed, name);
  std::vector<double> out(n);
  if (alias->name == "theta" && !theta.empty()) return theta;
  if (alias->name == "vartheta" && !vartheta.empty()) return vartheta;
  if (alias->name == "a") {
    for (int p = 0; p < n; ++p) out[p] = params[p].a;
    return out;
  }
  if (alias->name == "a_star") {
    for (int p = 0; p < n; ++p) out[p] = params[p].a_star;
    return out;
  }
  if (alias->name == "uniform_window") {
    Rng rng = make_stream(seed, name);
    for (int p = 0; p < n; ++p) out[p] = uniform(rng, params[p].T1, params[p].T2);
    return out;
  }
  throw Error(ErrorKind::InvalidConfig, name + ": unknown alias '" + alias->name + "'");
}

}  // namespace detail

/// Builds the graph, draws per-agent parameters and initial conditions.
inline Scenario resolve_scenario(const SimConfig& cfg) {
  Scenario sc;
  sc.graph = build_graph(cfg.graph);
  sc.sd = spectral_basis(sc.graph);
  const int n = sc.graph.size();
  const auto seed = cfg.seed;
  const auto a = detail::resolve_values(cfg.a, n, seed, "params.a");
  const auto delta = detail::resolve_values(cfg.delta, n, seed, "params.delta");
  const auto b = detail::resolve_values(cfg.b, n, seed, "params.b");
  const auto T1 = detail::resolve_values(cfg.T1, n, seed, "params.T1");
  const auto T2 = detail::resolve_values(cfg.T2, n, seed, "params.T2");
  sc.params.resize(n);
  for (int p = 0; p < n; ++p) {
    AgentParams& ap = sc.params[p];
    ap.a = a[p];
    ap.delta = delta[p];
    ap.b = b[p];
    ap.T1 = T1[p];
    ap.T2 = T2[p];
    ap.k_a = cfg.gains.k_a;
    ap.k_theta = cfg.gains.k_theta;
    ap.k_u = cfg.gains.k_u;
    ap.a_star = cfg.a_star;
    ap.validate(p);
  }
  const auto& ic = cfg.initial;
  const auto theta = detail::resolve_initial(ic.theta, n, seed, "init.theta", sc.params, {}, {});
  const auto vartheta = detail::resolve_initial(ic.vartheta, n, seed, "init.vartheta", sc.params, theta, {});
  const auto vartheta_hat =
      detail::resolve_initial(ic.vartheta_hat, n, seed, "init.vartheta_hat", sc.params, theta, vartheta);
  const auto a_hat = detail::resolve_initial(ic.a_hat, n, seed, "init.a_hat", sc.params, theta, vartheta);
  const auto theta_hat = detail::resolve_initial(ic.theta_hat, n, seed, "init.theta_hat", sc.params, theta, vartheta);
  const auto tau = detail::resolve_initial(ic.tau, n, seed, "init.tau", sc.params, theta, vartheta);
  sc.initial.resize(n);
  for (int p = 0; p < n; ++p) {
    require(tau[p] >= sc.params[p].T1 && tau[p] <= sc.params[p].T2, ErrorKind::InvalidConfig,
            "initial timer of agent " + std::to_string(p + 1) + " must lie in [T1, T2]");
    AgentState& s = sc.initial[p];
    s.theta = theta[p];
    s.vartheta = vartheta[p];
    s.vartheta_hat = vartheta_hat[p];
    s.a_hat = a_hat[p];
    s.theta_hat = theta_hat[p];
    s.tau = tau[p];
  }
  // Every agent starts out knowing its neighbors' initial samples.
  for (int p = 0; p < n; ++p) {
    for (int q : sc.graph.neighbors(p)) sc.initial[p].neighbor_samples[q] = sc.initial[q].vartheta_hat;
  }
  return sc;
}

inline void validate_config(const SimConfig& cfg) {
  require(cfg.h > 0.0, ErrorKind::InvalidConfig, "sim.h must be positive");
  require(cfg.t_end > 0.0, ErrorKind::InvalidConfig, "sim.t_end must be positive");
  require(cfg.event_tol >= 0.0, ErrorKind::InvalidConfig, "sim.event_tol must be non-negative");
  require(cfg.log_stride >= 1, ErrorKind::InvalidConfig, "sim.log_stride must be at least 1");
}

namespace detail {

class Integrator {
 public:
  Integrator(const SimConfig& cfg, Scenario sc)
      : cfg_(cfg),
        sc_(std::move(sc)),
        n_(sc_.graph.size()),
        agents_(sc_.initial),
        source_(with_seed(cfg.disturbance, cfg.seed), deltas(sc_.params), cfg.independent_disturbances) {
    for (int p = 0; p < n_; ++p) {
      drift_.push_back(sc_.params[p].a);
      if (cfg.reset == ResetKind::Fixed) {
        resets_.push_back(ResetRule::fixed(cfg.fixed_reset.value_or(sc_.params[p].T2)));
      } else {
        resets_.push_back(ResetRule::uniform(derive_seed(cfg.seed, "reset", static_cast<std::uint64_t>(p))));
      }
    }
    if (cfg.certificate) {
      require(cfg.certificate->size() == n_, ErrorKind::CertificateMismatch,
              "certificate size does not match the number of agents");
    }
  }

  Trajectory run() {
    Trajectory traj;
    traj.seed = cfg_.seed;
    log(traj, current_disturbance());
    long jumps_at_t = 0;
    double jump_time = -1.0;
    std::size_t regular = 0;
    const double t_end = cfg_.t_end;

    while (t_ < t_end) {
      const auto dist = current_disturbance();
      double dt = std::min(cfg_.h, t_end - t_);
      bool to_end = dt == t_end - t_;
      const double bp = source_.next_breakpoint(t_);
      bool to_bp = false;
      if (bp - t_ <= dt) {
        dt = bp - t_;
        to_bp = true;
        to_end = false;
      }
      int landing = -1;
      for (int p = 0; p < n_; ++p) {
        const double rate = sc_.params[p].b - dist[p].tau;
        const double hit = agents_[p].tau / rate;
        if (hit < dt) {
          dt = hit;
          landing = p;
          to_bp = to_end = false;
        }
      }
      step(dt, dist);
      t_ = to_end ? t_end : (to_bp ? bp : t_ + dt);
      if (landing >= 0) agents_[landing].tau = 0.0;
      bool expired = false;
      for (auto& a : agents_) {
        if (a.tau <= cfg_.event_tol) {
          a.tau = 0.0;
          expired = true;
        }
      }
      check_finite();
      ++traj.steps;
      ++regular;
      if (expired || regular % static_cast<std::size_t>(cfg_.log_stride) == 0 || t_ >= t_end) {
        log(traj, current_disturbance());
      }
      if (!expired) continue;

      if (t_ != jump_time) {
        jump_time = t_;
        jumps_at_t = 0;
      }
      EnsembleState xi = pack(agents_, drift_, sc_.sd, {t_, j_});
      for (int p : jump_set_agents(xi, cfg_.event_tol)) {
        if (++jumps_at_t > 10L * n_) {
          throw Error(ErrorKind::ZenoGuard, "more than 10N jumps at t = " + std::to_string(t_));
        }
        const Expiry e = on_timer_expiry(agents_[p], sc_.params[p], resets_[p], cfg_.event_tol);
        deliver_broadcast(agents_, sc_.graph.neighbors(p), p, e.broadcast_value);
        xi = apply_jump(xi, p, e.new_tau, sc_.params[p].T1, sc_.params[p].T2, cfg_.event_tol);
        ++j_;
        traj.events.push_back({t_, j_, p, e.broadcast_value, e.new_tau});
        log(traj, current_disturbance(), &xi);
      }
    }
    traj.scenario = std::move(sc_);
    return traj;
  }

 private:
  static DisturbanceModel with_seed(DisturbanceModel model, std::uint64_t master) {
    if (auto* m = std::get_if<PiecewiseRandomDisturbance>(&model)) {
      m->seed = derive_seed(master, "disturbance", m->seed);
    }
    return model;
  }

  static std::vector<double> deltas(const std::vector<AgentParams>& params) {
    std::vector<double> out;
    for (const auto& p : params) out.push_back(p.delta);
    return out;
  }

  std::vector<AgentDisturbance> current_disturbance() const {
    std::vector<AgentDisturbance> d(n_);
    for (int p = 0; p < n_; ++p) d[p] = source_.agent(p, t_);
    return d;
  }

  // Classical RK4 on (theta, vartheta, a_hat, theta_hat) with the disturbance
  // held over the step. The coupling sum only involves differences of sample
  // states, which all move at a_star, so it is constant within the step and
  // the agents decouple. Timers and sample states are integrated exactly.
  void step(double dt, const std::vector<AgentDisturbance>& dist) {
    for (int p = 0; p < n_; ++p) {
      AgentState& s = agents_[p];
      const AgentParams& ap = sc_.params[p];
      const double coupling = controller_input(s, ap, sc_.graph.neighbors(p)) - ap.a_star + s.a_hat;
      auto rates = [&](double theta, double vartheta, double a_hat, double theta_hat) {
        scratch_.theta = theta;
        scratch_.vartheta = vartheta;
        scratch_.a_hat = a_hat;
        scratch_.theta_hat = theta_hat;
        scratch_.vartheta_hat = s.vartheta_hat;
        scratch_.tau = s.tau;
        const double u = ap.a_star - a_hat + coupling;
        return agent_flow(scratch_, ap, u, dist[p]);
      };
      const AgentRates k1 = rates(s.theta, s.vartheta, s.a_hat, s.theta_hat);
      const double h2 = 0.5 * dt;
      const AgentRates k2 = rates(s.theta + h2 * k1.theta, s.vartheta + h2 * k1.vartheta, s.a_hat + h2 * k1.a_hat,
                                  s.theta_hat + h2 * k1.theta_hat);
      const AgentRates k3 = rates(s.theta + h2 * k2.theta, s.vartheta + h2 * k2.vartheta, s.a_hat + h2 * k2.a_hat,
                                  s.theta_hat + h2 * k2.theta_hat);
      const AgentRates k4 = rates(s.theta + dt * k3.theta, s.vartheta + dt * k3.vartheta, s.a_hat + dt * k3.a_hat,
                                  s.theta_hat + dt * k3.theta_hat);
      const double w = dt / 6.0;
      s.theta += w * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta);
      s.vartheta += w * (k1.vartheta + 2.0 * k2.vartheta + 2.0 * k3.vartheta + k4.vartheta);
      s.a_hat += w * (k1.a_hat + 2.0 * k2.a_hat + 2.0 * k3.a_hat + k4.a_hat);
      s.theta_hat += w * (k1.theta_hat + 2.0 * k2.theta_hat + 2.0 * k3.theta_hat + k4.theta_hat);
      s.tau += (-ap.b + dist[p].tau) * dt;
      const double advance = ap.a_star * dt;
      s.vartheta_hat += advance;
      for (auto& [q, sample] : s.neighbor_samples) sample += advance;
    }
  }

  void check_finite() const {
    for (int p = 0; p < n_; ++p) {
      const AgentState& s = agents_[p];
      for (double v : {s.theta, s.vartheta, s.vartheta_hat, s.a_hat, s.theta_hat, s.tau}) {
        if (!std::isfinite(v) || std::abs(v) > 1e12) {
          throw Error(ErrorKind::NumericalBlowup,
                      "agent " + std::to_string(p + 1) + " state exceeded 1e12 at t = " + std::to_string(t_));
        }
      }
    }
  }

  void log(Trajectory& traj, const std::vector<AgentDisturbance>& dist, const EnsembleState* jumped = nullptr) {
    Record r;
    r.t = t_;
    r.j = j_;
    r.agents.reserve(n_);
    Eigen::VectorXd vartheta(n_);
    for (int p = 0; p < n_; ++p) {
      const AgentState& s = agents_[p];
      const double u = controller_input(s, sc_.params[p], sc_.graph.neighbors(p));
      r.agents.push_back({s.theta, s.vartheta, s.vartheta_hat, s.a_hat, s.theta_hat, s.tau, u, dist[p].vartheta});
      vartheta(p) = s.vartheta;
    }
    const EnsembleState xi = pack(agents_, drift_, sc_.sd, {t_, j_});
    if (jumped) {
      // The error-coordinate jump map and the agent-level reset must agree.
      const bool same = jumped->z() == xi.z() && jumped->tau == xi.tau;
      require(same, ErrorKind::InvalidArgument, "jump map disagrees with agent-level reset");
    }
    r.z = xi.z();
    r.tau = xi.tau;
    r.eta_norm = xi.eta.norm();
    r.dist = r.z.norm();
    r.uniform_norm = uniform_norm(sc_.sd.edges, vartheta);
    if (cfg_.certificate) r.V = lyapunov_value(*cfg_.certificate, r.z, r.tau);
    traj.samples.push_back(std::move(r));
  }

  const SimConfig& cfg_;
  Scenario sc_;
  int n_;
  std::vector<AgentState> agents_;
  std::vector<double> drift_;
  std::vector<ResetRule> resets_;
  DisturbanceSource source_;
  AgentState scratch_;
  double t_ = 0.0;
  long j_ = 0;
};

}  // namespace detail

/**
 * Integrates the closed loop over [0, t_end]: fixed-step RK4 between events,
 * steps shortened to land exactly on timer expiries and on switching times of
 * piecewise-constant disturbances, expiries processed one agent at a time in
 * ascending index order. Logged: the initial state, every log_stride-th step,
 * every step ending on an expiry, every jump and the final state.
 */
inline Trajectory simulate(const SimConfig& cfg) {
  validate_config(cfg);
  detail::Integrator integrator(cfg, resolve_scenario(cfg));
  return integrator.run();
}

}  // namespace chronosync
