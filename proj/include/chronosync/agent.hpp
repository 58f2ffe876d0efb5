#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <variant>

#include "chronosync/error.hpp"
#include "chronosync/random.hpp"

namespace chronosync {

/// Per-agent constants. Drifts are in seconds per second, timer window in seconds.
struct AgentParams {
  double a = 1.0;        // true hardware drift, unknown to the controller
  double delta = 0.0;    // disturbance bound
  double b = 1.0;        // timer drift
  double T1 = 0.05;
  double T2 = 0.1;
  double k_a = 4.2;
  double k_theta = 3.0;
  double k_u = 0.72;
  double a_star = 1.0;

  double b_max() const { return b + delta; }
  double b_min() const { return b - delta; }

  /// k_u = 0 is accepted: it decouples the agents but the model stays well defined.
  void validate(int index = -1) const {
    const std::string who = index >= 0 ? "agent " + std::to_string(index + 1) + ": " : "";
    require(a > 0.0, ErrorKind::InvalidArgument, who + "drift a must be positive");
    require(delta >= 0.0 && delta < a, ErrorKind::InvalidArgument, who + "delta must lie in [0, a)");
    require(b > delta, ErrorKind::InvalidArgument, who + "timer drift b must exceed delta");
    require(T1 > 0.0 && T1 <= T2, ErrorKind::InvalidArgument, who + "timer window needs 0 < T1 <= T2");
    require(k_a > 0.0 && k_theta > 0.0, ErrorKind::InvalidArgument, who + "estimator gains must be positive");
    require(k_u >= 0.0, ErrorKind::InvalidArgument, who + "coupling gain k_u must be non-negative");
    require(a_star > 0.0, ErrorKind::InvalidArgument, who + "desired drift a_star must be positive");
  }
};

/**
 * What one deployed agent holds: its clocks, estimator, timer and the latest
 * broadcast sample received from each neighbor.
 *
 * Received samples are propagated at the common rate a_star between
 * broadcasts, which is exactly how the sender's own sample state evolves.
 */
struct AgentState {
  double theta = 0.0;         // hardware time
  double vartheta = 0.0;      // software time
  double vartheta_hat = 0.0;  // last broadcast value, propagated at a_star
  double a_hat = 1.0;
  double theta_hat = 0.0;
  double tau = 0.0;
  std::map<int, double> neighbor_samples;
};

/// Time derivatives of the six continuous agent variables.
struct AgentRates {
  double theta = 0.0;
  double vartheta = 0.0;
  double vartheta_hat = 0.0;
  double a_hat = 0.0;
  double theta_hat = 0.0;
  double tau = 0.0;
};

/// Disturbance realization for one agent. The default model shares one scalar
/// between the hardware clock, software clock and timer.
struct AgentDisturbance {
  double theta = 0.0;
  double vartheta = 0.0;
  double tau = 0.0;

  static AgentDisturbance shared(double d) { return {d, d, d}; }
};

inline double controller_input(const AgentState& st, const AgentParams& params,
                               std::span<const int> neighbors) {
  double coupling = 0.0;
  for (int q : neighbors) {
    const auto it = st.neighbor_samples.find(q);
    if (it == st.neighbor_samples.end()) {
      throw Error(ErrorKind::MissingNeighborSample,
                  "no sample from neighbor " + std::to_string(q + 1));
    }
    coupling += it->second - st.vartheta_hat;
  }
  return params.a_star - st.a_hat + params.k_u * coupling;
}

inline AgentRates agent_flow(const AgentState& st, const AgentParams& params, double u,
                             const AgentDisturbance& d) {
  for (double v : {d.theta, d.vartheta, d.tau}) {
    if (std::abs(v) > params.delta) {
      throw Error(ErrorKind::DisturbanceOutOfBound,
                  "|d| = " + std::to_string(std::abs(v)) + " exceeds delta = " + std::to_string(params.delta));
    }
  }
  const double innovation = st.theta - st.theta_hat;
  AgentRates r;
  r.theta = params.a + d.theta;
  r.vartheta = params.a + d.vartheta + u;
  r.vartheta_hat = params.a_star;
  r.a_hat = params.k_a * innovation;
  r.theta_hat = st.a_hat + params.k_theta * innovation;
  r.tau = -params.b + d.tau;
  return r;
}

inline AgentRates agent_flow(const AgentState& st, const AgentParams& params, double u, double d) {
  return agent_flow(st, params, u, AgentDisturbance::shared(d));
}

struct FixedReset {
  double value = 0.0;
};

struct UniformReset {
  Rng rng;
};

/// Timer reset policy: always the same value (periodic broadcasting) or a
/// seeded uniform draw from [T1, T2].
class ResetRule {
 public:
  static ResetRule fixed(double value) { return ResetRule(FixedReset{value}); }
  static ResetRule uniform(std::uint64_t seed) { return ResetRule(UniformReset{Rng(seed)}); }

  double draw(const AgentParams& params) {
    if (auto* f = std::get_if<FixedReset>(&rule_)) {
      require(f->value >= params.T1 && f->value <= params.T2, ErrorKind::InvalidArgument,
              "fixed timer reset " + std::to_string(f->value) + " outside [T1, T2]");
      return f->value;
    }
    return chronosync::uniform(std::get<UniformReset>(rule_).rng, params.T1, params.T2);
  }

  bool is_fixed() const { return std::holds_alternative<FixedReset>(rule_); }

 private:
  explicit ResetRule(std::variant<FixedReset, UniformReset> r) : rule_(std::move(r)) {}
  std::variant<FixedReset, UniformReset> rule_;
};

struct Expiry {
  double new_tau = 0.0;
  double broadcast_value = 0.0;
};

/**
 * Timer expiry: samples the software clock into vartheta_hat, redraws the
 * timer and returns the value to push to every neighbor. Delivery is
 * instantaneous; see deliver_broadcast.
 */
inline Expiry on_timer_expiry(AgentState& st, const AgentParams& params, ResetRule& rule,
                              double tolerance = 1e-9) {
  if (st.tau > tolerance) {
    throw Error(ErrorKind::NotExpired, "timer still at " + std::to_string(st.tau));
  }
  Expiry e;
  e.broadcast_value = st.vartheta;
  e.new_tau = rule.draw(params);
  st.vartheta_hat = st.vartheta;
  st.tau = e.new_tau;
  return e;
}

template <typename States>
void deliver_broadcast(States& states, std::span<const int> neighbors, int sender, double value) {
  for (int q : neighbors) states[q].neighbor_samples[sender] = value;
}

}  // namespace chronosync
