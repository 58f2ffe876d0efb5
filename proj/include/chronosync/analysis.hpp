#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "chronosync/certificate.hpp"
#include "chronosync/ensemble.hpp"
#include "chronosync/error.hpp"
#include "chronosync/simulator.hpp"

namespace chronosync {

/// |xi|_A. The attractor is {0} x T, so the distance is the norm of z alone.
inline double distance_to_attractor(const EnsembleState& xi) { return xi.z().norm(); }

struct VerificationReport {
  long lyap_jump_violations = 0;
  long lyap_flow_violations = 0;
  bool envelope_ok = true;
  long envelope_violations = 0;
  std::optional<double> nu_sync_time_observed;  // in t + j
  long max_timer_interval_violations = 0;
  long domain_bound_violations = 0;            // bounds exactly as stated
  long domain_bound_violations_corrected = 0;  // upper bound (j/N + 1) T_max / b_min
  long v_consistency_violations = 0;

  long jumps_checked = 0;
  long flow_intervals_checked = 0;
  double max_jump_increase = -std::numeric_limits<double>::infinity();
  double worst_flow_excess = -std::numeric_limits<double>::infinity();  // V1 - bound, max over intervals
  double worst_envelope_ratio = 0.0;                                     // |xi|^2 / bound

  // The stated upper domain bound fails before the first expiry of every
  // run, so the corrected count is the one that gates a verification.
  long total_violations() const {
    return lyap_jump_violations + lyap_flow_violations + envelope_violations + max_timer_interval_violations +
           domain_bound_violations_corrected + v_consistency_violations;
  }
};

/// Right-hand side of the squared practical-stability envelope at hybrid time t + j.
inline double envelope_bound_sq(const GpesConstants& gc, double d0, double t, long j) {
  const double k1 = gc.kappa1 * d0;
  return k1 * k1 * std::exp(-2.0 * gc.alpha * (t + static_cast<double>(j))) + gc.kappa2 * gc.kappa2;
}

/**
 * Checks V along the logged arc: non-increase across every jump, the
 * integrated decay inequality across every pair of consecutive records on
 * the same flow interval, and the global envelope at every record.
 */
inline void lyapunov_monitor(const Trajectory& traj, const Certificate& cert, const GpesConstants& gc,
                             VerificationReport& rep) {
  require(cert.size() == traj.size(), ErrorKind::CertificateMismatch,
          "certificate has " + std::to_string(cert.size()) + " agents, trajectory has " +
              std::to_string(traj.size()));
  const auto& s = traj.samples;
  if (s.empty()) return;
  std::vector<double> V(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    V[k] = lyapunov_value(cert, s[k].z, s[k].tau);
    if (!std::isnan(s[k].V) && std::abs(V[k] - s[k].V) > 1e-12 * std::max(1.0, std::abs(V[k]))) {
      ++rep.v_consistency_violations;
    }
  }
  const double floor = gc.norm_P_T2 * gc.delta_max * gc.delta_max / (gc.mu_bar * gc.kappa);
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (s[k].j != s[k - 1].j) {
      ++rep.jumps_checked;
      const double dv = V[k] - V[k - 1];
      rep.max_jump_increase = std::max(rep.max_jump_increase, dv);
      if (dv > 1e-12) ++rep.lyap_jump_violations;
    } else if (s[k].t > s[k - 1].t) {
      ++rep.flow_intervals_checked;
      const double dt = s[k].t - s[k - 1].t;
      const double bound = V[k - 1] * std::exp(-gc.mu_bar * dt) + floor + 1e-9 * (1.0 + V[k - 1]);
      rep.worst_flow_excess = std::max(rep.worst_flow_excess, V[k] - bound);
      if (V[k] > bound) ++rep.lyap_flow_violations;
    }
  }
  const double d0 = s.front().dist;
  for (const auto& r : s) {
    const double bound = envelope_bound_sq(gc, d0, r.t, r.j);
    const double lhs = r.dist * r.dist;
    if (bound > 0.0) rep.worst_envelope_ratio = std::max(rep.worst_envelope_ratio, lhs / bound);
    if (lhs > bound * (1.0 + 1e-12) + 1e-300) ++rep.envelope_violations;
  }
  rep.envelope_ok = rep.envelope_violations == 0;
}

inline VerificationReport lyapunov_monitor(const Trajectory& traj, const Certificate& cert, const GpesConstants& gc) {
  VerificationReport rep;
  lyapunov_monitor(traj, cert, gc, rep);
  return rep;
}

/// Time between consecutive broadcasts of each agent.
inline std::vector<std::vector<double>> inter_event_intervals(const Trajectory& traj) {
  std::vector<std::vector<double>> out(traj.size());
  std::vector<double> last(traj.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& e : traj.events) {
    if (!std::isnan(last[e.agent])) out[e.agent].push_back(e.t - last[e.agent]);
    last[e.agent] = e.t;
  }
  return out;
}

/// Counts inter-event intervals outside [T1/(b+delta), T2/(b-delta)], up to tol.
inline long timer_interval_violations(const Trajectory& traj, double tol = 1e-9) {
  const auto intervals = inter_event_intervals(traj);
  long bad = 0;
  for (int p = 0; p < traj.size(); ++p) {
    const AgentParams& ap = traj.scenario.params[p];
    const double lo = ap.T1 / ap.b_max();
    const double hi = ap.T2 / ap.b_min();
    for (double dt : intervals[p]) {
      if (dt < lo - tol || dt > hi + tol) ++bad;
    }
  }
  return bad;
}

struct DomainBounds {
  double T_min, T_max, b_min, b_max;
  int n;

  double lower(long j) const { return (static_cast<double>(j) / n - 1.0) * T_min / b_max; }
  double upper_stated(long j) const { return static_cast<double>(j) * T_max / (n * b_min); }
  // Before its first expiry an agent has not jumped yet, so the count of
  // jumps only guarantees N per T_max / b_min after the first window.
  double upper_corrected(long j) const { return (static_cast<double>(j) / n + 1.0) * T_max / b_min; }
};

inline DomainBounds domain_bounds(const Scenario& sc) {
  DomainBounds d{std::numeric_limits<double>::infinity(), 0.0, std::numeric_limits<double>::infinity(), 0.0,
                 sc.graph.size()};
  for (const auto& p : sc.params) {
    d.T_min = std::min(d.T_min, p.T1);
    d.T_max = std::max(d.T_max, p.T2);
    d.b_min = std::min(d.b_min, p.b_min());
    d.b_max = std::max(d.b_max, p.b_max());
  }
  return d;
}

/// Violations of (j/N - 1) T_min / b_max <= t <= upper(j) at every record.
inline long domain_bound_violations(const Trajectory& traj, bool corrected, double tol = 1e-9) {
  const DomainBounds d = domain_bounds(traj.scenario);
  long bad = 0;
  for (const auto& r : traj.samples) {
    const double hi = corrected ? d.upper_corrected(r.j) : d.upper_stated(r.j);
    if (r.t < d.lower(r.j) - tol || r.t > hi + tol) ++bad;
  }
  return bad;
}

/// Smallest logged t + j after which the uniform norm stays within nu up to the horizon.
inline std::optional<double> nu_sync_detect(const Trajectory& traj, double nu) {
  require(nu > 0.0, ErrorKind::InvalidArgument, "nu must be positive");
  const auto& s = traj.samples;
  std::size_t k = s.size();
  while (k > 0 && s[k - 1].uniform_norm <= nu) --k;
  if (k == s.size()) return std::nullopt;
  return s[k].t + static_cast<double>(s[k].j);
}

/// Least-squares slope of log(value) against t over the points with value > threshold.
inline double envelope_fit(const std::vector<double>& t, const std::vector<double>& value, double threshold) {
  require(t.size() == value.size(), ErrorKind::DimensionMismatch, "envelope_fit needs matching series");
  double n = 0.0, st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!(value[k] > threshold) || value[k] <= 0.0) continue;
    const double y = std::log(value[k]);
    n += 1.0;
    st += t[k];
    sy += y;
    stt += t[k] * t[k];
    sty += t[k] * y;
  }
  if (n < 10.0) throw Error(ErrorKind::InsufficientTransient, "fewer than 10 samples above the fit threshold");
  const double denom = n * stt - st * st;
  if (denom <= 0.0) throw Error(ErrorKind::InsufficientTransient, "fit samples share a single time");
  return (n * sty - st * sy) / denom;
}

/// Exponential rate of |xi|_A over the samples above 10 kappa2.
inline double envelope_fit(const Trajectory& traj, double kappa2) {
  std::vector<double> t, v;
  t.reserve(traj.samples.size());
  v.reserve(traj.samples.size());
  for (const auto& r : traj.samples) {
    t.push_back(r.t);
    v.push_back(r.dist);
  }
  return envelope_fit(t, v, 10.0 * kappa2);
}

/// Worst deviations from the three control objectives over records with t >= from.
struct ObjectiveErrors {
  double rate = 0.0;     // max |d vartheta/dt - a_star|
  double a_tilde = 0.0;  // max |a - a_hat|
  double theta_tilde = 0.0;
};

inline ObjectiveErrors objective_errors(const Trajectory& traj, double from) {
  ObjectiveErrors out;
  const auto& params = traj.scenario.params;
  for (const auto& r : traj.samples) {
    if (r.t < from) continue;
    for (int p = 0; p < traj.size(); ++p) {
      const AgentSnapshot& a = r.agents[p];
      const double rate = params[p].a + a.d + a.u;
      out.rate = std::max(out.rate, std::abs(rate - params[p].a_star));
      out.a_tilde = std::max(out.a_tilde, std::abs(params[p].a - a.a_hat));
      out.theta_tilde = std::max(out.theta_tilde, std::abs(a.theta - a.theta_hat));
    }
  }
  return out;
}

/**
 * Full post-hoc check of one trajectory. Without a certificate only the
 * timing, domain and synchronization checks run.
 */
inline VerificationReport verify(const Trajectory& traj, const Certificate* cert, const GpesConstants* gc,
                                 double nu) {
  VerificationReport rep;
  if (cert && gc) lyapunov_monitor(traj, *cert, *gc, rep);
  rep.max_timer_interval_violations = timer_interval_violations(traj);
  rep.domain_bound_violations = domain_bound_violations(traj, false);
  rep.domain_bound_violations_corrected = domain_bound_violations(traj, true);
  rep.nu_sync_time_observed = nu_sync_detect(traj, nu);
  return rep;
}

}  // namespace chronosync
