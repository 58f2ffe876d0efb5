#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chronosync/agent.hpp"
#include "chronosync/error.hpp"
#include "chronosync/graph.hpp"

namespace chronosync {

struct HybridTime {
  double t = 0.0;
  long j = 0;
};

/// Closed-loop state in error coordinates: xi = (eta, vartheta~, a~, theta~, tau).
struct EnsembleState {
  Eigen::VectorXd eta;             // V^T vartheta, size N-1
  Eigen::VectorXd vartheta_tilde;  // vartheta - vartheta_hat
  Eigen::VectorXd a_tilde;         // a - a_hat
  Eigen::VectorXd theta_tilde;     // theta - theta_hat
  Eigen::VectorXd tau;
  HybridTime time;

  int size() const { return static_cast<int>(tau.size()); }

  /// z = (eta, vartheta~, a~, theta~), dimension 4N-1.
  Eigen::VectorXd z() const {
    const int n = size();
    Eigen::VectorXd out(4 * n - 1);
    out << eta, vartheta_tilde, a_tilde, theta_tilde;
    return out;
  }

  static EnsembleState from_z(const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::VectorXd& tau,
                              HybridTime time = {}) {
    const int n = static_cast<int>(tau.size());
    require(z.size() == 4 * n - 1, ErrorKind::DimensionMismatch,
            "z must have 4N-1 = " + std::to_string(4 * n - 1) + " entries");
    EnsembleState xi;
    xi.eta = z.head(n - 1);
    xi.vartheta_tilde = z.segment(n - 1, n);
    xi.a_tilde = z.segment(2 * n - 1, n);
    xi.theta_tilde = z.segment(3 * n - 1, n);
    xi.tau = tau;
    xi.time = time;
    return xi;
  }
};

struct FlowMatrix {
  Eigen::MatrixXd F;
  int n_agents = 0;
};

/**
 * Assembles the (4N-1)x(4N-1) closed-loop matrix in z coordinates:
 *
 *   [ -k_u D    k_u D V^T   V^T   0        ]
 *   [ -k_u V D  k_u L       I     0        ]
 *   [  0        0           0    -k_a I    ]
 *   [  0        0           I    -k_theta I]
 */
inline FlowMatrix build_F(const SpectralData& sd, double k_u, double k_a, double k_theta) {
  require(k_u >= 0.0 && k_a > 0.0 && k_theta > 0.0, ErrorKind::InvalidArgument,
          "gains must be positive (k_u may be zero)");
  const int n = sd.size();
  const int m = n - 1;
  const Eigen::MatrixXd D = sd.D();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  FlowMatrix fm;
  fm.n_agents = n;
  fm.F = Eigen::MatrixXd::Zero(4 * n - 1, 4 * n - 1);
  auto& F = fm.F;
  F.block(0, 0, m, m) = -k_u * D;
  F.block(0, m, m, n) = k_u * D * sd.V.transpose();
  F.block(0, m + n, m, n) = sd.V.transpose();
  F.block(m, 0, n, m) = -k_u * sd.V * D;
  F.block(m, m, n, n) = k_u * sd.laplacian;
  F.block(m, m + n, n, n) = I;
  F.block(m + n, m + 2 * n, n, n) = -k_a * I;
  F.block(m + 2 * n, m + n, n, n) = I;
  F.block(m + 2 * n, m + 2 * n, n, n) = -k_theta * I;
  return fm;
}

/// Disturbance in z coordinates: (V^T d_vartheta, d_vartheta, 0, d_theta).
inline Eigen::VectorXd stack_disturbance(const SpectralData& sd, const Eigen::Ref<const Eigen::VectorXd>& d_vartheta,
                                         const Eigen::Ref<const Eigen::VectorXd>& d_theta) {
  const int n = sd.size();
  require(d_vartheta.size() == n && d_theta.size() == n, ErrorKind::DimensionMismatch,
          "disturbance vectors must have N entries");
  Eigen::VectorXd out(4 * n - 1);
  out << sd.V.transpose() * d_vartheta, d_vartheta, Eigen::VectorXd::Zero(n), d_theta;
  return out;
}

inline Eigen::VectorXd stack_disturbance(const SpectralData& sd, const Eigen::Ref<const Eigen::VectorXd>& d) {
  return stack_disturbance(sd, d, d);
}

struct EnsembleDerivative {
  Eigen::VectorXd z_dot;
  Eigen::VectorXd tau_dot;
};

inline EnsembleDerivative ensemble_flow(const EnsembleState& xi, const FlowMatrix& fm, const SpectralData& sd,
                                        const Eigen::Ref<const Eigen::VectorXd>& b,
                                        const Eigen::Ref<const Eigen::VectorXd>& delta,
                                        const Eigen::Ref<const Eigen::VectorXd>& d) {
  const int n = xi.size();
  require(fm.n_agents == n && sd.size() == n && b.size() == n && delta.size() == n && d.size() == n,
          ErrorKind::DimensionMismatch, "ensemble_flow inputs disagree on N");
  for (int p = 0; p < n; ++p) {
    if (std::abs(d(p)) > delta(p)) {
      throw Error(ErrorKind::DisturbanceOutOfBound, "agent " + std::to_string(p + 1) + ": |d| exceeds delta");
    }
  }
  EnsembleDerivative out;
  out.z_dot = fm.F * xi.z() + stack_disturbance(sd, d);
  out.tau_dot = -b + d;
  return out;
}

/// Agents whose timer has expired, in ascending index order.
inline std::vector<int> jump_set_agents(const EnsembleState& xi, double tol) {
  require(tol >= 0.0, ErrorKind::InvalidArgument, "event tolerance must be non-negative");
  std::vector<int> out;
  for (int p = 0; p < xi.size(); ++p) {
    if (xi.tau(p) <= tol) out.push_back(p);
  }
  return out;
}

/**
 * One jump triggered by agent p: zeroes vartheta~_p, puts tau_p at new_tau
 * and increments j. eta, a~ and theta~ are continuous-time only.
 */
inline EnsembleState apply_jump(const EnsembleState& xi, int p, double new_tau, double T1, double T2,
                                double tol = 1e-9) {
  require(p >= 0 && p < xi.size(), ErrorKind::InvalidArgument, "agent index out of range");
  if (xi.tau(p) > tol) {
    throw Error(ErrorKind::NotInJumpSet,
                "agent " + std::to_string(p + 1) + " timer at " + std::to_string(xi.tau(p)));
  }
  require(new_tau >= T1 && new_tau <= T2, ErrorKind::InvalidArgument, "timer reset outside [T1, T2]");
  EnsembleState next = xi;
  next.vartheta_tilde(p) = 0.0;
  next.tau(p) = new_tau;
  next.time.j += 1;
  return next;
}

inline EnsembleState apply_jump(const EnsembleState& xi, int p, ResetRule& rule, const AgentParams& params,
                                double tol = 1e-9) {
  if (p >= 0 && p < xi.size() && xi.tau(p) > tol) {
    throw Error(ErrorKind::NotInJumpSet,
                "agent " + std::to_string(p + 1) + " timer at " + std::to_string(xi.tau(p)));
  }
  return apply_jump(xi, p, rule.draw(params), params.T1, params.T2, tol);
}

/// Error coordinates of one agent, without the graph-level eta.
struct TildeView {
  double vartheta_tilde = 0.0;
  double a_tilde = 0.0;
  double theta_tilde = 0.0;
  double tau = 0.0;
};

/// Maps raw agent states into error coordinates. eta is computed from the raw
/// software times; the true drifts come from the simulator, not the agents.
inline EnsembleState pack(std::span<const AgentState> agents, std::span<const double> true_drift,
                          const SpectralData& sd, HybridTime time = {}) {
  const int n = sd.size();
  require(static_cast<int>(agents.size()) == n && static_cast<int>(true_drift.size()) == n,
          ErrorKind::DimensionMismatch, "pack expects N agents and N drifts");
  Eigen::VectorXd vartheta(n);
  EnsembleState xi;
  xi.vartheta_tilde.resize(n);
  xi.a_tilde.resize(n);
  xi.theta_tilde.resize(n);
  xi.tau.resize(n);
  for (int p = 0; p < n; ++p) {
    const AgentState& s = agents[p];
    vartheta(p) = s.vartheta;
    xi.vartheta_tilde(p) = s.vartheta - s.vartheta_hat;
    xi.a_tilde(p) = true_drift[p] - s.a_hat;
    xi.theta_tilde(p) = s.theta - s.theta_hat;
    xi.tau(p) = s.tau;
  }
  xi.eta = sd.V.transpose() * vartheta;
  xi.time = time;
  return xi;
}

inline std::vector<TildeView> unpack(const EnsembleState& xi) {
  std::vector<TildeView> out(xi.size());
  for (int p = 0; p < xi.size(); ++p) {
    out[p] = {xi.vartheta_tilde(p), xi.a_tilde(p), xi.theta_tilde(p), xi.tau(p)};
  }
  return out;
}

/// Inverse of unpack given the disagreement coordinates.
inline EnsembleState pack(std::span<const TildeView> views, const Eigen::Ref<const Eigen::VectorXd>& eta,
                          HybridTime time = {}) {
  const int n = static_cast<int>(views.size());
  require(eta.size() == n - 1, ErrorKind::DimensionMismatch, "eta must have N-1 entries");
  EnsembleState xi;
  xi.eta = eta;
  xi.vartheta_tilde.resize(n);
  xi.a_tilde.resize(n);
  xi.theta_tilde.resize(n);
  xi.tau.resize(n);
  for (int p = 0; p < n; ++p) {
    xi.vartheta_tilde(p) = views[p].vartheta_tilde;
    xi.a_tilde(p) = views[p].a_tilde;
    xi.theta_tilde(p) = views[p].theta_tilde;
    xi.tau(p) = views[p].tau;
  }
  xi.time = time;
  return xi;
}

inline bool in_flow_set(const EnsembleState& xi, std::span<const double> T2) {
  for (int p = 0; p < xi.size(); ++p) {
    if (xi.tau(p) < 0.0 || xi.tau(p) > T2[p]) return false;
  }
  return true;
}

}  // namespace chronosync
