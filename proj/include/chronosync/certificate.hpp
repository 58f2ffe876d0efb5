#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chronosync/ensemble.hpp"
#include "chronosync/error.hpp"
#include "chronosync/graph.hpp"
#include "chronosync/linalg.hpp"
#include "chronosync/random.hpp"

namespace chronosync {

/**
 * Lyapunov certificate V(xi) = z^T P(tau) z with
 * P(tau) = diag(P1, P2(tau), P3) and P2(tau) = diag(w_k exp(sigma tau_k)).
 */
struct Certificate {
  double sigma = 1.0;
  Eigen::MatrixXd P1;          // (N-1)x(N-1)
  Eigen::VectorXd P2_weights;  // N
  Eigen::MatrixXd P3;          // 2N x 2N

  int size() const { return static_cast<int>(P2_weights.size()); }

  void validate() const {
    const int n = size();
    require(n >= 2, ErrorKind::CertificateMismatch, "certificate needs N >= 2 weights");
    require(P1.rows() == n - 1 && P1.cols() == n - 1, ErrorKind::CertificateMismatch, "P1 must be (N-1)x(N-1)");
    require(P3.rows() == 2 * n && P3.cols() == 2 * n, ErrorKind::CertificateMismatch, "P3 must be 2N x 2N");
    require(sigma > 0.0, ErrorKind::InvalidArgument, "sigma must be positive");
    require((P2_weights.array() > 0.0).all(), ErrorKind::InvalidArgument, "P2 weights must be positive");
    require((P1 - P1.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + P1.cwiseAbs().maxCoeff()),
            ErrorKind::InvalidArgument, "P1 must be symmetric");
    require((P3 - P3.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + P3.cwiseAbs().maxCoeff()),
            ErrorKind::InvalidArgument, "P3 must be symmetric");
    require(linalg::lambda_min(P1) > 1e-10, ErrorKind::InvalidArgument, "P1 must be positive definite");
    require(linalg::lambda_min(P3) > 1e-10, ErrorKind::InvalidArgument, "P3 must be positive definite");
  }

  Certificate scaled(double c) const {
    Certificate out = *this;
    out.P1 *= c;
    out.P2_weights *= c;
    out.P3 *= c;
    return out;
  }
};

namespace detail {

inline void check_tau(const Eigen::VectorXd& tau, const Eigen::VectorXd& T2) {
  require(tau.size() == T2.size(), ErrorKind::DimensionMismatch, "tau must have N entries");
  for (Eigen::Index p = 0; p < tau.size(); ++p) {
    if (!(tau(p) >= 0.0 && tau(p) <= T2(p))) {
      throw Error(ErrorKind::TauOutOfRange, "tau_" + std::to_string(p + 1) + " = " + std::to_string(tau(p)) +
                                                " outside [0, " + std::to_string(T2(p)) + "]");
    }
  }
}

inline void check_dims(const Certificate& cert, const FlowMatrix& fm) {
  require(cert.size() == fm.n_agents, ErrorKind::CertificateMismatch,
          "certificate is for N = " + std::to_string(cert.size()) + ", flow matrix for N = " +
              std::to_string(fm.n_agents));
}

}  // namespace detail

inline Eigen::VectorXd P2_diagonal(const Certificate& cert, const Eigen::VectorXd& tau) {
  return cert.P2_weights.array() * (cert.sigma * tau.array()).exp();
}

inline Eigen::MatrixXd P_of_tau(const Certificate& cert, const Eigen::VectorXd& tau) {
  const int n = cert.size();
  require(tau.size() == n, ErrorKind::DimensionMismatch, "tau must have N entries");
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(4 * n - 1, 4 * n - 1);
  P.block(0, 0, n - 1, n - 1) = cert.P1;
  P.block(n - 1, n - 1, n, n) = P2_diagonal(cert, tau).asDiagonal();
  P.block(2 * n - 1, 2 * n - 1, 2 * n, 2 * n) = cert.P3;
  return P;
}

/// Q(tau) = -sigma b_min diag(0, P2(tau), 0).
inline Eigen::MatrixXd Q_of_tau(const Certificate& cert, const Eigen::VectorXd& tau, double b_min) {
  const int n = cert.size();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(4 * n - 1, 4 * n - 1);
  Q.block(n - 1, n - 1, n, n) = (-cert.sigma * b_min * P2_diagonal(cert, tau)).asDiagonal();
  return Q;
}

/// M(tau) = F^T P(tau) + P(tau) F + Q(tau), symmetrized after assembly.
inline Eigen::MatrixXd M_of_tau(const Certificate& cert, const FlowMatrix& fm, const Eigen::VectorXd& tau,
                                const Eigen::VectorXd& T2, double b_min) {
  detail::check_dims(cert, fm);
  detail::check_tau(tau, T2);
  const Eigen::MatrixXd P = P_of_tau(cert, tau);
  const Eigen::MatrixXd PF = P * fm.F;
  return linalg::symmetrize(PF.transpose() + PF + Q_of_tau(cert, tau, b_min));
}

/// V = z^T P(tau) z evaluated block by block.
inline double lyapunov_value(const Certificate& cert, const Eigen::VectorXd& z, const Eigen::VectorXd& tau) {
  const int n = cert.size();
  require(z.size() == 4 * n - 1 && tau.size() == n, ErrorKind::CertificateMismatch,
          "state dimension does not match the certificate");
  const auto eta = z.head(n - 1);
  const auto vt = z.segment(n - 1, n);
  const auto est = z.tail(2 * n);
  double v = eta.dot(cert.P1 * eta);
  for (int p = 0; p < n; ++p) v += cert.P2_weights(p) * std::exp(cert.sigma * tau(p)) * vt(p) * vt(p);
  v += est.dot(cert.P3 * est);
  return v;
}

namespace detail {

inline std::vector<int> first_primes(int count) {
  std::vector<int> primes;
  for (int c = 2; static_cast<int>(primes.size()) < count; ++c) {
    bool prime = true;
    for (int p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

inline double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

}  // namespace detail

/**
 * Timer vectors at which M(tau) is evaluated: 0 and T2, box corners (all of
 * them for N <= 10, otherwise 2^10 distinct seeded ones), then grid_size
 * points of a randomly shifted Halton sequence.
 */
inline std::vector<Eigen::VectorXd> tau_sample_set(const Eigen::VectorXd& T2, int grid_size, std::uint64_t seed,
                                                   int max_corner_bits = 10) {
  const int n = static_cast<int>(T2.size());
  std::vector<Eigen::VectorXd> out;
  out.push_back(Eigen::VectorXd::Zero(n));
  out.push_back(T2);
  auto corner = [&](auto&& bit) {
    Eigen::VectorXd c(n);
    for (int p = 0; p < n; ++p) c(p) = bit(p) ? T2(p) : 0.0;
    return c;
  };
  if (n <= max_corner_bits) {
    const std::uint64_t count = std::uint64_t{1} << n;
    for (std::uint64_t mask = 1; mask + 1 < count; ++mask) {
      out.push_back(corner([&](int p) { return (mask >> p) & 1U; }));
    }
  } else {
    Rng rng = make_stream(seed, "certificate.corners");
    std::set<std::vector<char>> seen;
    seen.insert(std::vector<char>(n, 0));
    seen.insert(std::vector<char>(n, 1));
    const std::size_t target = (std::size_t{1} << max_corner_bits);
    while (seen.size() < target) {
      std::vector<char> bits(n);
      for (auto& b : bits) b = static_cast<char>(rng() >> 63);
      if (seen.insert(bits).second) out.push_back(corner([&](int p) { return bits[p] != 0; }));
    }
  }
  const std::vector<int> primes = detail::first_primes(n);
  Rng shift_rng = make_stream(seed, "certificate.halton");
  std::vector<double> shift(n);
  for (auto& s : shift) s = uniform01(shift_rng);
  for (int i = 0; i < grid_size; ++i) {
    Eigen::VectorXd tau(n);
    for (int p = 0; p < n; ++p) {
      double u = detail::radical_inverse(static_cast<std::uint64_t>(i) + 1, primes[p]) + shift[p];
      if (u >= 1.0) u -= 1.0;
      tau(p) = u * T2(p);
    }
    out.push_back(tau);
  }
  return out;
}

struct CertificateReport {
  double mu = 0.0;                  // estimate: -max lambda_max(M) over the sample set
  double alpha1 = 0.0;              // lambda_min(P(0))
  double alpha2 = 0.0;              // lambda_max(P(T2))
  double norm_P_T2 = 0.0;
  bool feasible = false;
  bool corollary_check = false;
  double corollary_lambda_max = 0.0;
  double sampled_min_margin = 0.0;  // most positive lambda_max(M(tau)) seen
  double lambda_max_at_zero = 0.0;
  int rank_F = 0;
  std::size_t samples_evaluated = 0;
  Eigen::VectorXd worst_tau;
};

inline double max_lambda_over(const Certificate& cert, const FlowMatrix& fm, const std::vector<Eigen::VectorXd>& taus,
                              const Eigen::VectorXd& T2, double b_min, Eigen::VectorXd* worst = nullptr) {
  double worst_value = -std::numeric_limits<double>::infinity();
  for (const auto& tau : taus) {
    const double lm = linalg::lambda_max(M_of_tau(cert, fm, tau, T2, b_min));
    if (lm > worst_value) {
      worst_value = lm;
      if (worst) *worst = tau;
    }
  }
  return worst_value;
}

/**
 * Checks the negative-definiteness hypothesis on a finite sample of the timer
 * box and, separately, the complement-of-range test at tau = 0. Only the
 * sampled check gates `feasible`; mu is an estimate of the supremum.
 */
inline CertificateReport certify(const Certificate& cert, const FlowMatrix& fm, const Eigen::VectorXd& T2,
                                 double b_min, int grid_size, std::uint64_t seed = 0) {
  detail::check_dims(cert, fm);
  cert.validate();
  const int n = cert.size();
  CertificateReport r;
  const auto taus = tau_sample_set(T2, grid_size, seed);
  r.samples_evaluated = taus.size();
  r.sampled_min_margin = max_lambda_over(cert, fm, taus, T2, b_min, &r.worst_tau);
  r.mu = -r.sampled_min_margin;
  r.lambda_max_at_zero = linalg::lambda_max(M_of_tau(cert, fm, Eigen::VectorXd::Zero(n), T2, b_min));
  r.alpha1 = linalg::lambda_min(P_of_tau(cert, Eigen::VectorXd::Zero(n)));
  const Eigen::MatrixXd P_T2 = P_of_tau(cert, T2);
  r.alpha2 = linalg::lambda_max(P_T2);
  r.norm_P_T2 = linalg::sym_norm(P_T2);
  r.rank_F = linalg::numerical_rank(fm.F);
  const Eigen::MatrixXd Ft = linalg::range_complement(fm.F);
  if (Ft.cols() > 0) {
    const Eigen::MatrixXd Q0 = Q_of_tau(cert, Eigen::VectorXd::Zero(n), b_min);
    r.corollary_lambda_max = linalg::lambda_max(linalg::symmetrize(Ft.transpose() * Q0 * Ft));
    r.corollary_check = r.corollary_lambda_max < 0.0;
  }
  r.feasible = r.mu > 0.0 && r.lambda_max_at_zero < 0.0;
  return r;
}

struct Gains {
  double k_u = 0.72;
  double k_a = 4.2;
  double k_theta = 3.0;
};

struct SearchOptions {
  double sigma = 35.0;
  int budget = 2000;        // objective evaluations
  std::uint64_t seed = 0;
  bool tune_sigma = true;
  int grid_size = 1000;     // verification grid
  int working_grid = 16;    // quasi-random points in the search's own sample set
  int working_corners = 48;
  double margin = 1e-6;
};

struct SearchResult {
  Certificate certificate;
  CertificateReport report;
  bool feasible = false;
  double best_margin = 0.0;  // estimated mu of the returned certificate
  int evaluations = 0;
};

/**
 * Best-effort certificate search.
 *
 * Starts from Lyapunov-equation solutions for the two Hurwitz blocks
 * (-k_u D for P1, the estimator block for P3) and uniform P2 weights, then
 * runs a coordinate search on log-scale multipliers of P1, P2, P3 and sigma.
 * The objective -max lambda_max(M)/lambda_max(P(T2)) is invariant under
 * scaling of P. Candidates that pass the small working sample are checked on
 * the full grid; any counterexample joins the working sample.
 */
inline SearchResult search_certificate(const FlowMatrix& fm, const SpectralData& sd, const Gains& gains,
                                       const Eigen::VectorXd& T2, double b_min, const SearchOptions& opt) {
  require(opt.budget > 0, ErrorKind::InvalidArgument, "search budget must be positive");
  require(opt.sigma > 0.0, ErrorKind::InvalidArgument, "sigma must be positive");
  const int n = sd.size();
  require(fm.n_agents == n && T2.size() == n, ErrorKind::DimensionMismatch, "search inputs disagree on N");

  Eigen::MatrixXd P1_base;
  if (gains.k_u > 0.0) {
    P1_base = linalg::lyapunov_solve(-gains.k_u * sd.D(), Eigen::MatrixXd::Identity(n - 1, n - 1));
  } else {
    P1_base = Eigen::MatrixXd::Identity(n - 1, n - 1);
  }
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  E.block(0, n, n, n) = -gains.k_a * Eigen::MatrixXd::Identity(n, n);
  E.block(n, 0, n, n) = Eigen::MatrixXd::Identity(n, n);
  E.block(n, n, n, n) = -gains.k_theta * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd P3_base = linalg::lyapunov_solve(E, Eigen::MatrixXd::Identity(2 * n, 2 * n));

  // log multipliers: P1, P2, P3, sigma
  std::array<double, 4> x{0.0, 0.0, 0.0, std::log(opt.sigma)};
  const double log_sigma_lo = std::log(1e-3), log_sigma_hi = std::log(1e3);
  auto make = [&](const std::array<double, 4>& v) {
    Certificate c;
    c.sigma = opt.tune_sigma ? std::exp(v[3]) : opt.sigma;
    c.P1 = std::exp(v[0]) * P1_base;
    c.P2_weights = Eigen::VectorXd::Constant(n, std::exp(v[1]));
    c.P3 = std::exp(v[2]) * P3_base;
    return c;
  };

  // Working sample: 0, T2, seeded corners, a few quasi-random points.
  std::vector<Eigen::VectorXd> working;
  {
    const auto full = tau_sample_set(T2, opt.working_grid, derive_seed(opt.seed, "search.working"), 0);
    working = full;  // 0, T2 and the Halton points
    Rng rng = make_stream(opt.seed, "search.corners");
    if (n <= 6) {
      for (int mask = 1; mask + 1 < (1 << n); ++mask) {
        Eigen::VectorXd c(n);
        for (int p = 0; p < n; ++p) c(p) = ((mask >> p) & 1) ? T2(p) : 0.0;
        working.push_back(c);
      }
    } else {
      for (int k = 0; k < opt.working_corners; ++k) {
        Eigen::VectorXd c(n);
        for (int p = 0; p < n; ++p) c(p) = (rng() >> 63) ? T2(p) : 0.0;
        working.push_back(c);
      }
    }
  }

  int evaluations = 0;
  auto objective = [&](const std::array<double, 4>& v) {
    ++evaluations;
    const Certificate c = make(v);
    const double lm = max_lambda_over(c, fm, working, T2, b_min);
    const double a2 = std::max({linalg::lambda_max(c.P1), P2_diagonal(c, T2).maxCoeff(), linalg::lambda_max(c.P3)});
    return -lm / a2;
  };

  const std::vector<int> coords = opt.tune_sigma ? std::vector<int>{0, 1, 2, 3} : std::vector<int>{0, 1, 2};
  double fx = objective(x);
  SearchResult result;
  for (int round = 0; round < 6; ++round) {
    double step = 1.0;
    while (step >= 1e-3 && evaluations < opt.budget) {
      bool improved = false;
      for (int i : coords) {
        for (double s : {step, -step}) {
          if (evaluations >= opt.budget) break;
          auto y = x;
          y[i] += s;
          if (i == 3 && (y[3] < log_sigma_lo || y[3] > log_sigma_hi)) continue;
          const double fy = objective(y);
          if (fy > fx) {
            x = y;
            fx = fy;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    result.certificate = make(x);
    result.report = certify(result.certificate, fm, T2, b_min, opt.grid_size, opt.seed);
    if (result.report.feasible || fx <= 0.0 || evaluations >= opt.budget) break;
    // Feasible on the working sample but not on the full grid.
    working.push_back(result.report.worst_tau);
    fx = objective(x);
  }
  result.evaluations = evaluations;
  result.best_margin = result.report.mu;
  result.feasible = result.report.feasible && result.report.mu > opt.margin;
  return result;
}

/// Constants of the practical exponential stability bound.
struct GpesConstants {
  double mu = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double norm_P_T2 = 0.0;
  double kappa = 0.0;
  double mu_bar = 0.0;
  double epsilon = 0.5;
  double kappa1 = 0.0;  // without the |phi(0,0)|_A factor
  double kappa2 = 0.0;
  double alpha = 0.0;
  double delta_max = 0.0;
  bool delta_max_exact = true;
  double T_min = 0.0, T_max = 0.0, b_min = 0.0, b_max = 0.0;
  int n_agents = 0;
};

/**
 * sup ||(V^T d, d, 0, d)|| over the disturbance box. The norm is convex, so
 * the supremum sits at a corner; with ||V^T d||^2 = ||d||^2 - (1^T d)^2 / N
 * every corner costs O(N). Above 20 agents the bound sqrt(3)||delta|| is
 * returned instead.
 */
inline double delta_max(const Eigen::VectorXd& delta, bool* exact = nullptr) {
  const int n = static_cast<int>(delta.size());
  const double sq = delta.squaredNorm();
  if (n > 20) {
    if (exact) *exact = false;
    return std::sqrt(3.0 * sq);
  }
  if (exact) *exact = true;
  double min_abs_sum = std::numeric_limits<double>::infinity();
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    double s = 0.0;
    for (int p = 0; p < n; ++p) s += ((mask >> p) & 1U) ? delta(p) : -delta(p);
    min_abs_sum = std::min(min_abs_sum, std::abs(s));
  }
  return std::sqrt(3.0 * sq - min_abs_sum * min_abs_sum / n);
}

inline double kappa2_value(double norm_P_T2, double alpha1, double mu_bar, double kappa, double delta_max_value) {
  return std::sqrt(norm_P_T2 / (alpha1 * mu_bar * kappa)) * delta_max_value;
}

/// epsilon that balances the two terms of the rate: mu_bar eps = mu_bar (1-eps) T_min / N.
inline double balanced_epsilon(double T_min, int n_agents) { return T_min / (n_agents + T_min); }

inline GpesConstants gpes_constants(const CertificateReport& report, const Eigen::VectorXd& T1,
                                    const Eigen::VectorXd& T2, const Eigen::VectorXd& b, const Eigen::VectorXd& delta,
                                    double epsilon, double kappa_fraction) {
  if (!report.feasible) throw Error(ErrorKind::NotFeasible, "certificate is not feasible");
  const int n = static_cast<int>(T1.size());
  require(T2.size() == n && b.size() == n && delta.size() == n, ErrorKind::DimensionMismatch,
          "timer and disturbance vectors must have N entries");
  require(epsilon > 0.0 && epsilon < 1.0, ErrorKind::InvalidArgument, "epsilon must lie in (0,1)");
  require(kappa_fraction > 0.0 && kappa_fraction < 1.0, ErrorKind::InvalidArgument,
          "kappa fraction must lie in (0,1)");
  GpesConstants g;
  g.n_agents = n;
  g.mu = report.mu;
  g.alpha1 = report.alpha1;
  g.alpha2 = report.alpha2;
  g.norm_P_T2 = report.norm_P_T2;
  g.epsilon = epsilon;
  g.T_min = T1.minCoeff();
  g.T_max = T2.maxCoeff();
  g.b_min = (b - delta).minCoeff();
  g.b_max = (b + delta).maxCoeff();
  g.kappa = kappa_fraction * g.mu / g.norm_P_T2;
  g.mu_bar = (g.mu - g.kappa * g.norm_P_T2) / g.alpha2;
  g.kappa1 = std::sqrt(g.alpha2 / g.alpha1 * std::exp(g.mu_bar * (1.0 - epsilon) * g.T_min));
  g.delta_max = delta_max(delta, &g.delta_max_exact);
  g.kappa2 = kappa2_value(g.norm_P_T2, g.alpha1, g.mu_bar, g.kappa, g.delta_max);
  g.alpha = 0.5 * std::min(g.mu_bar * epsilon, g.mu_bar * (1.0 - epsilon) * g.T_min / n);
  return g;
}

struct SyncTime {
  enum class Status { Guaranteed, AlreadyInside, NotGuaranteed };
  Status status = Status::NotGuaranteed;
  double T = std::numeric_limits<double>::quiet_NaN();

  bool defined() const { return status != Status::NotGuaranteed; }
};

/// Hybrid time t + j after which nu-approximate synchronization is guaranteed.
inline SyncTime sync_time(const GpesConstants& gc, double nu, double initial_distance) {
  require(nu > 0.0, ErrorKind::InvalidArgument, "nu must be positive");
  require(initial_distance >= 0.0, ErrorKind::InvalidArgument, "initial distance must be non-negative");
  const double r2 = std::sqrt(2.0);
  SyncTime out;
  if (nu <= r2 * gc.kappa2) return out;
  if (nu >= r2 * (gc.kappa1 * initial_distance + gc.kappa2)) {
    out.status = SyncTime::Status::AlreadyInside;
    out.T = 0.0;
    return out;
  }
  out.status = SyncTime::Status::Guaranteed;
  out.T = std::log(r2 * gc.kappa1 * initial_distance / (nu - r2 * gc.kappa2)) / gc.alpha;
  return out;
}

}  // namespace chronosync
