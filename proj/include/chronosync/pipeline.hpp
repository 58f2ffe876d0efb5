#pragma once

#include <optional>

#include <Eigen/Dense>

#include "chronosync/certificate.hpp"
#include "chronosync/config.hpp"
#include "chronosync/ensemble.hpp"
#include "chronosync/simulator.hpp"

namespace chronosync {

/// Timer and disturbance data of a scenario as vectors.
struct TimerData {
  Eigen::VectorXd T1, T2, b, delta;
  double b_min = 0.0;
};

inline TimerData timer_data(const Scenario& sc) {
  const int n = sc.graph.size();
  TimerData t{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n), 0.0};
  for (int p = 0; p < n; ++p) {
    t.T1(p) = sc.params[p].T1;
    t.T2(p) = sc.params[p].T2;
    t.b(p) = sc.params[p].b;
    t.delta(p) = sc.params[p].delta;
  }
  t.b_min = (t.b - t.delta).minCoeff();
  return t;
}

struct Certified {
  Scenario scenario;
  FlowMatrix flow;
  TimerData timers;
  SearchResult search;
  std::optional<GpesConstants> constants;  // set when feasible

  bool feasible() const { return search.feasible; }
};

inline GpesConstants constants_for(const CertificateReport& report, const TimerData& t, const CertifyOptions& opt) {
  const double eps = opt.epsilon.value_or(balanced_epsilon(t.T1.minCoeff(), static_cast<int>(t.T1.size())));
  return gpes_constants(report, t.T1, t.T2, t.b, t.delta, eps, opt.kappa_fraction);
}

/// Builds the scenario, searches a certificate and, if one is found, the stability constants.
inline Certified certify_config(const AppConfig& app) {
  Certified c;
  c.scenario = resolve_scenario(app.sim);
  const Gains& g = app.sim.gains;
  c.flow = build_F(c.scenario.sd, g.k_u, g.k_a, g.k_theta);
  c.timers = timer_data(c.scenario);
  c.search = search_certificate(c.flow, c.scenario.sd, g, c.timers.T2, c.timers.b_min, app.certify.search);
  if (c.search.feasible) c.constants = constants_for(c.search.report, c.timers, app.certify);
  return c;
}

/// Re-checks a given certificate against a configuration instead of searching.
inline Certified certify_given(const AppConfig& app, const Certificate& cert) {
  Certified c;
  c.scenario = resolve_scenario(app.sim);
  const Gains& g = app.sim.gains;
  c.flow = build_F(c.scenario.sd, g.k_u, g.k_a, g.k_theta);
  c.timers = timer_data(c.scenario);
  require(cert.size() == c.scenario.graph.size(), ErrorKind::CertificateMismatch,
          "certificate size does not match the number of agents");
  c.search.certificate = cert;
  c.search.report = certify(cert, c.flow, c.timers.T2, c.timers.b_min, app.certify.search.grid_size,
                            app.certify.search.seed);
  c.search.feasible = c.search.report.feasible;
  c.search.best_margin = c.search.report.mu;
  if (c.search.feasible) c.constants = constants_for(c.search.report, c.timers, app.certify);
  return c;
}

}  // namespace chronosync
