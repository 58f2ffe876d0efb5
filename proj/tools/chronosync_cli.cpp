// Command-line front end: certify, simulate, verify, reproduce, batch.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chronosync/chronosync.hpp"

namespace fs = std::filesystem;
using namespace chronosync;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kConfig = 1, kInfeasible = 2, kNumerical = 3, kViolations = 4 };

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::string certificate;
  int runs = 20;
  unsigned threads = 1;
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::NumericalBlowup:
    case ErrorKind::ZenoGuard:
      return kNumerical;
    case ErrorKind::NotFeasible:
      return kInfeasible;
    default:
      return kConfig;
  }
}

AppConfig load(const Common& c) {
  AppConfig app = c.config.empty() ? section6_config() : load_config(c.config);
  if (c.seed) app.sim.seed = *c.seed;
  return app;
}

fs::path prepare_out(const Common& c) {
  fs::path out(c.out);
  fs::create_directories(out);
  return out;
}

Certified obtain_certificate(const AppConfig& app, const Common& c) {
  if (c.certificate.empty()) return certify_config(app);
  std::ifstream in(c.certificate);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open certificate file '" + c.certificate + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error&) {
    throw Error(ErrorKind::InvalidConfig, c.certificate + ": not valid JSON");
  }
  return certify_given(app, certificate_from_json(j.contains("certificate") ? j.at("certificate") : j));
}

/// |xi(0,0)|_A for the configured initial condition.
double initial_distance(const Scenario& sc) {
  std::vector<double> drift;
  for (const auto& p : sc.params) drift.push_back(p.a);
  return distance_to_attractor(pack(sc.initial, drift, sc.sd));
}

json certify_report(const Certified& c, const AppConfig& app) {
  json j;
  j["report"] = report_json(c.search.report);
  j["feasible"] = c.feasible();
  j["search"] = {{"evaluations", c.search.evaluations}, {"best_margin", c.search.best_margin}};
  j["lambda2"] = c.scenario.sd.fiedler;
  j["n_agents"] = c.scenario.graph.size();
  if (c.constants) {
    const double d0 = initial_distance(c.scenario);
    j["constants"] = constants_json(*c.constants);
    j["sync_time"] = sync_time_json(sync_time(*c.constants, app.certify.nu, d0), app.certify.nu, d0);
  }
  j["certificate"] = certificate_json(c.search.certificate);
  return j;
}

void print_certify(const Certified& c) {
  const auto& r = c.search.report;
  std::printf("certificate: %s  mu=%.6g alpha1=%.6g alpha2=%.6g |P(T2)|=%.6g corollary=%s (%zu tau samples)\n",
              c.feasible() ? "feasible" : "infeasible", r.mu, r.alpha1, r.alpha2, r.norm_P_T2,
              r.corollary_check ? "pass" : "fail", r.samples_evaluated);
  if (c.constants) {
    const auto& g = *c.constants;
    std::printf("constants: kappa=%.6g mu_bar=%.6g kappa1=%.6g kappa2=%.6g alpha=%.6g delta_max=%.6g\n", g.kappa,
                g.mu_bar, g.kappa1, g.kappa2, g.alpha, g.delta_max);
  }
}

void print_verification(const VerificationReport& v) {
  std::printf("verification: V jumps %ld/%ld bad, V flows %ld/%ld bad, envelope %ld bad, timer intervals %ld bad\n",
              v.lyap_jump_violations, v.jumps_checked, v.lyap_flow_violations, v.flow_intervals_checked,
              v.envelope_violations, v.max_timer_interval_violations);
  std::printf("domain bound: %ld records outside as stated, %ld outside the corrected upper bound\n",
              v.domain_bound_violations, v.domain_bound_violations_corrected);
  if (v.nu_sync_time_observed) {
    std::printf("nu-sync observed from t+j = %.6g (held to the end of the horizon)\n", *v.nu_sync_time_observed);
  } else {
    std::printf("nu-sync not reached within the horizon\n");
  }
}

json manifest(const AppConfig& app, const Scenario& sc, const std::vector<std::string>& files, double seconds) {
  json seeds{{"master", app.sim.seed},
             {"run_disturbance", derive_seed(app.sim.seed, "disturbance", 0)},
             {"certificate_search", app.certify.search.seed}};
  if (const auto* g = std::get_if<GeneratorSpec>(&app.sim.graph)) seeds["graph"] = g->seed;
  json edges = json::array();
  for (auto [p, q] : sc.graph.edges()) edges.push_back({p + 1, q + 1});
  return json{{"tool", "chronosync"},         {"version", kVersion}, {"config", config_json(app)},
              {"seeds", seeds},               {"graph_edges", edges}, {"files", files},
              {"wall_clock_seconds", seconds}};
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_certify(const Common& c) {
  const AppConfig app = load(c);
  const fs::path out = prepare_out(c);
  const Certified cert = obtain_certificate(app, c);
  write_text((out / "certificate.json").string(), to_text(certify_report(cert, app)));
  print_certify(cert);
  return cert.feasible() ? kOk : kInfeasible;
}

int cmd_simulate(const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  AppConfig app = load(c);
  const fs::path out = prepare_out(c);
  if (!c.certificate.empty()) {
    const Certified cert = obtain_certificate(app, c);
    app.sim.certificate = cert.search.certificate;
  }
  const Trajectory traj = simulate(app.sim);
  write_trajectory_csv(traj, (out / "trajectory.csv").string());
  write_metrics_csv(traj, (out / "metrics.csv").string());
  write_events_csv(traj, (out / "events.csv").string());
  const std::vector<std::string> files{"trajectory.csv", "metrics.csv", "events.csv", "manifest.json"};
  write_text((out / "manifest.json").string(), to_text(manifest(app, traj.scenario, files, elapsed(t0))));
  const Record& last = traj.samples.back();
  std::printf("simulated %zu steps, %zu jumps; final |eta|=%.3g dist_A=%.3g uniform=%.3g\n", traj.steps,
              traj.events.size(), last.eta_norm, last.dist, last.uniform_norm);
  return kOk;
}

int cmd_verify(const Common& c) {
  AppConfig app = load(c);
  const fs::path out = prepare_out(c);
  const Certified cert = obtain_certificate(app, c);
  print_certify(cert);
  if (!cert.feasible()) return kInfeasible;
  app.sim.certificate = cert.search.certificate;
  const Trajectory traj = simulate(app.sim);
  const VerificationReport v = verify(traj, &cert.search.certificate, &*cert.constants, app.certify.nu);
  json j = certify_report(cert, app);
  j["verification"] = verification_json(v);
  write_text((out / "verification.json").string(), to_text(j));
  print_verification(v);
  return v.total_violations() == 0 ? kOk : kViolations;
}

// Wide per-agent series, one row per logged record.
template <typename F>
void write_series(const Trajectory& traj, const fs::path& path, const std::string& prefix, F value,
                  double from = -1.0, double to = std::numeric_limits<double>::infinity()) {
  std::string header = "t,j";
  for (int p = 1; p <= traj.size(); ++p) header += "," + prefix + "_" + std::to_string(p);
  CsvWriter w(path.string(), header);
  for (const auto& r : traj.samples) {
    if (r.t < from || r.t > to) continue;
    w.num(r.t).integer(r.j);
    for (int p = 0; p < traj.size(); ++p) w.num(value(r, p));
    w.end();
  }
}

int cmd_reproduce(const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  AppConfig app = load(c);
  // Half a second past the usual horizon so the last timer window can be shown.
  if (c.config.empty()) app.sim.t_end = 120.5;
  const fs::path out = prepare_out(c);

  const Certified cert = obtain_certificate(app, c);
  print_certify(cert);
  if (!cert.feasible()) return kInfeasible;
  app.sim.certificate = cert.search.certificate;
  const Trajectory traj = simulate(app.sim);
  const VerificationReport v = verify(traj, &cert.search.certificate, &*cert.constants, app.certify.nu);
  print_verification(v);

  const auto& params = traj.scenario.params;
  write_series(traj, out / "fig1_software_times.csv", "vartheta",
               [](const Record& r, int p) { return r.agents[p].vartheta; });
  write_series(traj, out / "fig2_drifts.csv", "rate",
               [&](const Record& r, int p) { return params[p].a + r.agents[p].d + r.agents[p].u; });
  write_series(traj, out / "fig3_a_tilde.csv", "a_tilde",
               [&](const Record& r, int p) { return params[p].a - r.agents[p].a_hat; });
  write_series(traj, out / "fig4_theta_tilde.csv", "theta_tilde",
               [](const Record& r, int p) { return r.agents[p].theta - r.agents[p].theta_hat; });
  {
    CsvWriter w((out / "fig5_disagreement.csv").string(), "t,j,eta_norm,dist_A,uniform_norm,nu");
    for (const auto& r : traj.samples) {
      w.num(r.t).integer(r.j).num(r.eta_norm).num(r.dist).num(r.uniform_norm).num(app.certify.nu);
      w.end();
    }
  }
  write_series(traj, out / "fig6_timers.csv", "tau", [](const Record& r, int p) { return r.agents[p].tau; }, 120.0,
               120.5);
  write_trajectory_csv(traj, (out / "trajectory.csv").string());
  write_metrics_csv(traj, (out / "metrics.csv").string());
  write_events_csv(traj, (out / "events.csv").string());
  write_text((out / "certificate.json").string(), to_text(certify_report(cert, app)));
  json vj = verification_json(v);
  const ObjectiveErrors obj = objective_errors(traj, 0.5 * traj.samples.back().t);
  vj["objectives_second_half"] = {{"rate", obj.rate}, {"a_tilde", obj.a_tilde}, {"theta_tilde", obj.theta_tilde}};
  vj["final_eta_norm"] = traj.samples.back().eta_norm;
  vj["final_dist_A"] = traj.samples.back().dist;
  write_text((out / "verification.json").string(), to_text(vj));

  const std::vector<std::string> files{
      "fig1_software_times.csv", "fig2_drifts.csv", "fig3_a_tilde.csv", "fig4_theta_tilde.csv",
      "fig5_disagreement.csv",   "fig6_timers.csv", "trajectory.csv",   "metrics.csv",
      "events.csv",              "certificate.json", "verification.json", "manifest.json"};
  write_text((out / "manifest.json").string(), to_text(manifest(app, traj.scenario, files, elapsed(t0))));
  std::printf("final |eta|=%.3g dist_A=%.3g; second half: |rate-1|<=%.3g |a~|<=%.3g |theta~|<=%.3g\n",
              traj.samples.back().eta_norm, traj.samples.back().dist, obj.rate, obj.a_tilde, obj.theta_tilde);
  return v.total_violations() == 0 ? kOk : kViolations;
}

int cmd_batch(const Common& c) {
  const AppConfig app = load(c);
  const fs::path out = prepare_out(c);
  const Certified cert = obtain_certificate(app, c);
  print_certify(cert);
  BatchOptions opt;
  opt.runs = c.runs;
  opt.threads = c.threads;
  opt.nu = app.certify.nu;
  if (cert.feasible()) {
    opt.certificate = &cert.search.certificate;
    opt.constants = &*cert.constants;
  }
  const auto summaries = run_batch(app.sim, opt);
  json runs = json::array();
  long violations = 0;
  for (const auto& s : summaries) {
    runs.push_back(summary_json(s));
    violations += s.verification.total_violations();
    std::printf("run %2d seed %llu: final |eta|=%.3g dist_A=%.3g lyap violations %ld\n", s.run,
                static_cast<unsigned long long>(s.seed), s.final_eta_norm, s.final_dist, s.lyap_violations);
  }
  write_text((out / "batch.json").string(),
             to_text(json{{"config", config_json(app)}, {"feasible", cert.feasible()}, {"runs", runs}}));
  if (!cert.feasible()) return kInfeasible;
  return violations == 0 ? kOk : kViolations;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Clock synchronization hybrid simulator and Lyapunov certificate engine"};
  cli.set_version_flag("--version", kVersion);
  cli.require_subcommand(1);
  Common c;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool runs) {
    sub->add_option("--config", c.config, "JSON configuration (defaults to the twelve-agent scenario)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", seed, "master seed")->each([&](const std::string&) { c.seed = seed; });
    sub->add_option("--certificate", c.certificate, "use this certificate instead of searching");
    if (runs) {
      sub->add_option("--runs", c.runs, "number of runs")->check(CLI::PositiveNumber);
      sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
    }
  };
  auto* certify = cli.add_subcommand("certify", "search and check a Lyapunov certificate");
  auto* simulate = cli.add_subcommand("simulate", "integrate one hybrid arc and write CSVs");
  auto* verify = cli.add_subcommand("verify", "simulate and check every stability inequality");
  auto* reproduce = cli.add_subcommand("reproduce", "full twelve-agent pipeline with figure data");
  auto* batch = cli.add_subcommand("batch", "many seeded runs, summaries only");
  for (auto* s : {certify, simulate, verify, reproduce}) add_common(s, false);
  add_common(batch, true);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*certify) return cmd_certify(c);
    if (*simulate) return cmd_simulate(c);
    if (*verify) return cmd_verify(c);
    if (*reproduce) return cmd_reproduce(c);
    if (*batch) return cmd_batch(c);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumerical;
  }
  return kOk;
}
