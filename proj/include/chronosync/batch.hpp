#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "chronosync/analysis.hpp"
#include "chronosync/certificate.hpp"
#include "chronosync/random.hpp"
#include "chronosync/simulator.hpp"

namespace chronosync {

struct RunSummary {
  int run = 0;
  std::uint64_t seed = 0;
  double initial_dist = 0.0;
  double final_eta_norm = 0.0;
  double final_dist = 0.0;
  double final_uniform_norm = 0.0;
  std::vector<double> max_interval;  // per agent
  std::vector<double> min_interval;
  long events = 0;
  long lyap_violations = 0;  // jump + flow
  VerificationReport verification;
  ObjectiveErrors objectives;  // over the second half of the horizon
  std::optional<double> nu_sync_time;

  bool operator==(const RunSummary&) const = default;
};

inline bool operator==(const VerificationReport& a, const VerificationReport& b) {
  return a.lyap_jump_violations == b.lyap_jump_violations && a.lyap_flow_violations == b.lyap_flow_violations &&
         a.envelope_violations == b.envelope_violations && a.nu_sync_time_observed == b.nu_sync_time_observed &&
         a.max_timer_interval_violations == b.max_timer_interval_violations &&
         a.domain_bound_violations == b.domain_bound_violations &&
         a.domain_bound_violations_corrected == b.domain_bound_violations_corrected &&
         a.max_jump_increase == b.max_jump_increase && a.worst_flow_excess == b.worst_flow_excess;
}

inline bool operator==(const ObjectiveErrors& a, const ObjectiveErrors& b) {
  return a.rate == b.rate && a.a_tilde == b.a_tilde && a.theta_tilde == b.theta_tilde;
}

inline RunSummary summarize(const Trajectory& traj, int run, const Certificate* cert, const GpesConstants* gc,
                            double nu) {
  RunSummary s;
  s.run = run;
  s.seed = traj.seed;
  s.initial_dist = traj.samples.front().dist;
  const Record& last = traj.samples.back();
  s.final_eta_norm = last.eta_norm;
  s.final_dist = last.dist;
  s.final_uniform_norm = last.uniform_norm;
  for (const auto& iv : inter_event_intervals(traj)) {
    s.max_interval.push_back(iv.empty() ? 0.0 : *std::max_element(iv.begin(), iv.end()));
    s.min_interval.push_back(iv.empty() ? 0.0 : *std::min_element(iv.begin(), iv.end()));
  }
  s.events = static_cast<long>(traj.events.size());
  s.verification = verify(traj, cert, gc, nu);
  s.lyap_violations = s.verification.lyap_jump_violations + s.verification.lyap_flow_violations;
  s.objectives = objective_errors(traj, 0.5 * last.t);
  s.nu_sync_time = s.verification.nu_sync_time_observed;
  return s;
}

/// Seed of run k when none is given explicitly.
inline std::uint64_t run_seed(std::uint64_t master, int k) {
  return derive_seed(master, "run", static_cast<std::uint64_t>(k));
}

struct BatchOptions {
  int runs = 1;
  std::vector<std::uint64_t> seeds;  // overrides run_seed when non-empty
  unsigned threads = 1;
  double nu = 0.06;
  const Certificate* certificate = nullptr;
  const GpesConstants* constants = nullptr;
};

/**
 * Independent runs of one configuration, differing only in master seed.
 * Only summaries are kept; trajectories are dropped as soon as they are
 * summarized. Results come back in run-index order whatever the thread count.
 * A failing run rethrows its error with the run index prepended.
 */
inline std::vector<RunSummary> run_batch(const SimConfig& base, const BatchOptions& opt) {
  require(opt.runs >= 1, ErrorKind::InvalidArgument, "batch needs at least one run");
  require(opt.seeds.empty() || static_cast<int>(opt.seeds.size()) == opt.runs, ErrorKind::InvalidArgument,
          "explicit seeds must match the number of runs");
  std::vector<std::optional<RunSummary>> results(opt.runs);
  std::vector<std::exception_ptr> errors(opt.runs);
  std::atomic<int> next{0};

  auto worker = [&] {
    for (int k = next++; k < opt.runs; k = next++) {
      try {
        SimConfig cfg = base;
        cfg.seed = opt.seeds.empty() ? run_seed(base.seed, k) : opt.seeds[k];
        cfg.certificate = opt.certificate ? std::optional<Certificate>(*opt.certificate) : std::nullopt;
        const Trajectory traj = simulate(cfg);
        results[k] = summarize(traj, k, opt.certificate, opt.constants, opt.nu);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(opt.runs)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<RunSummary> out;
  for (int k = 0; k < opt.runs; ++k) {
    if (errors[k]) {
      try {
        std::rethrow_exception(errors[k]);
      } catch (const Error& e) {
        const std::string what = e.what();
        const auto colon = what.find(": ");
        throw Error(e.kind(), "run " + std::to_string(k) + ": " + (colon == std::string::npos ? what : what.substr(colon + 2)));
      } catch (const std::exception& e) {
        throw Error(ErrorKind::InvalidArgument, "run " + std::to_string(k) + ": " + e.what());
      }
    }
    out.push_back(std::move(*results[k]));
  }
  return out;
}

}  // namespace chronosync
