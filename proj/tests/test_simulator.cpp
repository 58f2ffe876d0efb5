#include <cmath>

#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace chronosync;

namespace {

SimConfig small_config(double t_end = 2.0) {
  SimConfig c = section6_config(17).sim;
  c.graph = GeneratorSpec{GeneratorKind::Ring, 5, 0, 0.0};
  c.t_end = t_end;
  c.log_stride = 1;
  return c;
}

}  // namespace

TEST(Simulator, AttractorIsInvariant) {
  SimConfig c = small_config(5.0);
  c.disturbance = ZeroDisturbance{};
  c.initial.vartheta = 2.0;
  c.initial.vartheta_hat = AliasOf{"vartheta"};
  c.initial.a_hat = AliasOf{"a"};
  c.initial.theta_hat = AliasOf{"theta"};
  const Trajectory traj = simulate(c);
  double worst = 0.0;
  for (const auto& r : traj.samples) worst = std::max(worst, r.dist);
  EXPECT_LE(worst, 1e-9);
  EXPECT_FALSE(traj.events.empty());
}

TEST(Simulator, SingleAgentRejected) {
  SimConfig c = small_config();
  c.graph = GeneratorSpec{GeneratorKind::Path, 1, 0, 0.0};
  EXPECT_THROW(simulate(c), Error);
}

TEST(Simulator, InitialTimerOutsideWindowRejected) {
  SimConfig c = small_config();
  c.initial.tau = 0.2;
  try {
    simulate(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
  }
}

TEST(Simulator, InvalidStepRejected) {
  SimConfig c = small_config();
  c.h = 0.0;
  EXPECT_THROW(simulate(c), Error);
}

TEST(Simulator, ShortHorizonBroadcastsFromEveryAgent) {
  SimConfig c = small_config(0.2);
  const Trajectory traj = simulate(c);
  std::vector<int> count(traj.size(), 0);
  for (const auto& e : traj.events) ++count[e.agent];
  for (int k : count) EXPECT_GE(k, 1);
  EXPECT_EQ(traj.samples.back().t, 0.2);
}

TEST(Simulator, HybridTimeIsLexicographicallyOrdered) {
  const Trajectory traj = simulate(small_config());
  for (std::size_t k = 1; k < traj.samples.size(); ++k) {
    const Record& a = traj.samples[k - 1];
    const Record& b = traj.samples[k];
    EXPECT_TRUE(b.t > a.t || (b.t == a.t && b.j >= a.j)) << k;
    if (b.j != a.j) {
      EXPECT_EQ(b.j, a.j + 1);
      EXPECT_EQ(b.t, a.t);
    }
  }
  EXPECT_EQ(traj.samples.back().j, static_cast<long>(traj.events.size()));
}

TEST(Simulator, EventsCarryConsistentData) {
  const Trajectory traj = simulate(small_config());
  for (std::size_t k = 0; k < traj.events.size(); ++k) {
    const Event& e = traj.events[k];
    EXPECT_EQ(e.j, static_cast<long>(k) + 1);
    EXPECT_GE(e.tau_reset, 0.05);
    EXPECT_LE(e.tau_reset, 0.1);
  }
  // A jump record shows the broadcast value as the new sample state.
  for (const auto& r : traj.samples) {
    if (r.j == 1) {
      const Event& e = traj.events[0];
      EXPECT_EQ(r.agents[e.agent].vartheta_hat, e.broadcast_value);
      EXPECT_EQ(r.agents[e.agent].tau, e.tau_reset);
      break;
    }
  }
}

TEST(Simulator, FixedResetGivesPeriodicBroadcasts) {
  SimConfig c = small_config(1.0);
  c.reset = ResetKind::Fixed;
  c.disturbance = ZeroDisturbance{};
  const Trajectory traj = simulate(c);
  const auto iv = inter_event_intervals(traj);
  for (const auto& agent : iv) {
    for (double dt : agent) EXPECT_NEAR(dt, 0.1, 1e-12);
  }
}

TEST(Simulator, TimerIntervalsWithinBounds) {
  SimConfig c = small_config(5.0);
  c.disturbance = ConstantDisturbance{{1, -1, 1, -1, 1}};
  c.reset = ResetKind::Fixed;
  c.fixed_reset = 0.1;
  const Trajectory traj = simulate(c);
  EXPECT_EQ(timer_interval_violations(traj), 0);
  bool saw_long = false;
  for (const auto& agent : inter_event_intervals(traj))
    for (double dt : agent) saw_long = saw_long || dt > 0.1;
  EXPECT_TRUE(saw_long);  // agents with d = -delta stretch the window past T2
}

TEST(Simulator, Deterministic) {
  const Trajectory a = simulate(small_config());
  const Trajectory b = simulate(small_config());
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    EXPECT_EQ(a.samples[k].z, b.samples[k].z);
    EXPECT_EQ(a.samples[k].t, b.samples[k].t);
  }
  SimConfig other = small_config();
  other.seed = 18;
  EXPECT_NE(simulate(other).samples.back().z, a.samples.back().z);
}

TEST(Simulator, LogStrideKeepsJumpRecords) {
  SimConfig c = small_config(1.0);
  c.log_stride = 10;
  const Trajectory sparse = simulate(c);
  const Trajectory dense = simulate(small_config(1.0));
  EXPECT_LT(sparse.samples.size(), dense.samples.size());
  EXPECT_EQ(sparse.events.size(), dense.events.size());
  EXPECT_EQ(sparse.samples.back().z, dense.samples.back().z);
  EXPECT_EQ(sparse.samples.back().j, static_cast<long>(sparse.events.size()));
}

TEST(Simulator, LogsVWhenCertificateGiven) {
  SimConfig c = small_config(0.5);
  c.graph = GeneratorSpec{GeneratorKind::Path, 2, 0, 0.0};
  c.certificate = testing_helpers::oracle_certificate();
  const Trajectory traj = simulate(c);
  for (const auto& r : traj.samples) EXPECT_NEAR(r.V, lyapunov_value(*c.certificate, r.z, r.tau), 1e-12 * (1 + r.V));
  c.graph = GeneratorSpec{GeneratorKind::Path, 3, 0, 0.0};
  EXPECT_THROW(simulate(c), Error);
}

TEST(Simulator, BlowupDetected) {
  SimConfig c = small_config(5.0);
  c.gains.k_u = 5000.0;
  c.h = 0.01;
  try {
    simulate(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NumericalBlowup);
  }
}

TEST(Simulator, HalvingStepBarelyMovesFinalDistance) {
  SimConfig c = section6_config(42).sim;
  const Trajectory coarse = simulate(c);
  c.h = 5e-4;
  c.log_stride = 20;
  const Trajectory fine = simulate(c);
  const double a = coarse.samples.back().dist, b = fine.samples.back().dist;
  EXPECT_LT(std::abs(a - b) / b, 0.01) << a << " vs " << b;
}

TEST(Simulator, ResolvesAliasesAndRanges) {
  SimConfig c = small_config();
  c.initial.a_hat = AliasOf{"a"};
  const Scenario sc = resolve_scenario(c);
  for (int p = 0; p < 5; ++p) {
    EXPECT_EQ(sc.initial[p].a_hat, sc.params[p].a);
    EXPECT_EQ(sc.initial[p].theta_hat, sc.initial[p].theta);
    EXPECT_EQ(sc.initial[p].vartheta_hat, sc.initial[p].vartheta);
    EXPECT_GE(sc.params[p].a, 1.0 - 1e-4);
    EXPECT_LE(sc.params[p].a, 1.0 + 1e-4);
    EXPECT_GE(sc.initial[p].theta, 0.0);
    EXPECT_LE(sc.initial[p].theta, 5.0);
  }
  c.initial.a_hat = AliasOf{"nonsense"};
  EXPECT_THROW(resolve_scenario(c), Error);
  c.initial.a_hat = std::vector<double>{1.0, 1.0};
  EXPECT_THROW(resolve_scenario(c), Error);
}
