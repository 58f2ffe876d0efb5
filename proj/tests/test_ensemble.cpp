#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace chronosync;

namespace {

struct RandomEnsemble {
  Graph graph;
  SpectralData sd;
  std::vector<AgentParams> params;
  std::vector<AgentState> agents;
  std::vector<double> drift;
  Eigen::VectorXd d;
};

RandomEnsemble random_ensemble(Rng& rng, int n) {
  RandomEnsemble e;
  e.graph = build_graph(GeneratorSpec{GeneratorKind::RandomConnected, n, rng(), 0.4});
  e.sd = spectral_basis(e.graph);
  e.d.resize(n);
  for (int p = 0; p < n; ++p) {
    AgentParams ap;
    ap.a = uniform(rng, 0.9999, 1.0001);
    ap.delta = 2e-5;
    e.params.push_back(ap);
    e.drift.push_back(ap.a);
    AgentState s;
    s.theta = uniform(rng, 0, 5);
    s.vartheta = uniform(rng, 0, 5);
    s.vartheta_hat = s.vartheta + uniform(rng, -0.1, 0.1);
    s.a_hat = uniform(rng, 0.99, 1.01);
    s.theta_hat = s.theta + uniform(rng, -0.1, 0.1);
    s.tau = uniform(rng, 0.0, 0.1);
    e.agents.push_back(s);
    e.d(p) = uniform(rng, -2e-5, 2e-5);
  }
  for (int p = 0; p < n; ++p) {
    for (int q : e.graph.neighbors(p)) e.agents[p].neighbor_samples[q] = e.agents[q].vartheta_hat;
  }
  return e;
}

}  // namespace

TEST(Ensemble, StackedFlowMatchesAgentFlows) {
  Rng rng(3);
  const Gains g = testing_helpers::scenario_gains();
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 11));
    RandomEnsemble e = random_ensemble(rng, n);
    const FlowMatrix fm = build_F(e.sd, g.k_u, g.k_a, g.k_theta);
    const EnsembleState xi = pack(e.agents, e.drift, e.sd);
    Eigen::VectorXd b = Eigen::VectorXd::Ones(n), delta = Eigen::VectorXd::Constant(n, 2e-5);
    const EnsembleDerivative stacked = ensemble_flow(xi, fm, e.sd, b, delta, e.d);

    Eigen::VectorXd vartheta_dot(n), vt_dot(n), at_dot(n), tt_dot(n), tau_dot(n);
    for (int p = 0; p < n; ++p) {
      const double u = controller_input(e.agents[p], e.params[p], e.graph.neighbors(p));
      const AgentRates r = agent_flow(e.agents[p], e.params[p], u, e.d(p));
      vartheta_dot(p) = r.vartheta;
      vt_dot(p) = r.vartheta - r.vartheta_hat;
      at_dot(p) = -r.a_hat;
      tt_dot(p) = r.theta - r.theta_hat;
      tau_dot(p) = r.tau;
    }
    Eigen::VectorXd composed(4 * n - 1);
    composed << e.sd.V.transpose() * vartheta_dot, vt_dot, at_dot, tt_dot;
    EXPECT_LE((stacked.z_dot - composed).cwiseAbs().maxCoeff(), 1e-9) << "trial " << trial;
    EXPECT_LE((stacked.tau_dot - tau_dot).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Ensemble, FlowMatrixBlocksForPathOfTwo) {
  const SpectralData sd = spectral_basis(testing_helpers::path2());
  const FlowMatrix fm = build_F(sd, 0.72, 4.2, 3.0);
  ASSERT_EQ(fm.F.rows(), 7);
  EXPECT_NEAR(fm.F(0, 0), -0.72 * 2.0, 1e-14);
  // rows: eta 0, vartheta~ 1-2, a~ 3-4, theta~ 5-6
  EXPECT_NEAR(fm.F(3, 5), -4.2, 1e-14);
  EXPECT_NEAR(fm.F(5, 3), 1.0, 1e-14);
  EXPECT_NEAR(fm.F(6, 6), -3.0, 1e-14);
  EXPECT_NEAR(fm.F(3, 3), 0.0, 1e-14);
  EXPECT_EQ(linalg::numerical_rank(fm.F), 5);
}

TEST(Ensemble, FlowRejectsDisturbanceOutsideBox) {
  Rng rng(5);
  RandomEnsemble e = random_ensemble(rng, 4);
  const FlowMatrix fm = build_F(e.sd, 0.72, 4.2, 3.0);
  const EnsembleState xi = pack(e.agents, e.drift, e.sd);
  Eigen::VectorXd d = Eigen::VectorXd::Constant(4, 3e-5);
  try {
    ensemble_flow(xi, fm, e.sd, Eigen::VectorXd::Ones(4), Eigen::VectorXd::Constant(4, 2e-5), d);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::DisturbanceOutOfBound);
  }
}

TEST(Ensemble, JumpZeroesOnlyTheFiringAgent) {
  Rng rng(9);
  RandomEnsemble e = random_ensemble(rng, 5);
  e.agents[2].tau = 0.0;
  const EnsembleState xi = pack(e.agents, e.drift, e.sd, {1.5, 7});
  EXPECT_EQ(jump_set_agents(xi, 1e-9), std::vector<int>{2});
  const EnsembleState next = apply_jump(xi, 2, 0.08, 0.05, 0.1);
  EXPECT_EQ(next.vartheta_tilde(2), 0.0);
  EXPECT_EQ(next.tau(2), 0.08);
  EXPECT_EQ(next.time.j, 8);
  EXPECT_EQ(next.time.t, 1.5);
  EXPECT_EQ(next.eta, xi.eta);
  EXPECT_EQ(next.a_tilde, xi.a_tilde);
  EXPECT_EQ(next.theta_tilde, xi.theta_tilde);
  for (int p : {0, 1, 3, 4}) {
    EXPECT_EQ(next.vartheta_tilde(p), xi.vartheta_tilde(p));
    EXPECT_EQ(next.tau(p), xi.tau(p));
  }
}

TEST(Ensemble, JumpOutsideJumpSetRejected) {
  Rng rng(9);
  RandomEnsemble e = random_ensemble(rng, 3);
  e.agents[0].tau = 0.02;
  const EnsembleState xi = pack(e.agents, e.drift, e.sd);
  try {
    apply_jump(xi, 0, 0.08, 0.05, 0.1);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::NotInJumpSet);
  }
}

TEST(Ensemble, JumpMatchesAgentLevelReset) {
  Rng rng(12);
  RandomEnsemble e = random_ensemble(rng, 6);
  e.agents[4].tau = 0.0;
  const EnsembleState xi = pack(e.agents, e.drift, e.sd);
  ResetRule rule = ResetRule::fixed(0.07);
  const Expiry ex = on_timer_expiry(e.agents[4], e.params[4], rule);
  deliver_broadcast(e.agents, e.graph.neighbors(4), 4, ex.broadcast_value);
  const EnsembleState after = pack(e.agents, e.drift, e.sd);
  const EnsembleState jumped = apply_jump(xi, 4, ex.new_tau, 0.05, 0.1);
  EXPECT_EQ(after.z(), jumped.z());
  EXPECT_EQ(after.tau, jumped.tau);
}

TEST(Ensemble, PackUnpackRoundTrip) {
  Rng rng(1);
  RandomEnsemble e = random_ensemble(rng, 7);
  const EnsembleState xi = pack(e.agents, e.drift, e.sd, {2.0, 3});
  const auto views = unpack(xi);
  const EnsembleState back = pack(std::span<const TildeView>(views), xi.eta, xi.time);
  EXPECT_EQ(back.z(), xi.z());
  EXPECT_EQ(back.tau, xi.tau);
  const EnsembleState fz = EnsembleState::from_z(xi.z(), xi.tau);
  EXPECT_EQ(fz.z(), xi.z());
  EXPECT_THROW(EnsembleState::from_z(Eigen::VectorXd::Zero(5), xi.tau), Error);
}

TEST(Ensemble, AgreementStateHasZeroEta) {
  std::vector<AgentState> agents(4);
  for (auto& a : agents) a.vartheta = 3.0;
  const SpectralData sd = spectral_basis(build_graph(GeneratorSpec{GeneratorKind::Ring, 4, 0, 0.0}));
  const EnsembleState xi = pack(agents, std::vector<double>(4, 1.0), sd);
  EXPECT_LE(xi.eta.norm(), 1e-14);
}
