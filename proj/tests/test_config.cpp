#include <cstdio>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace chronosync;

namespace {

std::string diagnostic(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
    return e.what();
  }
  ADD_FAILURE() << "no error for: " << text;
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST(Config, DefaultsDescribeTwelveAgents) {
  const AppConfig app = parse_config_text("{}");
  const Scenario sc = resolve_scenario(app.sim);
  EXPECT_EQ(sc.graph.size(), 12);
  EXPECT_EQ(app.sim.gains.k_u, 0.72);
  EXPECT_EQ(app.sim.gains.k_a, 4.2);
  EXPECT_EQ(app.sim.gains.k_theta, 3.0);
  EXPECT_EQ(app.certify.search.sigma, 35.0);
  EXPECT_EQ(app.certify.nu, 0.06);
  for (const auto& p : sc.params) {
    EXPECT_EQ(p.delta, 2e-5);
    EXPECT_EQ(p.T1, 0.05);
    EXPECT_EQ(p.T2, 0.1);
  }
}

TEST(Config, OneBasedEdges) {
  const AppConfig app = parse_config_text(R"({"graph": {"n_agents": 3, "edges": [[1, 2], [2, 3]]}})");
  const Graph g = build_graph(app.sim.graph);
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1}, {1, 2}}));
}

TEST(Config, OverridesAndValueForms) {
  const AppConfig app = parse_config_text(R"({
    "seed": 9,
    "graph": {"kind": "ring", "n_agents": 4},
    "params": {"a": [1.0, 1.0, 1.0, 1.0], "T1": {"uniform": [0.05, 0.06]}},
    "gains": {"k_u": 0.5},
    "initial": {"a_hat": "a", "vartheta": 1.5},
    "disturbance": {"model": "sinusoid", "amplitude": 1e-5, "frequency": 2.0},
    "sim": {"t_end": 3, "reset": "fixed", "fixed_reset": 0.08},
    "certificate": {"epsilon": 0.3, "kappa_fraction": 0.25},
    "nu": 0.1
  })");
  EXPECT_EQ(app.sim.seed, 9u);
  EXPECT_EQ(app.sim.gains.k_u, 0.5);
  EXPECT_EQ(app.sim.gains.k_a, 4.2);
  EXPECT_EQ(app.sim.reset, ResetKind::Fixed);
  EXPECT_EQ(*app.sim.fixed_reset, 0.08);
  EXPECT_EQ(*app.certify.epsilon, 0.3);
  EXPECT_EQ(app.certify.kappa_fraction, 0.25);
  const auto& s = std::get<SinusoidDisturbance>(app.sim.disturbance);
  EXPECT_EQ(s.amplitude.size(), 4u);
  EXPECT_EQ(s.phase, std::vector<double>(4, 0.0));
  const Scenario sc = resolve_scenario(app.sim);
  EXPECT_EQ(sc.initial[2].vartheta, 1.5);
  EXPECT_EQ(sc.initial[2].a_hat, 1.0);
}

TEST(Config, DiagnosticsNameTheField) {
  EXPECT_TRUE(contains(diagnostic(R"({"gains": {"k_u": "fast"}})"), "gains.k_u"));
  EXPECT_TRUE(contains(diagnostic(R"({"gains": {"ku": 1}})"), "gains.ku"));
  EXPECT_TRUE(contains(diagnostic(R"({"sim": {"h": -1}})"), "sim.h"));
  EXPECT_TRUE(contains(diagnostic(R"({"disturbance": {"model": "pink"}})"), "disturbance.model"));
  EXPECT_TRUE(contains(diagnostic(R"({"graph": {"kind": "path", "n_agents": 1}})"), "n_agents"));
  EXPECT_TRUE(contains(diagnostic(R"({"certificate": {"kappa_fraction": 1.5}})"), "certificate.kappa_fraction"));
}

TEST(Config, WrongLengthNamedWhenResolved) {
  const AppConfig app = parse_config_text(R"({"params": {"T2": [0.1, 0.1]}})");
  try {
    resolve_scenario(app.sim);
    FAIL() << "two values accepted for twelve agents";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
    EXPECT_TRUE(contains(e.what(), "T2")) << e.what();
  }
}

TEST(Config, SyntaxErrorReportsLine) {
  const std::string msg = diagnostic("{\n  \"seed\": 4,\n  \"nu\": ,\n}");
  EXPECT_TRUE(contains(msg, "line 3")) << msg;
}

TEST(Config, EchoRoundTrips) {
  AppConfig app = section6_config(77);
  app.sim.graph = EdgeListSpec{3, {{0, 1}, {0, 2}}};
  app.sim.disturbance = ConstantDisturbance{{1.0, -0.5, 0.25}};
  app.certify.epsilon = 0.4;
  const json echo = config_json(app);
  const AppConfig back = parse_config(echo);
  EXPECT_EQ(to_text(config_json(back)), to_text(echo));
}

TEST(Report, SeventeenDigits) {
  EXPECT_EQ(fmt17(0.1), "0.10000000000000001");
  EXPECT_EQ(to_text(json{{"x", 0.1}, {"z", -0.0}}), "{\n  \"x\": 0.10000000000000001,\n  \"z\": 0\n}\n");
}

TEST(Report, CertificateRoundTrip) {
  const Certificate c = testing_helpers::oracle_certificate();
  const Certificate back = certificate_from_json(json::parse(to_text(certificate_json(c))));
  EXPECT_EQ(back.P1, c.P1);
  EXPECT_EQ(back.P2_weights, c.P2_weights);
  EXPECT_EQ(back.P3, c.P3);
  EXPECT_EQ(back.sigma, c.sigma);
}

TEST(Report, CsvHeaders) {
  SimConfig c = section6_config(1).sim;
  c.graph = GeneratorSpec{GeneratorKind::Path, 2, 0, 0.0};
  c.t_end = 0.2;
  const Trajectory traj = simulate(c);
  const std::string dir = ::testing::TempDir();
  write_trajectory_csv(traj, dir + "/t.csv");
  write_metrics_csv(traj, dir + "/m.csv");
  write_events_csv(traj, dir + "/e.csv");
  auto first_line = [](const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
  };
  EXPECT_EQ(first_line(dir + "/t.csv"), "t,j,agent,theta,vartheta,vartheta_hat,a_hat,theta_hat,tau,u,d");
  EXPECT_EQ(first_line(dir + "/m.csv"), "t,j,eta_norm,dist_A,uniform_norm,V");
  EXPECT_EQ(first_line(dir + "/e.csv"), "t,j,agent,broadcast_value,tau_reset");
}
