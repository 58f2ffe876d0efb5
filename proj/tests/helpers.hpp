#pragma once

#include <Eigen/Dense>

#include "chronosync/chronosync.hpp"

namespace testing_helpers {

using namespace chronosync;

inline Graph path2() { return build_graph(GeneratorSpec{GeneratorKind::Path, 2, 0, 0.0}); }

/// Gains and timer data of the twelve-agent experiment.
inline Gains scenario_gains() { return {0.72, 4.2, 3.0}; }
constexpr double kDelta = 2e-5;
constexpr double kBMin = 1.0 - kDelta;
constexpr double kSigma = 35.0;

/// Certificate for the two-agent path found by the offline randomized search.
inline Certificate oracle_certificate() {
  Certificate c;
  c.sigma = kSigma;
  c.P1 = Eigen::MatrixXd::Constant(1, 1, 18.465835);
  c.P2_weights = Eigen::Vector2d(0.825859, 0.58925);
  c.P3.resize(4, 4);
  c.P3 << 31.28452, -3.738611, -20.594512, 2.238244,  //
      -3.738611, 55.721377, 36.521278, -42.345821,    //
      -20.594512, 36.521278, 111.05375, -20.238662,   //
      2.238244, -42.345821, -20.238662, 94.014989;
  return c;
}

inline Eigen::VectorXd constant(int n, double v) { return Eigen::VectorXd::Constant(n, v); }

}  // namespace testing_helpers
