#include <gtest/gtest.h>

#include "conservation.hpp"

using namespace sta;
using namespace sta::testing;

namespace {

class RandomDeflection : public ::testing::TestWithParam<int> {
 protected:
  static const std::vector<DeflectionSpec>& specs() {
    static const std::vector<DeflectionSpec> s = random_deflections(50, 20240611);
    return s;
  }
};

}  // namespace

TEST_P(RandomDeflection, ConservationLaws) {
  const int i = GetParam();
  ConservationSample c = measure_conservation(specs()[i], 1000 + i);
  EXPECT_LT(c.G_drift, 1e-8);
  EXPECT_LT(c.wronskian_drift, 1e-8);
  EXPECT_LT(c.symplectic_drift, 1e-9);
  EXPECT_LT(c.eq7_residual, 1e-8);
  EXPECT_LT(c.grid_norm_drift, 1e-10);
  EXPECT_LT(c.replay_mismatch, 1e-7);
}

TEST_P(RandomDeflection, BoundaryInvariantForms) {
  const DeflectionSpec& s = specs()[GetParam()];
  DeflectionProtocol p = design_deflection(s);
  for (double t : {0.0, s.tf}) {
    ControlValues v = p.schedule(t);
    EXPECT_NEAR(v.gamma * v.gamma, v.omega1_sq * v.omega2_sq, 1e-10 * v.gamma * v.gamma);
    for (int order : {1, 2}) {
      EXPECT_NEAR(evaluate(p.u1, t, order), 0.0, 1e-10);
      EXPECT_NEAR(evaluate(p.u2, t, order), 0.0, 1e-10);
    }
  }
  EXPECT_GT(p.F, 0.0);
  WaveguideBoundary expect = table1_targets(s.initial, s.closure);
  EXPECT_NEAR(p.final_boundary.omega1, expect.omega1, 1e-12);
  EXPECT_NEAR(p.final_boundary.omega2, expect.omega2, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Fifty, RandomDeflection, ::testing::Range(0, 50));
