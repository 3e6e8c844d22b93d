#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sta/error.hpp"
#include "sta/moments.hpp"
#include "sta/observables.hpp"
#include "sta/transfer.hpp"

using namespace sta;
using sta::testing::swap_spec;

namespace {

class StrongSwap : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { protocol_ = new TransferProtocol(shoot_transfer(swap_spec(6.0))); }
  static void TearDownTestSuite() {
    delete protocol_;
    protocol_ = nullptr;
  }
  static const TransferProtocol& protocol() { return *protocol_; }

  static std::vector<ObservableRecord> run(const InitialStateSpec& init) {
    const auto& p = protocol();
    auto grid = uniform_grid(p.spec.tf, 401);
    auto states = propagate_moments(p.schedule, make_initial_state(init, p.schedule(0.0)), grid);
    return observe_series(p.schedule, grid, states, &p.reference);
  }

 private:
  static TransferProtocol* protocol_;
};

TransferProtocol* StrongSwap::protocol_ = nullptr;

}  // namespace

TEST(TransferSpecTest, DefaultNormalisation) {
  TransferSpec s = swap_spec(6.0);
  EXPECT_NEAR(s.c0_value(), std::sqrt(2.0), 1e-15);
  s.omega1_0 = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(TransferFamilies, GammaEndsFixed) {
  CosineFamily g = gamma_family(swap_spec(6.0));
  for (double a4 : {-0.659, 0.0, 2.0}) {
    CosineAnsatz c = g.at({a4});
    EXPECT_NEAR(evaluate(c, 0.0), 6.0, 1e-12);
    EXPECT_NEAR(evaluate(c, 4.0), 6.0, 1e-12);
    EXPECT_NEAR(evaluate(c, 0.0, 2), 0.0, 1e-12);
    EXPECT_NEAR(evaluate(c, 4.0, 2), 0.0, 1e-12);
  }
}

TEST(TransferFamilies, ImaginaryPartBoundaryValues) {
  TransferSpec s = swap_spec(6.0);
  ImaginaryParts ip = build_imaginary_parts(s);
  ASSERT_EQ(ip.u1.free_indices(), std::vector<int>{6});
  ASSERT_EQ(ip.u2.free_indices(), std::vector<int>{6});
  for (double b6 : {-0.383, 0.0, 0.7}) {
    CosineAnsatz u1 = ip.u1.at({b6}), u2 = ip.u2.at({b6});
    EXPECT_NEAR(evaluate(u1, 0.0), 1.0, 1e-12);
    EXPECT_NEAR(evaluate(u1, s.tf), 0.0, 1e-12);
    EXPECT_NEAR(evaluate(u1, 0.0, 2), -1.0, 1e-12);
    EXPECT_NEAR(evaluate(u2, 0.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(evaluate(u2, s.tf)), 1.0, 1e-12);
    EXPECT_NEAR(evaluate(u2, 0.0, 2), 6.0, 1e-12);
    EXPECT_NEAR(evaluate(u2, s.tf, 2), -1.0, 1e-12);
  }
}

TEST(TransferFamilies, IndexZeroPinned) {
  TransferSpec s = swap_spec(6.0);
  s.index0 = {1.5, -2.0};
  ImaginaryParts ip = build_imaginary_parts(s);
  EXPECT_DOUBLE_EQ(ip.u1.at({0.1}).coefficients()[0], 1.5);
  EXPECT_DOUBLE_EQ(ip.u2.at({0.1}).coefficients()[0], -2.0);
}

TEST(TransferFamilies, ReconstructionAtEnds) {
  TransferSpec s = swap_spec(6.0);
  ImaginaryParts ip = build_imaginary_parts(s);
  CosineAnsatz g = gamma_family(s).at({0.3});
  CosineAnsatz u1 = ip.u1.at({-0.2}), u2 = ip.u2.at({0.1});
  auto [a0, b0] = reconstruct_frequencies(u1, u2, g, 0.0);
  auto [af, bf] = reconstruct_frequencies(u1, u2, g, s.tf);
  EXPECT_NEAR(a0, 1.0, 1e-9);
  EXPECT_NEAR(b0, 0.9, 1e-9);
  EXPECT_NEAR(af, 0.9, 1e-9);
  EXPECT_NEAR(bf, 1.0, 1e-9);
}

TEST_F(StrongSwap, Converges) {
  const auto& p = protocol();
  EXPECT_LT(p.residual, 1e-8);
  for (double r : p.final_residuals) EXPECT_LT(std::abs(r), 1e-8);
  RecordProperty("a4", std::to_string(p.coefficients[0]));
  RecordProperty("b6", std::to_string(p.coefficients[1]));
  RecordProperty("c6", std::to_string(p.coefficients[2]));
  ControlValues a = p.schedule(0.0), b = p.schedule(p.spec.tf);
  EXPECT_NEAR(a.omega1_sq, 1.0, 1e-8);
  EXPECT_NEAR(a.omega2_sq, 0.9, 1e-8);
  EXPECT_NEAR(a.gamma, 6.0, 1e-8);
  EXPECT_NEAR(b.omega1_sq, 0.9, 1e-8);
  EXPECT_NEAR(b.omega2_sq, 1.0, 1e-8);
  EXPECT_NEAR(b.gamma, 6.0, 1e-8);
}

TEST_F(StrongSwap, ControlsFiniteAndContinuous) {
  // Doubling the sampling halves the largest step between neighbours.
  const auto& p = protocol();
  auto max_jump = [&](std::size_t n) {
    auto grid = uniform_grid(p.spec.tf, n);
    ControlValues prev = p.schedule(0.0);
    double jump = 0.0;
    for (double t : grid) {
      ControlValues v = p.schedule(t);
      EXPECT_TRUE(std::isfinite(v.omega1_sq) && std::isfinite(v.omega2_sq) &&
                  std::isfinite(v.gamma));
      jump = std::max({jump, std::abs(v.omega1_sq - prev.omega1_sq),
                       std::abs(v.omega2_sq - prev.omega2_sq)});
      prev = v;
    }
    return jump;
  };
  const double coarse = max_jump(1000), fine = max_jump(2000);
  EXPECT_LT(fine, 0.6 * coarse);
}

TEST_F(StrongSwap, ResidualWorseAwayFromSolution) {
  const auto& p = protocol();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.05);
  for (int trial = 0; trial < 5; ++trial) {
    std::array<double, 3> x = p.coefficients;
    for (auto& v : x) v += n(rng);
    double r = 0.0;
    try {
      for (double v : transfer_residuals(p.spec, x)) r += v * v;
    } catch (const DesignRejected&) {
      continue;  // singular controls: no finite residual at all
    }
    EXPECT_GT(std::sqrt(r), p.residual);
  }
}

TEST_F(StrongSwap, FourthResidualVanishesIdentically) {
  // Follows from the conserved Im(u* u') once the other three vanish.
  auto r = transfer_residuals(protocol().spec, protocol().coefficients);
  EXPECT_LT(std::abs(r[3]), 1e-8);
}

TEST_F(StrongSwap, ReferenceMeetsFinalData) {
  const auto& p = protocol();
  ReferencePoint f = p.reference.at(p.spec.tf);
  const double beta = p.spec.c0_value() / std::sqrt(2 * p.spec.omega2_f);
  EXPECT_NEAR(std::abs(f.u[0]), 0.0, 1e-8);
  EXPECT_NEAR(f.u[1].imag(), beta, 1e-8);
  EXPECT_NEAR(f.du[1].real(), -p.spec.c0_value() * std::sqrt(p.spec.omega2_f / 2), 1e-8);
  EXPECT_NEAR(symplectic_constant(p.reference, 0.0), p.spec.omega1_0 * p.spec.omega1_0,
              1e-12);
  EXPECT_NEAR(symplectic_constant(p.reference, p.spec.tf), symplectic_constant(p.reference, 0.0),
              1e-9);
}

TEST_F(StrongSwap, VacuumStaysVacuum) {
  InitialStateSpec init;
  init.kind = InitialKind::uncoupled_product_ground;
  auto rec = run(init);
  EXPECT_NEAR(*rec.front().H1, 0.0, 1e-12);
  EXPECT_NEAR(*rec.front().I_exp, 0.0, 1e-12);
  EXPECT_NEAR(*rec.back().H2, *rec.front().H1, 1e-4);
}

TEST_F(StrongSwap, CoherentExcitationMoves) {
  InitialStateSpec init;
  init.kind = InitialKind::coherent_mode1;
  init.alpha = {1.0, 0.0};
  auto rec = run(init);
  EXPECT_NEAR(*rec.front().H1, 1.0, 1e-12);
  EXPECT_NEAR(*rec.front().I_exp, 1.0, 1e-12);
  EXPECT_NEAR(*rec.back().H2, 1.0, 1e-4);
  for (const auto& r : rec) EXPECT_NEAR(*r.I_exp, 1.0, 1e-6);
}

TEST(TransferShooting, ComparisonValuesAreInformational) {
  // They are not a root of the residual map under these boundary data.
  TransferSpec s = swap_spec(6.0);
  double r = 0.0;
  try {
    for (double v : transfer_residuals(s, kComparisonTransferCoefficients)) r += v * v;
  } catch (const Error&) {
    r = INFINITY;
  }
  EXPECT_GT(std::sqrt(r), 1e-3);
}

TEST(TransferShooting, StagnationCarriesBestPoint) {
  ShootOptions opt;
  opt.restarts = 0;
  opt.simplex_iterations = 20;
  opt.polish_iterations = 0;
  try {
    shoot_transfer(swap_spec(6.0), opt);
    FAIL() << "twenty simplex steps should not converge";
  } catch (const ShootingStagnated& e) {
    EXPECT_GT(e.residual(), opt.tolerance);
    EXPECT_TRUE(std::isfinite(e.best()[0]));
  }
}
