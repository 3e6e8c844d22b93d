#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sta/deflection.hpp"
#include "sta/error.hpp"
#include "sta/grid.hpp"
#include "sta/moments.hpp"
#include "sta/observables.hpp"

using namespace sta;
using sta::testing::packet;
using sta::testing::quarter_turn;

namespace {

InitialStateSpec product_ground() {
  InitialStateSpec s;
  s.kind = InitialKind::uncoupled_product_ground;
  return s;
}

ControlSchedule guide(double w1, double w2, double tf) {
  return ControlSchedule::constant({w1 * w1, w2 * w2, w1 * w2}, tf);
}

GridGeometry square(int n, double L) { return GridGeometry{n, n, L, L}; }

}  // namespace

TEST(Moments, StaticGroundIsStationary) {
  auto s = ControlSchedule::constant({1.0, 2.25, 0.0}, 5.0);
  GaussianState g = make_initial_state(product_ground(), s(0.0));
  auto out = propagate_moments(s, g, uniform_grid(5.0, 51));
  for (const auto& x : out) {
    EXPECT_LT((x.mean - g.mean).norm(), 1e-14);
    EXPECT_LT((x.cov - g.cov).norm(), 1e-11);
  }
}

TEST(Moments, FreeMotionAlongGuide) {
  auto s = guide(1.0, 2.41, 3.0);
  WaveguideBoundary b = waveguide_boundary(1.0, 2.41);
  GaussianState g = make_initial_state(packet(-1.5, 0.8), s(0.0));
  auto grid = uniform_grid(3.0, 31);
  auto out = propagate_moments(s, g, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    PhaseVector r = rotate(b.theta, out[k].mean);
    EXPECT_NEAR(r(0), -1.5 + 0.8 * grid[k], 1e-9);
    EXPECT_NEAR(r(2), 0.8, 1e-10);
    EXPECT_NEAR(r(1), 0.0, 1e-10);
  }
}

TEST(Moments, DeflectionPacketKeepsEnergy) {
  DeflectionProtocol p = design_deflection(quarter_turn(2.0));
  auto grid = uniform_grid(2.0, 201);
  auto out = propagate_moments(p.schedule, make_initial_state(packet(-4.0), p.schedule(0.0)),
                               grid);
  auto rec = observe_series(p.schedule, grid, out, &p.reference);
  EXPECT_NEAR(rec.back().E_l / rec.front().E_l, 1.0, 1e-9);
}

TEST(Moments, UncertaintyPreserved) {
  DeflectionProtocol p = design_deflection(quarter_turn(1.0));
  auto out = propagate_moments(p.schedule, make_initial_state(packet(4.0), p.schedule(0.0)),
                               uniform_grid(1.0, 101));
  for (const auto& x : out) {
    EXPECT_GE(symplectic_eigenvalues(x.cov).minCoeff(), 0.5 - 1e-9);
    EXPECT_TRUE(x.cov.isApprox(x.cov.transpose(), 1e-14));
  }
}

TEST(Moments, FixedStepMatchesAdaptive) {
  DeflectionProtocol p = design_deflection(quarter_turn(1.0));
  GaussianState g = make_initial_state(packet(0.0), p.schedule(0.0));
  OdeOptions rk4;
  rk4.method = OdeOptions::Method::fixed_rk4;
  rk4.fixed_steps = 4000;
  auto a = propagate_moments(p.schedule, g, uniform_grid(1.0, 11));
  auto b = propagate_moments(p.schedule, g, uniform_grid(1.0, 11), rk4);
  EXPECT_LT((a.back().cov - b.back().cov).norm(), 1e-8);
}

TEST(SymplecticEigenvalues, Vacuum) {
  Eigen::Matrix4d c = Eigen::Matrix4d::Zero();
  c.diagonal() << 0.25, 2.0, 1.0, 0.125;
  Eigen::Vector2d nu = symplectic_eigenvalues(c);
  EXPECT_NEAR(nu(0), 0.5, 1e-14);
  EXPECT_NEAR(nu(1), 0.5, 1e-14);
}

TEST(InitialState, PacketOnGuide) {
  auto s = guide(1.0, 2.41, 1.0);
  WaveguideBoundary b = waveguide_boundary(1.0, 2.41);
  GaussianState g = make_initial_state(packet(0.0, 1.0), s(0.0));
  PhaseVector expect = rotate(-b.theta, PhaseVector(0, 0, 1, 0));
  EXPECT_LT((g.mean - expect).norm(), 1e-14);
  ObservableRecord r = observables(g, s(0.0), b.theta, 0.0);
  EXPECT_NEAR(r.E_l, 0.5 * (1.0 + 1.0 / (4 * 0.5)), 1e-14);
  EXPECT_NEAR(r.E_l, 0.75, 1e-14);
}

TEST(InitialState, PacketNeedsGuide) {
  EXPECT_THROW(make_initial_state(packet(0.0), {1.0, 2.0, 0.1}), ConfigError);
}

TEST(InitialState, ProductGround) {
  GaussianState g = make_initial_state(product_ground(), {1.0, 0.9, 6.0});
  Eigen::Vector4d d(0.5, 1 / (2 * std::sqrt(0.9)), 0.5, std::sqrt(0.9) / 2);
  EXPECT_LT((g.cov.diagonal() - d).norm(), 1e-15);
  EXPECT_LT((g.cov - Eigen::Matrix4d(d.asDiagonal())).norm(), 1e-15);
  EXPECT_EQ(g.mean.norm(), 0.0);
}

TEST(InitialState, CoherentFirstMode) {
  InitialStateSpec s;
  s.kind = InitialKind::coherent_mode1;
  s.alpha = {1.0, 0.0};
  for (double w1 : {1.0, 2.0}) {
    GaussianState g = make_initial_state(s, {w1 * w1, 0.9, 0.0});
    EXPECT_NEAR(g.mean(0), std::sqrt(2.0) / std::sqrt(w1), 1e-15);
    EXPECT_EQ(g.mean(2), 0.0);
    EXPECT_NEAR(g.cov(0, 0), 0.5 / w1, 1e-15);
    ObservableRecord r = observables(g, {w1 * w1, 0.9, 0.0}, 0.0, 0.0);
    EXPECT_NEAR(*r.H1, w1, 1e-13);
    EXPECT_NEAR(*r.H2, 0.0, 1e-13);
  }
}

TEST(Observables, VacuumAtTransferStart) {
  ControlValues v{1.0, 0.9, 6.0};
  GaussianState g = make_initial_state(product_ground(), v);
  ReferencePoint p;
  p.u = {std::complex<double>(0, 1), 0.0};
  p.du = {std::complex<double>(-1, 0), 0.0};
  ObservableRecord r = observables(g, v, normal_modes(1.0, 0.9, 6.0).theta, 0.0, &p);
  EXPECT_NEAR(*r.H1, 0.0, 1e-14);
  EXPECT_NEAR(*r.H2, 0.0, 1e-14);
  EXPECT_NEAR(*r.I_exp, 0.0, 1e-14);
}

TEST(Observables, TransversalGroundEnergy) {
  auto s = guide(1.0, 2.41, 1.0);
  GaussianState g = make_initial_state(packet(0.0), s(0.0));
  ObservableRecord r = observables(g, s(0.0), waveguide_boundary(1.0, 2.41).theta, 0.0);
  const double Wt = std::sqrt(1.0 + 2.41 * 2.41);
  EXPECT_NEAR(*r.E_t, Wt / 2, 1e-13);
  EXPECT_NEAR(*r.E_t, 1.3045, 1e-3);
  EXPECT_NEAR(*r.R_t, 0.0, 1e-13);
}

TEST(Observables, NonNegativeEnergies) {
  DeflectionProtocol p = design_deflection(quarter_turn(1.0));
  auto grid = uniform_grid(1.0, 101);
  auto out = propagate_moments(p.schedule, make_initial_state(packet(4.0), p.schedule(0.0)),
                               grid);
  for (const auto& r : observe_series(p.schedule, grid, out, &p.reference)) {
    EXPECT_GE(r.E_l, -1e-12);
    if (r.E_t) EXPECT_GE(*r.E_t, -1e-12);
    if (r.I_exp) EXPECT_GE(*r.I_exp, -1e-12);
    if (r.H1) EXPECT_GE(*r.H1, -1e-12);
    if (r.H2) EXPECT_GE(*r.H2, -1e-12);
  }
}

TEST(Grid, GaussianMomentsRoundTrip) {
  auto s = guide(1.0, 2.41, 1.0);
  GaussianState g = make_initial_state(packet(1.0, -0.5), s(0.0));
  GridWavefunction psi = GridWavefunction::from_gaussian(g, square(256, 10.0));
  EXPECT_NEAR(psi.norm(), 1.0, 1e-12);
  GaussianState m = grid_moments(psi);
  EXPECT_LT((m.mean - g.mean).norm(), 1e-9);
  EXPECT_LT((m.cov - g.cov).norm(), 1e-8);
}

TEST(Grid, StaticGroundAutocorrelation) {
  auto s = ControlSchedule::constant({1.0, 2.0, 0.0}, 3.0);
  GaussianState g = make_initial_state(product_ground(), s(0.0));
  GridWavefunction psi = GridWavefunction::from_gaussian(g, square(128, 8.0));
  GridRun run = propagate_grid(s, psi, uniform_grid(3.0, 7), 0.01);
  std::complex<double> a = psi.overlap(run.final_state);
  EXPECT_NEAR(std::abs(a), 1.0, 1e-6);
  for (double n : run.norms) EXPECT_NEAR(n, 1.0, 1e-10);
  EXPECT_FALSE(run.boundary_leak);
}

TEST(Grid, MatchesMomentsOnDeflection) {
  DeflectionProtocol p = design_deflection(quarter_turn(1.0));
  auto grid = uniform_grid(1.0, 101);
  GaussianState g = make_initial_state(packet(-4.0), p.schedule(0.0));
  auto mom = propagate_moments(p.schedule, g, grid);
  GridGeometry geo = auto_geometry(mom);
  GridRun run = propagate_grid(p.schedule, GridWavefunction::from_gaussian(g, geo), grid,
                               auto_time_step(p.schedule));
  ASSERT_FALSE(run.boundary_leak);
  auto a = observe_series(p.schedule, grid, mom, &p.reference);
  auto b = observe_series(p.schedule, grid, run.moments, &p.reference, &run.norms);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    auto rel = [](double x, double y) {
      return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1.0});
    };
    EXPECT_LT(rel(a[k].E_l, b[k].E_l), 1e-3);
    EXPECT_LT(rel(*a[k].E_t, *b[k].E_t), 1e-3);
    EXPECT_LT(rel(*a[k].I_exp, *b[k].I_exp), 1e-3);
    EXPECT_LT(std::abs(*a[k].G - *b[k].G), 1e-3 * std::max(1.0, std::abs(*a[k].G)));
  }
}

TEST(Grid, SecondOrderInTimeStep) {
  // Error against the exact moment trajectory for dt, dt/2, dt/4.
  DeflectionProtocol p = design_deflection(quarter_turn(1.0));
  const std::vector<double> times = {0.0, 1.0};
  GaussianState g = make_initial_state(packet(0.0), p.schedule(0.0));
  auto exact = propagate_moments(p.schedule, g, times);
  GridGeometry geo = square(256, 9.0);
  auto psi = GridWavefunction::from_gaussian(g, geo);
  std::vector<double> err;
  for (double dt : {0.04, 0.02, 0.01}) {
    GridRun r = propagate_grid(p.schedule, psi, times, dt);
    err.push_back((r.moments.back().cov - exact.back().cov).norm() +
                  (r.moments.back().mean - exact.back().mean).norm());
  }
  const double r1 = err[0] / err[1], r2 = err[1] / err[2];
  EXPECT_GT(r1, 3.0);
  EXPECT_LT(r1, 5.0);
  EXPECT_GT(r2, 3.0);
  EXPECT_LT(r2, 5.0);
}

TEST(Grid, LeakIsFlagged) {
  // A fast packet in a free guide walks out of a small box.
  auto s = guide(1.0, 1.0, 4.0);
  GaussianState g = make_initial_state(packet(0.0, 3.0), s(0.0));
  GridRun run = propagate_grid(s, GridWavefunction::from_gaussian(g, square(128, 6.0)),
                               uniform_grid(4.0, 41), 0.01);
  EXPECT_TRUE(run.boundary_leak);
  ASSERT_TRUE(run.leak_time.has_value());
  EXPECT_GT(*run.leak_time, 0.0);
}

TEST(Grid, AutoTimeStepRespectsThreshold) {
  auto s = ControlSchedule::constant({4.0, 9.0, 0.0}, 1.0);
  double dt = auto_time_step(s, 1e-3);
  EXPECT_LE(9.0 * dt * dt, 1e-3 * (1 + 1e-12));
  EXPECT_GT(9.0 * dt * dt, 0.5e-3);
}
