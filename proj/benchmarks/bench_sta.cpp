#include <cmath>
#include <numbers>

#include <benchmark/benchmark.h>

#include "sta/deflection.hpp"
#include "sta/grid.hpp"
#include "sta/moments.hpp"
#include "sta/observables.hpp"
#include "sta/transfer.hpp"

using namespace sta;

namespace {

DeflectionSpec quarter_turn(double tf) {
  DeflectionSpec s;
  s.initial = waveguide_boundary(1.0, 2.41);
  s.closure = Closure::gamma_const;
  s.delta_theta = std::numbers::pi / 4;
  s.F = 1.0;
  s.tf = tf;
  return s;
}

InitialStateSpec packet(double q) {
  InitialStateSpec s;
  s.kind = InitialKind::waveguide_packet;
  s.q_l0 = q;
  s.p_l0 = 1.0;
  return s;
}

TransferSpec swap(double gamma_b) {
  TransferSpec s;
  s.omega1_0 = 1.0;
  s.omega2_0 = std::sqrt(0.9);
  s.omega1_f = std::sqrt(0.9);
  s.omega2_f = 1.0;
  s.gamma_0 = gamma_b;
  s.gamma_f = gamma_b;
  s.tf = 4.0;
  return s;
}

void BM_PolynomialEvaluate(benchmark::State& state) {
  DeflectionProtocol p = design_deflection(quarter_turn(2.0));
  double t = 0.0, acc = 0.0;
  for (auto _ : state) {
    acc += evaluate(p.u1, t, 2);
    t = t < 2.0 ? t + 1e-4 : 0.0;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_PolynomialEvaluate);

void BM_ScheduleEvaluate(benchmark::State& state) {
  DeflectionProtocol p = design_deflection(quarter_turn(2.0));
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(p.schedule(t));
    t = t < 2.0 ? t + 1e-4 : 0.0;
  }
}
BENCHMARK(BM_ScheduleEvaluate);

void BM_DesignDeflection(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(design_deflection(quarter_turn(2.0)));
}
BENCHMARK(BM_DesignDeflection)->Unit(benchmark::kMicrosecond);

void BM_MomentRun(benchmark::State& state) {
  const double tf = static_cast<double>(state.range(0));
  DeflectionProtocol p = design_deflection(quarter_turn(tf));
  GaussianState g = make_initial_state(packet(-4.0), p.schedule(0.0));
  auto grid = uniform_grid(tf, 401);
  for (auto _ : state) {
    auto states = propagate_moments(p.schedule, g, grid);
    benchmark::DoNotOptimize(observe_series(p.schedule, grid, states, &p.reference));
  }
}
BENCHMARK(BM_MomentRun)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_GridSteps(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  DeflectionProtocol p = design_deflection(quarter_turn(1.0));
  GaussianState g = make_initial_state(packet(0.0), p.schedule(0.0));
  GridGeometry geom{n, n, 12.0, 12.0};
  GridWavefunction psi = GridWavefunction::from_gaussian(g, geom);
  const std::vector<double> times = {0.0, 0.01};
  for (auto _ : state) benchmark::DoNotOptimize(propagate_grid(p.schedule, psi, times, 1e-3));
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_GridSteps)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_TransferResiduals(benchmark::State& state) {
  TransferSpec s = swap(6.0);
  const std::array<double, 3> x = {-0.854387, -0.238407, -0.238407};
  for (auto _ : state) benchmark::DoNotOptimize(transfer_residuals(s, x));
}
BENCHMARK(BM_TransferResiduals)->Unit(benchmark::kMicrosecond);

void BM_ShootTransfer(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(shoot_transfer(swap(6.0)));
}
BENCHMARK(BM_ShootTransfer)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
