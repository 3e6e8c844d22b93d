#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "sta/deflection.hpp"
#include "sta/error.hpp"
#include "sta/grid.hpp"
#include "sta/invariant.hpp"
#include "sta/moments.hpp"

namespace sta::testing {

struct ConservationSample {
  DeflectionSpec spec;
  InitialStateSpec initial;
  double G_drift = 0.0;
  double wronskian_drift = 0.0;
  double symplectic_drift = 0.0;
  double eq7_residual = 0.0;
  double grid_norm_drift = 0.0;
  double replay_mismatch = 0.0;  // integrated reference vs designed polynomials
};

// Random admissible deflection protocols; rejected draws are skipped.
inline std::vector<DeflectionSpec> random_deflections(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  std::vector<DeflectionSpec> out;
  while (out.size() < count) {
    DeflectionSpec s;
    s.initial = waveguide_boundary(u(0.6, 1.6), u(1.2, 4.0));
    s.closure = u(0, 1) < 0.5 ? Closure::gamma_const : Closure::omega2_const;
    if (u(0, 1) < 0.5)
      s.F = u(0.5, 2.5);
    else
      s.ratio = u(0.2, 1.5);
    s.tf = u(0.8, 8.0);
    try {
      design_deflection(s);
    } catch (const Error&) {
      continue;
    }
    out.push_back(s);
  }
  return out;
}

inline ConservationSample measure_conservation(const DeflectionSpec& spec, std::uint64_t seed,
                                               bool with_grid = true) {
  std::mt19937_64 rng(seed);
  auto u = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  ConservationSample out;
  out.spec = spec;
  DeflectionProtocol p = design_deflection(spec);
  out.initial.kind = InitialKind::waveguide_packet;
  out.initial.q_l0 = u(-3, 3);
  out.initial.p_l0 = u(-1.5, 1.5);
  out.initial.sigma = u(0.4, 1.0);
  GaussianState g0 = make_initial_state(out.initial, p.schedule(0.0));

  auto times = uniform_grid(spec.tf, 201);
  auto states = propagate_moments(p.schedule, g0, times);
  const std::complex<double> G0 = linear_invariant_expectation(states[0], p.reference, 0.0);
  const double W0 = wronskian_sum(p.reference, states[0].mean, 0.0);
  for (std::size_t k = 0; k < times.size(); ++k) {
    auto G = linear_invariant_expectation(states[k], p.reference, times[k]);
    out.G_drift = std::max(out.G_drift, std::abs(G - G0) / std::max(std::abs(G0), 1.0));
    double W = wronskian_sum(p.reference, states[k].mean, times[k]);
    out.wronskian_drift = std::max(out.wronskian_drift, std::abs(W - W0) / std::max(std::abs(W0), 1.0));
  }

  // Designed polynomials against the equations of motion.
  double scale = 1.0;
  std::vector<double> res;
  for (double t : uniform_grid(spec.tf, 2001)) {
    ControlValues v = p.schedule(t);
    double u1 = evaluate(p.u1, t), u2 = evaluate(p.u2, t);
    double a1 = evaluate(p.u1, t, 2), a2 = evaluate(p.u2, t, 2);
    scale = std::max({scale, std::abs(a1), std::abs(a2)});
    res.push_back(std::max(std::abs(a1 + v.omega1_sq * u1 - v.gamma * u2),
                           std::abs(a2 + v.omega2_sq * u2 - v.gamma * u1)));
  }
  out.eq7_residual = *std::max_element(res.begin(), res.end()) / scale;

  // A complex reference integrated under the designed controls.
  using cd = std::complex<double>;
  CPair z0 = {cd(u(-1, 1), u(-1, 1)), cd(u(-1, 1), u(-1, 1))};
  CPair dz0 = {cd(u(-1, 1), u(-1, 1)), cd(u(-1, 1), u(-1, 1))};
  ReferenceSolution z = integrate_reference(p.schedule, z0, dz0, times);
  const double S0 = symplectic_constant(z.nodes().front());
  for (const auto& n : z.nodes())
    out.symplectic_drift = std::max(out.symplectic_drift,
                                    std::abs(symplectic_constant(n) - S0) / std::max(std::abs(S0), 1.0));

  CPair r0 = {cd(evaluate(p.u1, 0.0)), cd(evaluate(p.u2, 0.0))};
  CPair dr0 = {cd(evaluate(p.u1, 0.0, 1)), cd(evaluate(p.u2, 0.0, 1))};
  ReferenceSolution replay = integrate_reference(p.schedule, r0, dr0, times);
  double umax = 0.0;
  for (const auto& n : replay.nodes()) {
    umax = std::max({umax, std::abs(evaluate(p.u1, n.t)), std::abs(evaluate(p.u2, n.t))});
    out.replay_mismatch = std::max({out.replay_mismatch,
                                    std::abs(n.u[0].real() - evaluate(p.u1, n.t)),
                                    std::abs(n.u[1].real() - evaluate(p.u2, n.t))});
  }
  out.replay_mismatch /= umax;

  if (with_grid) {
    GridGeometry geo = auto_geometry(states, 64, 1.25, 6.0, 128);
    auto coarse = uniform_grid(spec.tf, 21);
    GridRun run = propagate_grid(p.schedule, GridWavefunction::from_gaussian(g0, geo), coarse,
                                 auto_time_step(p.schedule));
    for (double n : run.norms)
      out.grid_norm_drift = std::max(out.grid_norm_drift, std::abs(n - run.norms.front()));
  }
  return out;
}

}  // namespace sta::testing
