#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "sta/deflection.hpp"
#include "sta/model.hpp"
#include "sta/moments.hpp"
#include "sta/transfer.hpp"

namespace sta::testing {

inline constexpr double kPi = std::numbers::pi;

// Guide (1, 2.41) rotated by a quarter turn with the gamma_const closure.
inline DeflectionSpec quarter_turn(double tf, double F = 1.0,
                                   Closure closure = Closure::gamma_const) {
  DeflectionSpec s;
  s.initial = waveguide_boundary(1.0, 2.41);
  s.closure = closure;
  s.delta_theta = kPi / 4;
  s.F = F;
  s.tf = tf;
  return s;
}

inline InitialStateSpec packet(double q_l0, double p_l0 = 1.0,
                               double sigma = 1.0 / std::sqrt(2.0)) {
  InitialStateSpec s;
  s.kind = InitialKind::waveguide_packet;
  s.q_l0 = q_l0;
  s.p_l0 = p_l0;
  s.sigma = sigma;
  return s;
}

// Swap of (1, 0.9) squared frequencies with constant-end coupling gamma_b.
inline TransferSpec swap_spec(double gamma_b, double tf = 4.0) {
  TransferSpec s;
  s.omega1_0 = 1.0;
  s.omega2_0 = std::sqrt(0.9);
  s.omega1_f = std::sqrt(0.9);
  s.omega2_f = 1.0;
  s.gamma_0 = gamma_b;
  s.gamma_f = gamma_b;
  s.tf = tf;
  return s;
}

// <p_l^2>/2 straight from the covariance, rotating by hand.
inline double longitudinal_energy(const GaussianState& g, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double mp = c * g.mean(2) + s * g.mean(3);
  const double var = c * c * g.cov(2, 2) + 2 * c * s * g.cov(2, 3) + s * s * g.cov(3, 3);
  return 0.5 * (var + mp * mp);
}

inline double relative(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double sample_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size() - 1);
}

}  // namespace sta::testing
