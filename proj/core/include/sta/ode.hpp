#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "sta/error.hpp"

namespace sta {

struct OdeOptions {
  enum class Method { adaptive, fixed_rk4 };
  Method method = Method::adaptive;
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  std::size_t fixed_steps = 10000;  // over the whole time span, fixed_rk4 only
  std::size_t max_steps = 5'000'000;
};

// Integrates x' = rhs(x, t) and calls obs(x, t) at every entry of `times`
// (which must be increasing, starting at the initial time).
template <std::size_t N, class Rhs, class Obs>
void integrate_at(Rhs&& rhs, std::array<double, N>& x, const std::vector<double>& times,
                  const OdeOptions& opt, Obs&& obs) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, N>;
  if (times.empty()) return;
  double last_t = times.front();
  auto sys = [&](const State& s, State& ds, double t) { rhs(s, ds, t); };
  auto observer = [&](const State& s, double t) {
    for (double v : s)
      if (!std::isfinite(v))
        throw SimulationError("integration produced a non-finite state at t=" +
                                  std::to_string(t),
                              t);
    last_t = t;
    obs(s, t);
  };
  if (opt.method == OdeOptions::Method::fixed_rk4) {
    odeint::runge_kutta4<State> stepper;
    const double span = times.back() - times.front();
    const double h = span > 0 ? span / static_cast<double>(opt.fixed_steps) : 0.0;
    observer(x, times.front());
    for (std::size_t i = 1; i < times.size(); ++i) {
      double t = times[i - 1];
      double len = times[i] - t;
      auto n = static_cast<std::size_t>(std::ceil(len / h - 1e-9));
      if (n == 0) n = 1;
      double dt = len / static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) {
        stepper.do_step(sys, x, t, dt);
        t = times[i - 1] + static_cast<double>(k + 1) * dt;
      }
      observer(x, times[i]);
    }
    return;
  }
  auto stepper = odeint::make_dense_output(opt.abs_tol, opt.rel_tol,
                                           odeint::runge_kutta_dopri5<State>());
  double dt0 = times.size() > 1 ? (times[1] - times[0]) * 0.1 : 1e-3;
  if (!(dt0 > 0)) dt0 = 1e-3;
  try {
    odeint::integrate_times(stepper, sys, x, times.begin(), times.end(), dt0, observer,
                            odeint::max_step_checker(opt.max_steps));
  } catch (const odeint::no_progress_error&) {
    throw SimulationError("step-size underflow near t=" + std::to_string(last_t), last_t);
  } catch (const odeint::step_adjustment_error&) {
    throw SimulationError("step-size underflow near t=" + std::to_string(last_t), last_t);
  }
}

}  // namespace sta
