#include "sta/observables.hpp"

#include <cmath>

#include "sta/error.hpp"

namespace sta {

ObservableRecord observables(const GaussianState& state, const ControlValues& v,
                             double theta, double t, const ReferencePoint* reference) {
  ObservableRecord r;
  r.t = t;
  r.omega1_sq = v.omega1_sq;
  r.omega2_sq = v.omega2_sq;
  r.gamma = v.gamma;
  r.theta = theta;
  NormalModeFrame f = normal_modes(v.omega1_sq, v.omega2_sq, v.gamma);
  r.Omega_l_sq = f.Omega_l_sq;
  r.Omega_t_sq = f.Omega_t_sq;

  const Eigen::Matrix4d s = state.second_moments();
  const Eigen::Matrix4d rot = rotation_matrix(theta);
  const Eigen::Matrix4d sr = rot * s * rot.transpose();
  r.E_l = 0.5 * sr(2, 2);
  if (f.Omega_t_sq > 0.0) {
    r.E_t = 0.5 * sr(3, 3) + 0.5 * f.Omega_t_sq * sr(1, 1);
    const double wt = std::sqrt(f.Omega_t_sq);
    r.R_t = (*r.E_t - 0.5 * wt) / wt;
  }
  if (v.omega1_sq > 0.0)
    r.H1 = 0.5 * (s(2, 2) + v.omega1_sq * s(0, 0)) - 0.5 * std::sqrt(v.omega1_sq);
  if (v.omega2_sq > 0.0)
    r.H2 = 0.5 * (s(3, 3) + v.omega2_sq * s(1, 1)) - 0.5 * std::sqrt(v.omega2_sq);
  r.H_total = 0.5 * (s(2, 2) + s(3, 3)) + 0.5 * v.omega1_sq * s(0, 0) +
              0.5 * v.omega2_sq * s(1, 1) - v.gamma * s(0, 1);
  if (reference) {
    r.I_exp = quadratic_invariant_expectation(state, *reference);
    r.G = linear_invariant_expectation(state, *reference);
  }
  return r;
}

std::vector<ObservableRecord> observe_series(const ControlSchedule& schedule,
                                             const std::vector<double>& times,
                                             const std::vector<GaussianState>& states,
                                             const ReferenceSolution* reference,
                                             const std::vector<double>* norms) {
  if (times.size() != states.size())
    throw ConfigError("observe_series: times and states differ in length");
  ThetaTracker tracker;
  std::vector<ObservableRecord> out;
  out.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const ControlValues v = schedule(times[k]);
    const double theta = tracker.unwrap(v);
    std::optional<ReferencePoint> p;
    if (reference) p = reference->at(times[k]);
    out.push_back(observables(states[k], v, theta, times[k], p ? &*p : nullptr));
    if (norms) out.back().norm = (*norms)[k];
  }
  return out;
}

}  // namespace sta
