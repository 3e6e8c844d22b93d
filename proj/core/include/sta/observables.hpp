#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "sta/invariant.hpp"
#include "sta/model.hpp"
#include "sta/state.hpp"

namespace sta {

struct ObservableRecord {
  double t = 0.0;
  double omega1_sq = 0.0;
  double omega2_sq = 0.0;
  double gamma = 0.0;
  double theta = 0.0;
  double Omega_l_sq = 0.0;
  double Omega_t_sq = 0.0;
  double E_l = 0.0;                 // <p_l^2>/2
  std::optional<double> E_t;        // <p_t^2>/2 + Omega_t^2 <q_t^2>/2, when Omega_t^2 > 0
  std::optional<double> H1;         // w1 <a1^dag a1>, when w1^2 > 0
  std::optional<double> H2;
  double H_total = 0.0;
  std::optional<double> I_exp;      // needs a reference solution
  std::optional<std::complex<double>> G;
  std::optional<double> norm;       // grid engine only
  std::optional<double> R_t;        // (E_t - Omega_t/2) / Omega_t
};

ObservableRecord observables(const GaussianState& state, const ControlValues& controls,
                             double theta, double t,
                             const ReferencePoint* reference = nullptr);

// Evaluates a whole trajectory, keeping theta continuous along it.
std::vector<ObservableRecord> observe_series(const ControlSchedule& schedule,
                                             const std::vector<double>& times,
                                             const std::vector<GaussianState>& states,
                                             const ReferenceSolution* reference = nullptr,
                                             const std::vector<double>* norms = nullptr);

}  // namespace sta
