#pragma once

#include <complex>
#include <vector>

#include "sta/model.hpp"
#include "sta/ode.hpp"
#include "sta/state.hpp"

namespace sta {

// Means follow Hamilton's equations; the covariance obeys
// S' = M S + S M^T with M = [[0, I], [-V, 0]].
std::vector<GaussianState> propagate_moments(const ControlSchedule& schedule,
                                             const GaussianState& initial,
                                             const std::vector<double>& times,
                                             const OdeOptions& opt = {});

enum class InitialKind { waveguide_packet, uncoupled_product_ground, coherent_mode1 };

struct InitialStateSpec {
  InitialKind kind = InitialKind::uncoupled_product_ground;
  double q_l0 = 0.0;
  double p_l0 = 0.0;
  double sigma = 0.70710678118654752;  // longitudinal position width
  std::complex<double> alpha{1.0, 0.0};
};

// Requires a waveguide at t = 0 for the packet kind and positive squared
// frequencies for the other two.
GaussianState make_initial_state(const InitialStateSpec& spec, const ControlValues& at0);

// Overlap Tr(rho1 rho2) of two Gaussian states; the fidelity for pure states.
double gaussian_fidelity(const GaussianState& a, const GaussianState& b);

}  // namespace sta
