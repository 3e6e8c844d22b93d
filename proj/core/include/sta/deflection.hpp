#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sta/ansatz.hpp"
#include "sta/invariant.hpp"
#include "sta/model.hpp"

namespace sta {

// Which quadratic observable the invariant reduces to at a boundary time.
enum class BoundaryKind {
  longitudinal_momentum,  // u' = 0, u1 w1 = u2 w2
  transversal_momentum,   // u' = 0, u1 w2 = -u2 w1
  longitudinal_position,  // u = 0, u1' w1 = u2' w2
  transversal_position,   // u = 0, u1' w2 = -u2' w1
};

struct DeflectionSpec {
  WaveguideBoundary initial;
  Closure closure = Closure::gamma_const;
  std::optional<double> delta_theta;                // checked against Table 1
  std::optional<WaveguideBoundary> final_boundary;  // checked against Table 1
  std::optional<double> F;      // momentum scaling; exclusive with `ratio`
  std::optional<double> ratio;  // amplitude ratio, u2(0)/u2(t_f) for momentum kinds
  double tf = 1.0;
  BoundaryKind start_kind = BoundaryKind::longitudinal_momentum;
  BoundaryKind end_kind = BoundaryKind::longitudinal_momentum;
  double singularity_floor = 1e-6;  // relative to max |u_i|
  std::size_t reference_nodes = 2001;
};

struct SingularityReport {
  double min_abs_u1 = 0.0;
  double min_abs_u2 = 0.0;
  double t_min_u1 = 0.0;
  double t_min_u2 = 0.0;
  double floor = 0.0;
};

struct DeflectionProtocol {
  DeflectionSpec spec;
  WaveguideBoundary initial;
  WaveguideBoundary final_boundary;
  PolynomialAnsatz u1;
  PolynomialAnsatz u2;
  ControlSchedule schedule;
  ReferenceSolution reference;  // real, sampled from the polynomials
  double F = 1.0;
  double ratio = 1.0;
  SingularityReport singularity;
};

// Largest admissible mismatch between a requested deflection angle and the
// one implied by Table 1.
inline constexpr double kDeflectionAngleTolerance = 5e-3;

// Initial guide (w1, w2) whose Table 1 partner is rotated by delta_theta.
WaveguideBoundary initial_for_deflection_angle(double omega1, double delta_theta);

DeflectionProtocol design_deflection(const DeflectionSpec& spec);

// Rebuilds a protocol from stored polynomials without re-solving.
DeflectionProtocol assemble_deflection(const DeflectionSpec& spec, PolynomialAnsatz u1,
                                       PolynomialAnsatz u2);

ControlSchedule deflection_schedule(const PolynomialAnsatz& u1, const PolynomialAnsatz& u2,
                                    Closure closure, const WaveguideBoundary& initial,
                                    BoundaryKind start_kind, BoundaryKind end_kind);

double scaling_factor(double u2_0, double u2_tf, double theta_0, double theta_tf);

struct InvariantForm {
  std::string quadrature;  // "p_l", "p_t", "q_l" or "q_t"
  std::string observable;  // e.g. "p_l^2/2"
  double amplitude;        // G = amplitude * quadrature
  double prefactor;        // I = prefactor * observable
};

InvariantForm boundary_invariant_form(BoundaryKind kind, const std::array<double, 2>& u,
                                      const std::array<double, 2>& du, double theta);

struct Expansion1D {
  PolynomialAnsatz rho;
  double K = 1.0;
  double omega_initial = 1.0;
  double omega_final = 1.0;

  double omega_sq(double t) const;
  double duration() const { return rho.duration(); }
  // Two-mode schedule with a static spectator in mode 1 and no coupling.
  ControlSchedule schedule(double spectator_omega = 1.0) const;
};

Expansion1D design_1d_expansion(double omega_initial, double omega_final, double tf);

std::string to_string(BoundaryKind kind);
BoundaryKind boundary_kind_from_string(const std::string& name);
std::string to_string(Closure closure);
Closure closure_from_string(const std::string& name);

}  // namespace sta
