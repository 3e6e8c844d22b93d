#pragma once

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "sta/model.hpp"
#include "sta/ode.hpp"
#include "sta/state.hpp"

namespace sta {

using cplx = std::complex<double>;
using CPair = std::array<cplx, 2>;

struct ReferencePoint {
  double t = 0.0;
  CPair u{};
  CPair du{};
  CPair ddu{};  // from the equations of motion, never differentiated
};

// u_i'' = -w_i^2 u_i + gamma u_j
CPair reference_acceleration(const ControlValues& v, const CPair& u);

// Max of |u1'' + w1^2 u1 - gamma u2| and its 1<->2 counterpart.
double eq7_residual(const ControlValues& v, const CPair& u, const CPair& ddu);

class ReferenceSolution {
 public:
  ReferenceSolution() = default;
  ReferenceSolution(ControlSchedule schedule, std::vector<ReferencePoint> nodes);

  // Quintic Hermite interpolation between nodes; exact at nodes.
  ReferencePoint at(double t) const;

  const std::vector<ReferencePoint>& nodes() const { return nodes_; }
  const ControlSchedule& schedule() const { return schedule_; }
  double duration() const { return schedule_.duration(); }
  bool is_real(double tol = 0.0) const;

  // Largest mismatch between the stored u'' and a five-point difference of
  // the stored u' at interior nodes of a uniform grid, scaled by max |u''|.
  double consistency_residual() const;

 private:
  ControlSchedule schedule_;
  std::vector<ReferencePoint> nodes_;
};

ReferenceSolution integrate_reference(const ControlSchedule& schedule, const CPair& u0,
                                      const CPair& du0, const std::vector<double>& grid,
                                      const OdeOptions& opt = {});

struct InvariantFrame {
  Eigen::Vector4cd c;  // G = sum c_k x_k over (q1, q2, p1, p2)
  double symplectic;   // Im(u1* u1' + u2* u2')
};

InvariantFrame invariant_frame(const ReferencePoint& p);

cplx linear_invariant_expectation(const GaussianState& s, const ReferencePoint& p);
cplx linear_invariant_expectation(const GaussianState& s, const ReferenceSolution& ref,
                                  double t);

// <G^dagger G>/2 with the commutator constant kept explicitly.
double quadratic_invariant_expectation(const GaussianState& s, const ReferencePoint& p);
double quadratic_invariant_expectation(const GaussianState& s,
                                       const ReferenceSolution& ref, double t);

// W_i = u_i <p_i> - u_i' <q_i> for a real reference.
std::array<double, 2> wronskians(const ReferencePoint& p, const Eigen::Vector4d& mean);
double wronskian_sum(const ReferenceSolution& ref, const Eigen::Vector4d& mean, double t);

double symplectic_constant(const ReferencePoint& p);
double symplectic_constant(const ReferenceSolution& ref, double t);

}  // namespace sta
