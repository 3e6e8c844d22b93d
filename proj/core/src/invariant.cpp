#include "sta/invariant.hpp"

#include <algorithm>
#include <cmath>

#include "sta/error.hpp"

namespace sta {

CPair reference_acceleration(const ControlValues& v, const CPair& u) {
  return {-v.omega1_sq * u[0] + v.gamma * u[1], -v.omega2_sq * u[1] + v.gamma * u[0]};
}

double eq7_residual(const ControlValues& v, const CPair& u, const CPair& ddu) {
  double r1 = std::abs(ddu[0] + v.omega1_sq * u[0] - v.gamma * u[1]);
  double r2 = std::abs(ddu[1] + v.omega2_sq * u[1] - v.gamma * u[0]);
  return std::max(r1, r2);
}

ReferenceSolution::ReferenceSolution(ControlSchedule schedule,
                                     std::vector<ReferencePoint> nodes)
    : schedule_(std::move(schedule)), nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw ConfigError("reference solution needs two or more nodes");
}

ReferencePoint ReferenceSolution::at(double t) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t,
                             [](const ReferencePoint& p, double x) { return p.t < x; });
  if (it != nodes_.end() && it->t == t) return *it;
  if (it == nodes_.begin()) {
    if (t < nodes_.front().t - 1e-12 * std::max(1.0, duration()))
      throw ConfigError("reference evaluated before its first node");
    return nodes_.front();
  }
  if (it == nodes_.end()) {
    if (t > nodes_.back().t + 1e-12 * std::max(1.0, duration()))
      throw ConfigError("reference evaluated past its last node");
    return nodes_.back();
  }
  const ReferencePoint& a = *(it - 1);
  const ReferencePoint& b = *it;
  const double h = b.t - a.t;
  const double s = (t - a.t) / h;
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  const double h0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
  const double h1 = s - 6 * s3 + 8 * s4 - 3 * s5;
  const double h2 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5);
  const double h3 = 10 * s3 - 15 * s4 + 6 * s5;
  const double h4 = -4 * s3 + 7 * s4 - 3 * s5;
  const double h5 = 0.5 * (s3 - 2 * s4 + s5);
  const double d0 = -30 * s2 + 60 * s3 - 30 * s4;
  const double d1 = 1 - 18 * s2 + 32 * s3 - 15 * s4;
  const double d2 = 0.5 * (2 * s - 9 * s2 + 12 * s3 - 5 * s4);
  const double d3 = 30 * s2 - 60 * s3 + 30 * s4;
  const double d4 = -12 * s2 + 28 * s3 - 15 * s4;
  const double d5 = 0.5 * (3 * s2 - 8 * s3 + 5 * s4);
  ReferencePoint p;
  p.t = t;
  for (int i = 0; i < 2; ++i) {
    p.u[i] = h0 * a.u[i] + h * h1 * a.du[i] + h * h * h2 * a.ddu[i] + h3 * b.u[i] +
             h * h4 * b.du[i] + h * h * h5 * b.ddu[i];
    p.du[i] = (d0 * a.u[i] + h * d1 * a.du[i] + h * h * d2 * a.ddu[i] + d3 * b.u[i] +
               h * d4 * b.du[i] + h * h * d5 * b.ddu[i]) /
              h;
  }
  p.ddu = reference_acceleration(schedule_(t), p.u);
  return p;
}

bool ReferenceSolution::is_real(double tol) const {
  for (const auto& p : nodes_)
    for (int i = 0; i < 2; ++i)
      if (std::abs(p.u[i].imag()) > tol || std::abs(p.du[i].imag()) > tol) return false;
  return true;
}

double ReferenceSolution::consistency_residual() const {
  const std::size_t n = nodes_.size();
  if (n < 5) return 0.0;
  const double h = nodes_[1].t - nodes_[0].t;
  for (std::size_t k = 1; k < n; ++k)
    if (std::abs((nodes_[k].t - nodes_[k - 1].t) - h) > 1e-9 * h)
      throw ConfigError("consistency residual needs a uniform grid");
  double scale = 0.0;
  for (const auto& p : nodes_)
    for (int i = 0; i < 2; ++i) scale = std::max(scale, std::abs(p.ddu[i]));
  scale = std::max(scale, 1.0);
  double worst = 0.0;
  for (std::size_t k = 2; k + 2 < n; ++k)
    for (int i = 0; i < 2; ++i) {
      cplx fd = (-nodes_[k + 2].du[i] + 8.0 * nodes_[k + 1].du[i] -
                 8.0 * nodes_[k - 1].du[i] + nodes_[k - 2].du[i]) /
                (12.0 * h);
      worst = std::max(worst, std::abs(fd - nodes_[k].ddu[i]) / scale);
    }
  return worst;
}

ReferenceSolution integrate_reference(const ControlSchedule& schedule, const CPair& u0,
                                      const CPair& du0, const std::vector<double>& grid,
                                      const OdeOptions& opt) {
  if (grid.size() < 2) throw ConfigError("reference grid needs two or more points");
  using State = std::array<double, 8>;
  // Layout: Re u1, Im u1, Re u2, Im u2, then the same for u'.
  State x{u0[0].real(), u0[0].imag(), u0[1].real(), u0[1].imag(),
          du0[0].real(), du0[0].imag(), du0[1].real(), du0[1].imag()};
  auto rhs = [&](const State& s, State& ds, double t) {
    ControlValues v = schedule(t);
    for (int k = 0; k < 4; ++k) ds[k] = s[4 + k];
    for (int c = 0; c < 2; ++c) {
      ds[4 + c] = -v.omega1_sq * s[c] + v.gamma * s[2 + c];
      ds[6 + c] = -v.omega2_sq * s[2 + c] + v.gamma * s[c];
    }
  };
  std::vector<ReferencePoint> nodes;
  nodes.reserve(grid.size());
  integrate_at(rhs, x, grid, opt, [&](const State& s, double t) {
    ReferencePoint p;
    p.t = t;
    p.u = {cplx(s[0], s[1]), cplx(s[2], s[3])};
    p.du = {cplx(s[4], s[5]), cplx(s[6], s[7])};
    p.ddu = reference_acceleration(schedule(t), p.u);
    nodes.push_back(p);
  });
  return ReferenceSolution(schedule, std::move(nodes));
}

InvariantFrame invariant_frame(const ReferencePoint& p) {
  InvariantFrame f;
  f.c << -p.du[0], -p.du[1], p.u[0], p.u[1];
  f.symplectic = symplectic_constant(p);
  return f;
}

cplx linear_invariant_expectation(const GaussianState& s, const ReferencePoint& p) {
  const auto& m = s.mean;
  return p.u[0] * m(2) - p.du[0] * m(0) + p.u[1] * m(3) - p.du[1] * m(1);
}

cplx linear_invariant_expectation(const GaussianState& s, const ReferenceSolution& ref,
                                  double t) {
  return linear_invariant_expectation(s, ref.at(t));
}

double quadratic_invariant_expectation(const GaussianState& s, const ReferencePoint& p) {
  // <x_k x_l> = S_kl + (i/2) J_kl, and c^dagger J c = 2 i Im(sum u_i* u_i').
  InvariantFrame f = invariant_frame(p);
  Eigen::Matrix4d second = s.second_moments();
  cplx quad = (f.c.adjoint() * second.cast<cplx>() * f.c).value();
  return 0.5 * (quad.real() - f.symplectic);
}

double quadratic_invariant_expectation(const GaussianState& s,
                                       const ReferenceSolution& ref, double t) {
  return quadratic_invariant_expectation(s, ref.at(t));
}

std::array<double, 2> wronskians(const ReferencePoint& p, const Eigen::Vector4d& mean) {
  return {p.u[0].real() * mean(2) - p.du[0].real() * mean(0),
          p.u[1].real() * mean(3) - p.du[1].real() * mean(1)};
}

double wronskian_sum(const ReferenceSolution& ref, const Eigen::Vector4d& mean,
                     double t) {
  ReferencePoint p = ref.at(t);
  for (int i = 0; i < 2; ++i)
    if (p.u[i].imag() != 0.0 || p.du[i].imag() != 0.0)
      throw ConfigError("wronskian_sum needs a real reference solution");
  auto w = wronskians(p, mean);
  return w[0] + w[1];
}

double symplectic_constant(const ReferencePoint& p) {
  return (std::conj(p.u[0]) * p.du[0] + std::conj(p.u[1]) * p.du[1]).imag();
}

double symplectic_constant(const ReferenceSolution& ref, double t) {
  return symplectic_constant(ref.at(t));
}

}  // namespace sta
