#include "sta/moments.hpp"

#include <algorithm>
#include <cmath>

#include "sta/error.hpp"

namespace sta {
namespace {

using State = std::array<double, 20>;

Eigen::Matrix4d drift(const ControlValues& v) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 2) = 1.0;
  m(1, 3) = 1.0;
  m(2, 0) = -v.omega1_sq;
  m(2, 1) = v.gamma;
  m(3, 0) = v.gamma;
  m(3, 1) = -v.omega2_sq;
  return m;
}

void pack(const GaussianState& g, State& s) {
  for (int i = 0; i < 4; ++i) s[i] = g.mean(i);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s[4 + 4 * i + j] = g.cov(i, j);
}

GaussianState unpack(const State& s) {
  GaussianState g;
  for (int i = 0; i < 4; ++i) g.mean(i) = s[i];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g.cov(i, j) = s[4 + 4 * i + j];
  g.cov = 0.5 * (g.cov + g.cov.transpose()).eval();
  return g;
}

}  // namespace

Eigen::Vector2d symplectic_eigenvalues(const Eigen::Matrix4d& cov) {
  Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
  j.topRightCorner<2, 2>() = Eigen::Matrix2d::Identity();
  j.bottomLeftCorner<2, 2>() = -Eigen::Matrix2d::Identity();
  Eigen::EigenSolver<Eigen::Matrix4d> es(j * cov);
  Eigen::Vector4d mags;
  for (int i = 0; i < 4; ++i) mags(i) = std::abs(es.eigenvalues()(i).imag());
  std::sort(mags.data(), mags.data() + 4);
  return {0.5 * (mags(0) + mags(1)), 0.5 * (mags(2) + mags(3))};
}

std::vector<GaussianState> propagate_moments(const ControlSchedule& schedule,
                                             const GaussianState& initial,
                                             const std::vector<double>& times,
                                             const OdeOptions& opt) {
  State x{};
  pack(initial, x);
  auto rhs = [&](const State& s, State& ds, double t) {
    Eigen::Matrix4d m = drift(schedule(t));
    Eigen::Map<const Eigen::Vector4d> mean(s.data());
    Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>> cov(s.data() + 4);
    Eigen::Map<Eigen::Vector4d> dmean(ds.data());
    Eigen::Map<Eigen::Matrix<double, 4, 4, Eigen::RowMajor>> dcov(ds.data() + 4);
    dmean = m * mean;
    Eigen::Matrix4d mc = m * cov;
    dcov = mc + mc.transpose();
  };
  std::vector<GaussianState> out;
  out.reserve(times.size());
  integrate_at(rhs, x, times, opt, [&](const State& s, double) { out.push_back(unpack(s)); });
  return out;
}

GaussianState make_initial_state(const InitialStateSpec& spec, const ControlValues& at0) {
  GaussianState g;
  g.cov.setZero();
  switch (spec.kind) {
    case InitialKind::waveguide_packet: {
      NormalModeFrame f = normal_modes(at0.omega1_sq, at0.omega2_sq, at0.gamma);
      double scale = std::max(1.0, std::abs(f.Omega_t_sq));
      if (std::abs(f.Omega_l_sq) > 1e-8 * scale)
        throw ConfigError("waveguide packet needs a waveguide at t=0 (Omega_l^2 = " +
                          std::to_string(f.Omega_l_sq) + ")");
      if (!(spec.sigma > 0.0)) throw ConfigError("packet width sigma must be positive");
      const double wt = std::sqrt(f.Omega_t_sq);
      Eigen::Matrix4d rot_cov = Eigen::Matrix4d::Zero();
      rot_cov(0, 0) = spec.sigma * spec.sigma;
      rot_cov(1, 1) = 1.0 / (2.0 * wt);
      rot_cov(2, 2) = 1.0 / (4.0 * spec.sigma * spec.sigma);
      rot_cov(3, 3) = wt / 2.0;
      Eigen::Matrix4d r = rotation_matrix(f.theta);
      g.mean = r.transpose() * PhaseVector(spec.q_l0, 0.0, spec.p_l0, 0.0);
      g.cov = r.transpose() * rot_cov * r;
      break;
    }
    case InitialKind::uncoupled_product_ground:
    case InitialKind::coherent_mode1: {
      if (!(at0.omega1_sq > 0.0) || !(at0.omega2_sq > 0.0))
        throw ConfigError("uncoupled ground states need positive squared frequencies");
      const double w1 = std::sqrt(at0.omega1_sq), w2 = std::sqrt(at0.omega2_sq);
      g.cov.diagonal() << 0.5 / w1, 0.5 / w2, 0.5 * w1, 0.5 * w2;
      g.mean.setZero();
      if (spec.kind == InitialKind::coherent_mode1) {
        g.mean(0) = std::sqrt(2.0 / w1) * spec.alpha.real();
        g.mean(2) = std::sqrt(2.0 * w1) * spec.alpha.imag();
      }
      break;
    }
  }
  return g;
}

double gaussian_fidelity(const GaussianState& a, const GaussianState& b) {
  Eigen::Matrix4d s = a.cov + b.cov;
  Eigen::Vector4d d = a.mean - b.mean;
  double q = d.dot(s.ldlt().solve(d));
  return std::exp(-0.5 * q) / std::sqrt(s.determinant());
}

}  // namespace sta
