#include "sta/model.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "sta/error.hpp"

namespace sta {
namespace {

class FunctionSource final : public ScheduleSource {
 public:
  explicit FunctionSource(std::function<ControlValues(double)> f) : f_(std::move(f)) {}
  ControlValues at(double t) const override { return f_(t); }

 private:
  std::function<ControlValues(double)> f_;
};

class SampledSource final : public ScheduleSource {
  using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

 public:
  SampledSource(const std::vector<ControlValues>& s, double tf) {
    std::vector<double> a, b, c;
    for (const auto& v : s) {
      a.push_back(v.omega1_sq);
      b.push_back(v.omega2_sq);
      c.push_back(v.gamma);
    }
    double h = tf / static_cast<double>(s.size() - 1);
    w1_ = Spline(a.begin(), a.end(), 0.0, h);
    w2_ = Spline(b.begin(), b.end(), 0.0, h);
    g_ = Spline(c.begin(), c.end(), 0.0, h);
  }
  ControlValues at(double t) const override { return {w1_(t), w2_(t), g_(t)}; }

 private:
  Spline w1_, w2_, g_;
};

}  // namespace

NormalModeFrame normal_modes(double omega1_sq, double omega2_sq, double gamma) {
  const double delta = omega2_sq - omega1_sq;
  const double lambda = std::hypot(2.0 * gamma, delta);
  const double trace = omega1_sq + omega2_sq;
  const double det = omega1_sq * omega2_sq - gamma * gamma;
  NormalModeFrame f{};
  f.Lambda = lambda;
  f.theta = 0.5 * std::atan2(2.0 * gamma, delta);
  f.Omega_t_sq = 0.5 * (trace + lambda);
  // The product form avoids cancellation when the lower mode is nearly flat.
  f.Omega_l_sq = trace > 0.0 && f.Omega_t_sq > 0.0 ? det / f.Omega_t_sq
                                                   : 0.5 * (trace - lambda);
  return f;
}

Eigen::Matrix4d rotation_matrix(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d a;
  a << c, s, -s, c;
  Eigen::Matrix4d r = Eigen::Matrix4d::Zero();
  r.topLeftCorner<2, 2>() = a;
  r.bottomRightCorner<2, 2>() = a;
  return r;
}

PhaseVector rotate(double theta, const PhaseVector& lab) {
  return rotation_matrix(theta) * lab;
}

WaveguideBoundary waveguide_boundary(double omega1, double omega2) {
  if (!(omega1 > 0.0) || !(omega2 > 0.0) || !std::isfinite(omega1) ||
      !std::isfinite(omega2))
    throw ConfigError("waveguide boundary needs positive finite frequencies");
  return {omega1, omega2, omega1 * omega2, std::atan(omega1 / omega2),
          std::hypot(omega1, omega2)};
}

WaveguideBoundary table1_targets(const WaveguideBoundary& initial, Closure kind) {
  switch (kind) {
    case Closure::gamma_const:
      return waveguide_boundary(initial.omega2, initial.omega1);
    case Closure::omega2_const:
      return waveguide_boundary(initial.omega2 * initial.omega2 / initial.omega1,
                                initial.omega2);
  }
  throw ConfigError("unknown closure");
}

ControlSchedule::ControlSchedule(std::shared_ptr<const ScheduleSource> source,
                                 double duration)
    : source_(std::move(source)), tf_(duration) {
  if (!(duration > 0.0) || !std::isfinite(duration))
    throw ConfigError("schedule duration must be positive and finite");
}

ControlSchedule ControlSchedule::from_function(std::function<ControlValues(double)> f,
                                               double duration) {
  return ControlSchedule(std::make_shared<FunctionSource>(std::move(f)), duration);
}

ControlSchedule ControlSchedule::constant(ControlValues v, double duration) {
  return from_function([v](double) { return v; }, duration);
}

ControlSchedule ControlSchedule::sampled(const std::vector<ControlValues>& samples,
                                         double duration) {
  if (samples.size() < 4) throw ConfigError("sampled schedule needs at least 4 samples");
  return ControlSchedule(std::make_shared<SampledSource>(samples, duration), duration);
}

double ThetaTracker::unwrap(const NormalModeFrame& frame) {
  double theta = frame.theta;
  if (prev_) {
    if (frame.Lambda == 0.0) return *prev_;
    theta += std::numbers::pi * std::round((*prev_ - theta) / std::numbers::pi);
  }
  prev_ = theta;
  return theta;
}

double ThetaTracker::unwrap(const ControlValues& v) {
  return unwrap(normal_modes(v.omega1_sq, v.omega2_sq, v.gamma));
}

std::vector<double> theta_profile(const ControlSchedule& schedule,
                                  const std::vector<double>& times) {
  ThetaTracker tracker;
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(tracker.unwrap(schedule(t)));
  return out;
}

ControlSchedule linear_ramp_schedule(const WaveguideBoundary& initial,
                                     const WaveguideBoundary& final_boundary,
                                     double duration) {
  const double a1 = initial.omega1, b1 = final_boundary.omega1;
  const double a2 = initial.omega2, b2 = final_boundary.omega2;
  const double ag = initial.gamma, bg = final_boundary.gamma;
  return ControlSchedule::from_function(
      [=](double t) {
        double s = t / duration;
        double w1 = a1 + (b1 - a1) * s;
        double w2 = a2 + (b2 - a2) * s;
        return ControlValues{w1 * w1, w2 * w2, ag + (bg - ag) * s};
      },
      duration);
}

std::vector<double> uniform_grid(double duration, std::size_t num_points) {
  if (num_points < 2) throw ConfigError("time grid needs at least two points");
  std::vector<double> t(num_points);
  const double n = static_cast<double>(num_points - 1);
  for (std::size_t i = 0; i < num_points; ++i)
    t[i] = duration * static_cast<double>(i) / n;
  t.back() = duration;
  return t;
}

}  // namespace sta
