#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace sta {

using PhaseVector = Eigen::Vector4d;  // (q1, q2, p1, p2) or (q_l, q_t, p_l, p_t)

struct NormalModeFrame {
  double theta;
  double Omega_l_sq;
  double Omega_t_sq;
  double Lambda;
};

// theta = atan2(2 gamma, w2^2 - w1^2) / 2, in (-pi/2, pi/2].
NormalModeFrame normal_modes(double omega1_sq, double omega2_sq, double gamma);

// Lab -> rotated frame: q_l = c q1 + s q2, q_t = -s q1 + c q2, same for p.
PhaseVector rotate(double theta, const PhaseVector& lab);
Eigen::Matrix4d rotation_matrix(double theta);

struct WaveguideBoundary {
  double omega1;
  double omega2;
  double gamma;    // omega1 * omega2
  double theta;    // atan(omega1 / omega2)
  double Omega_t;  // sqrt(omega1^2 + omega2^2)
};

WaveguideBoundary waveguide_boundary(double omega1, double omega2);

enum class Closure { gamma_const, omega2_const };

WaveguideBoundary table1_targets(const WaveguideBoundary& initial, Closure kind);

struct ControlValues {
  double omega1_sq;
  double omega2_sq;
  double gamma;
};

class ScheduleSource {
 public:
  virtual ~ScheduleSource() = default;
  virtual ControlValues at(double t) const = 0;
};

class ControlSchedule {
 public:
  ControlSchedule() = default;
  ControlSchedule(std::shared_ptr<const ScheduleSource> source, double duration);

  static ControlSchedule from_function(std::function<ControlValues(double)> f,
                                       double duration);
  static ControlSchedule constant(ControlValues v, double duration);
  // Cubic B-spline through uniformly spaced samples on [0, duration].
  static ControlSchedule sampled(const std::vector<ControlValues>& samples,
                                 double duration);

  ControlValues operator()(double t) const { return source_->at(t); }
  double duration() const { return tf_; }
  bool valid() const { return static_cast<bool>(source_); }

 private:
  std::shared_ptr<const ScheduleSource> source_;
  double tf_ = 0.0;
};

// Keeps theta continuous along a sequence of evaluations by shifting the
// principal value by multiples of pi; at the degenerate point the previous
// angle is carried over.
class ThetaTracker {
 public:
  double unwrap(const NormalModeFrame& frame);
  double unwrap(const ControlValues& v);

 private:
  std::optional<double> prev_;
};

std::vector<double> theta_profile(const ControlSchedule& schedule,
                                  const std::vector<double>& times);

ControlSchedule linear_ramp_schedule(const WaveguideBoundary& initial,
                                     const WaveguideBoundary& final_boundary,
                                     double duration);

std::vector<double> uniform_grid(double duration, std::size_t num_points);

}  // namespace sta
