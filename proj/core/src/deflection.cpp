#include "sta/deflection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sta/error.hpp"
#include "sta/series.hpp"

namespace sta {
namespace {

bool is_position(BoundaryKind k) {
  return k == BoundaryKind::longitudinal_position || k == BoundaryKind::transversal_position;
}

bool is_longitudinal(BoundaryKind k) {
  return k == BoundaryKind::longitudinal_momentum || k == BoundaryKind::longitudinal_position;
}

// Oscillator-1 amplitude per unit oscillator-2 amplitude.
double partner_factor(BoundaryKind k, const WaveguideBoundary& w) {
  return is_longitudinal(k) ? w.omega2 / w.omega1 : -w.omega1 / w.omega2;
}

double kind_sign(BoundaryKind k) { return is_position(k) ? -1.0 : 1.0; }

double kind_trig(BoundaryKind k, double theta) {
  return is_longitudinal(k) ? std::sin(theta) : std::cos(theta);
}

void append_end(std::vector<BoundaryConstraint>& c1, std::vector<BoundaryConstraint>& c2,
                Boundary at, BoundaryKind kind, const WaveguideBoundary& w, double a) {
  const double w1sq = w.omega1 * w.omega1, w2sq = w.omega2 * w.omega2, g = w.gamma;
  const double a1 = partner_factor(kind, w) * a, a2 = a;
  if (!is_position(kind)) {
    c1.push_back({at, 0, a1});
    c2.push_back({at, 0, a2});
    c1.push_back({at, 1, 0.0});
    c2.push_back({at, 1, 0.0});
    c1.push_back({at, 2, g * a2 - w1sq * a1});
    c2.push_back({at, 2, g * a1 - w2sq * a2});
  } else {
    c1.push_back({at, 0, 0.0});
    c2.push_back({at, 0, 0.0});
    c1.push_back({at, 1, a1});
    c2.push_back({at, 1, a2});
    c1.push_back({at, 2, 0.0});
    c2.push_back({at, 2, 0.0});
    c1.push_back({at, 3, g * a2 - w1sq * a1});
    c2.push_back({at, 3, g * a1 - w2sq * a2});
  }
}

Poly to_poly(const PolynomialAnsatz& u) { return Poly(u.coefficients()); }

// Divides out the boundary zeros of u at position-type ends.
Poly strip_zeros(Poly p, BoundaryKind start, BoundaryKind end, int multiplicity = 1) {
  for (int m = 0; m < multiplicity; ++m) {
    if (is_position(start)) p = p.deflate(0.0);
    if (is_position(end)) p = p.deflate(1.0);
  }
  return p;
}

struct Ratio {
  Poly num, den;
  double operator()(double s) const { return num(s) / den(s); }
};

class RationalSource final : public ScheduleSource {
 public:
  RationalSource(Ratio w1, Ratio w2, Ratio g, double tf)
      : w1_(std::move(w1)), w2_(std::move(w2)), g_(std::move(g)), tf_(tf) {}
  ControlValues at(double t) const override {
    double s = t / tf_;
    return {w1_(s), w2_(s), g_(s)};
  }

 private:
  Ratio w1_, w2_, g_;
  double tf_;
};

Ratio constant_ratio(double v) { return {Poly({v}), Poly({1.0})}; }

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void scan_singularity(const Poly& p, double tf, double& min_abs, double& t_min,
                      double& max_abs, bool& sign_change) {
  constexpr int kSamples = 4001;
  min_abs = INFINITY;
  max_abs = 0.0;
  sign_change = false;
  double first = p(0.0);
  for (int i = 0; i < kSamples; ++i) {
    double s = static_cast<double>(i) / (kSamples - 1);
    double v = p(s);
    if (std::abs(v) < min_abs) {
      min_abs = std::abs(v);
      t_min = s * tf;
    }
    max_abs = std::max(max_abs, std::abs(v));
    if (v * first < 0.0) sign_change = true;
  }
}

}  // namespace

WaveguideBoundary initial_for_deflection_angle(double omega1, double delta_theta) {
  if (!(delta_theta > 0.0 && delta_theta < std::numbers::pi / 2))
    throw ConfigError("deflection angle must lie in (0, pi/2)");
  double theta0 = 0.5 * (std::numbers::pi / 2 - delta_theta);
  return waveguide_boundary(omega1, omega1 / std::tan(theta0));
}

ControlSchedule deflection_schedule(const PolynomialAnsatz& u1, const PolynomialAnsatz& u2,
                                    Closure closure, const WaveguideBoundary& initial,
                                    BoundaryKind start_kind, BoundaryKind end_kind) {
  const double tf = u1.duration();
  const double inv_tf2 = 1.0 / (tf * tf);
  Poly p1 = to_poly(u1), p2 = to_poly(u2);
  Poly dd1 = inv_tf2 * p1.derivative().derivative();
  Poly dd2 = inv_tf2 * p2.derivative().derivative();
  Ratio w1, w2, g;
  if (closure == Closure::gamma_const) {
    const double gamma = initial.gamma;
    g = constant_ratio(gamma);
    w1 = {strip_zeros(gamma * p2 - dd1, start_kind, end_kind),
          strip_zeros(p1, start_kind, end_kind)};
    w2 = {strip_zeros(gamma * p1 - dd2, start_kind, end_kind),
          strip_zeros(p2, start_kind, end_kind)};
  } else {
    const double w2sq = initial.omega2 * initial.omega2;
    Poly a = dd2 + w2sq * p2;
    w2 = constant_ratio(w2sq);
    g = {strip_zeros(a, start_kind, end_kind), strip_zeros(p1, start_kind, end_kind)};
    w1 = {strip_zeros(a * p2 - dd1 * p1, start_kind, end_kind, 2),
          strip_zeros(p1 * p1, start_kind, end_kind, 2)};
  }
  return ControlSchedule(std::make_shared<RationalSource>(w1, w2, g, tf), tf);
}

double scaling_factor(double u2_0, double u2_tf, double theta_0, double theta_tf) {
  double s0 = std::sin(theta_0);
  if (u2_tf == 0.0 || s0 == 0.0)
    throw ConfigError("scaling factor undefined: division by zero");
  return (u2_0 / u2_tf) * (std::sin(theta_tf) / s0);
}

DeflectionProtocol assemble_deflection(const DeflectionSpec& spec, PolynomialAnsatz u1,
                                       PolynomialAnsatz u2) {
  DeflectionProtocol p;
  p.spec = spec;
  p.initial = spec.initial;
  p.final_boundary = table1_targets(spec.initial, spec.closure);
  p.u1 = std::move(u1);
  p.u2 = std::move(u2);
  const double tf = p.u1.duration();

  // Amplitudes: u2 for momentum ends, u2' for position ends.
  auto amplitude = [&](BoundaryKind k, double t) {
    return is_position(k) ? evaluate(p.u2, t, 1) : evaluate(p.u2, t, 0);
  };
  const double a0 = amplitude(spec.start_kind, 0.0);
  const double af = amplitude(spec.end_kind, tf);
  p.ratio = a0 / af;
  p.F = p.ratio * kind_sign(spec.start_kind) * kind_sign(spec.end_kind) *
        kind_trig(spec.end_kind, p.final_boundary.theta) /
        kind_trig(spec.start_kind, p.initial.theta);

  Poly s1 = strip_zeros(to_poly(p.u1), spec.start_kind, spec.end_kind);
  Poly s2 = strip_zeros(to_poly(p.u2), spec.start_kind, spec.end_kind);
  double max1 = 0, max2 = 0;
  bool flip1 = false, flip2 = false;
  scan_singularity(s1, tf, p.singularity.min_abs_u1, p.singularity.t_min_u1, max1, flip1);
  scan_singularity(s2, tf, p.singularity.min_abs_u2, p.singularity.t_min_u2, max2, flip2);
  p.singularity.floor = spec.singularity_floor;
  auto reject = [&](int which, double t) {
    throw DesignRejected("reference trajectory crosses zero: u" + std::to_string(which) +
                         " vanishes near t=" + fmt_double(t) +
                         "; try a different F (or ratio) or t_f");
  };
  if (flip1 || p.singularity.min_abs_u1 < spec.singularity_floor * max1)
    reject(1, p.singularity.t_min_u1);
  if (flip2 || p.singularity.min_abs_u2 < spec.singularity_floor * max2)
    reject(2, p.singularity.t_min_u2);

  p.schedule = deflection_schedule(p.u1, p.u2, spec.closure, spec.initial, spec.start_kind,
                                   spec.end_kind);
  std::vector<ReferencePoint> nodes;
  for (double t : uniform_grid(tf, spec.reference_nodes)) {
    ReferencePoint r;
    r.t = t;
    r.u = {evaluate(p.u1, t, 0), evaluate(p.u2, t, 0)};
    r.du = {evaluate(p.u1, t, 1), evaluate(p.u2, t, 1)};
    r.ddu = reference_acceleration(p.schedule(t), r.u);
    nodes.push_back(r);
  }
  p.reference = ReferenceSolution(p.schedule, std::move(nodes));
  return p;
}

DeflectionProtocol design_deflection(const DeflectionSpec& spec) {
  if (!(spec.tf > 0.0) || !std::isfinite(spec.tf))
    throw ConfigError("deflection duration t_f must be positive and finite");
  if (spec.F && spec.ratio)
    throw ConfigError("give either the scaling factor F or the amplitude ratio, not both");
  if (spec.F && !(*spec.F > 0.0)) throw ConfigError("scaling factor F must be positive");
  if (spec.ratio && !(std::isfinite(*spec.ratio) && *spec.ratio != 0.0))
    throw ConfigError("amplitude ratio must be finite and nonzero");

  const WaveguideBoundary& w0 = spec.initial;
  const WaveguideBoundary wf = table1_targets(w0, spec.closure);
  if (spec.final_boundary) {
    const auto& e = *spec.final_boundary;
    if (std::abs(e.omega1 - wf.omega1) > 1e-10 * wf.omega1 ||
        std::abs(e.omega2 - wf.omega2) > 1e-10 * wf.omega2)
      throw ConfigError("final boundary (" + fmt_double(e.omega1) + ", " +
                        fmt_double(e.omega2) + ") is inconsistent with the " +
                        to_string(spec.closure) + " closure, which reaches (" +
                        fmt_double(wf.omega1) + ", " + fmt_double(wf.omega2) + ")");
  }
  if (spec.delta_theta) {
    double implied = wf.theta - w0.theta;
    if (std::abs(implied - *spec.delta_theta) > kDeflectionAngleTolerance)
      throw ConfigError("requested deflection angle " + fmt_double(*spec.delta_theta) +
                        " differs from the angle " + fmt_double(implied) +
                        " implied by the boundary guides");
  }

  const double g0 = kind_trig(spec.start_kind, w0.theta);
  const double gf = kind_trig(spec.end_kind, wf.theta);
  const double sign = kind_sign(spec.start_kind) * kind_sign(spec.end_kind);
  double r = spec.ratio ? *spec.ratio : spec.F.value_or(1.0) * g0 / (sign * gf);

  const double a0 = 1.0 / partner_factor(spec.start_kind, w0);  // u1 (or u1') = 1
  const double af = a0 / r;
  std::vector<BoundaryConstraint> c1, c2;
  append_end(c1, c2, Boundary::start, spec.start_kind, w0, a0);
  append_end(c1, c2, Boundary::end, spec.end_kind, wf, af);
  const int degree = static_cast<int>(c1.size()) - 1;
  PolynomialAnsatz u1 = solve_polynomial(c1, degree, spec.tf);
  PolynomialAnsatz u2 = solve_polynomial(c2, degree, spec.tf);
  return assemble_deflection(spec, std::move(u1), std::move(u2));
}

InvariantForm boundary_invariant_form(BoundaryKind kind, const std::array<double, 2>& u,
                                      const std::array<double, 2>& du, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double scale = std::max({1.0, std::abs(u[0]), std::abs(u[1]), std::abs(du[0]),
                                 std::abs(du[1])});
  constexpr double kTol = 1e-8;
  auto require = [&](double residual, const char* what) {
    if (std::abs(residual) > kTol * scale)
      throw DesignRejected(std::string("boundary conditions violated: ") + what +
                           " (residual " + fmt_double(residual) + ")");
  };
  InvariantForm f;
  // With tan(theta) = w1 / w2 the frequency relations become u1 s = u2 c (or
  // u1 c = -u2 s), and G collapses onto a single rotated quadrature.
  switch (kind) {
    case BoundaryKind::longitudinal_momentum:
      require(du[0], "u1' = 0");
      require(du[1], "u2' = 0");
      require(u[0] * s - u[1] * c, "u1 w1 = u2 w2");
      f = {"p_l", "p_l^2/2", u[1] / s, 0.0};
      break;
    case BoundaryKind::transversal_momentum:
      require(du[0], "u1' = 0");
      require(du[1], "u2' = 0");
      require(u[0] * c + u[1] * s, "u1 w2 = -u2 w1");
      f = {"p_t", "p_t^2/2", u[1] / c, 0.0};
      break;
    case BoundaryKind::longitudinal_position:
      require(u[0], "u1 = 0");
      require(u[1], "u2 = 0");
      require(du[0] * s - du[1] * c, "u1' w1 = u2' w2");
      f = {"q_l", "q_l^2/2", -du[1] / s, 0.0};
      break;
    case BoundaryKind::transversal_position:
      require(u[0], "u1 = 0");
      require(u[1], "u2 = 0");
      require(du[0] * c + du[1] * s, "u1' w2 = -u2' w1");
      f = {"q_t", "q_t^2/2", -du[1] / c, 0.0};
      break;
  }
  f.prefactor = f.amplitude * f.amplitude;
  return f;
}

double Expansion1D::omega_sq(double t) const {
  double r = evaluate(rho, t, 0);
  double r2 = r * r;
  return K * K / (r2 * r2) - evaluate(rho, t, 2) / r;
}

ControlSchedule Expansion1D::schedule(double spectator_omega) const {
  const double w1sq = spectator_omega * spectator_omega;
  Expansion1D copy = *this;
  return ControlSchedule::from_function(
      [copy, w1sq](double t) { return ControlValues{w1sq, copy.omega_sq(t), 0.0}; },
      duration());
}

Expansion1D design_1d_expansion(double omega_initial, double omega_final, double tf) {
  if (!(omega_initial > 0.0) || !(omega_final > 0.0))
    throw ConfigError("expansion frequencies must be positive");
  if (!(tf > 0.0) || !std::isfinite(tf)) throw ConfigError("t_f must be positive");
  Expansion1D e;
  e.K = omega_initial;
  e.omega_initial = omega_initial;
  e.omega_final = omega_final;
  const double rf = std::sqrt(omega_initial / omega_final);
  e.rho = solve_polynomial({{Boundary::start, 0, 1.0},
                            {Boundary::end, 0, rf},
                            {Boundary::start, 1, 0.0},
                            {Boundary::end, 1, 0.0},
                            {Boundary::start, 2, 0.0},
                            {Boundary::end, 2, 0.0}},
                           5, tf);
  for (int i = 0; i <= 2000; ++i) {
    double t = tf * i / 2000.0;
    if (!(evaluate(e.rho, t, 0) > 0.0))
      throw DesignRejected("scaling function crosses zero near t=" + fmt_double(t));
  }
  return e;
}

std::string to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::longitudinal_momentum: return "longitudinal_momentum";
    case BoundaryKind::transversal_momentum: return "transversal_momentum";
    case BoundaryKind::longitudinal_position: return "longitudinal_position";
    case BoundaryKind::transversal_position: return "transversal_position";
  }
  return "?";
}

BoundaryKind boundary_kind_from_string(const std::string& name) {
  for (auto k : {BoundaryKind::longitudinal_momentum, BoundaryKind::transversal_momentum,
                 BoundaryKind::longitudinal_position, BoundaryKind::transversal_position})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown boundary kind '" + name + "'");
}

std::string to_string(Closure closure) {
  return closure == Closure::gamma_const ? "gamma_const" : "omega2_const";
}

Closure closure_from_string(const std::string& name) {
  if (name == "gamma_const") return Closure::gamma_const;
  if (name == "omega2_const") return Closure::omega2_const;
  throw ConfigError("unknown closure '" + name + "'");
}

}  // namespace sta
