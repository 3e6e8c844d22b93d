#include "sta/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multifit_nlinear.h>
#include <gsl/gsl_multimin.h>
#include <spdlog/spdlog.h>

#include "sta/error.hpp"
#include "sta/series.hpp"

namespace sta {
namespace {

constexpr double kPenalty = 1e3;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Cheb to_cheb(const CosineAnsatz& f, int order = 0) {
  // cos(k pi s) = T_k(cos(pi s)); even derivatives stay in the basis.
  std::vector<double> c = f.coefficients();
  const double w = std::numbers::pi / f.duration();
  for (std::size_t k = 0; k < c.size(); ++k) {
    double kw = static_cast<double>(k) * w;
    c[k] *= std::pow(-kw * kw, order / 2);
  }
  return Cheb(std::move(c));
}

class TransferSource final : public ScheduleSource {
 public:
  TransferSource(Cheb g, Cheb n1, Cheb d1, Cheb n2, Cheb d2, double tf)
      : g_(std::move(g)),
        n1_(std::move(n1)),
        d1_(std::move(d1)),
        n2_(std::move(n2)),
        d2_(std::move(d2)),
        tf_(tf) {}
  ControlValues at(double t) const override {
    double x = std::cos(std::numbers::pi * t / tf_);
    return {n1_(x) / d1_(x), n2_(x) / d2_(x), g_(x)};
  }

 private:
  Cheb g_, n1_, d1_, n2_, d2_;
  double tf_;
};

void check_denominator(const Cheb& q, double tf, int which) {
  constexpr int kSamples = 2001;
  double first = q(1.0), worst = INFINITY, t_worst = 0.0, biggest = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    double s = static_cast<double>(i) / (kSamples - 1);
    double v = q(std::cos(std::numbers::pi * s));
    biggest = std::max(biggest, std::abs(v));
    if (v * first <= 0.0 || std::abs(v) < worst) {
      worst = v * first <= 0.0 ? 0.0 : std::abs(v);
      t_worst = s * tf;
    }
    if (worst == 0.0) break;
  }
  if (worst <= 1e-9 * biggest)
    throw DesignRejected("frequency reconstruction singular at t=" + fmt(t_worst) +
                         ": u" + std::to_string(which) + " imaginary part vanishes");
}

std::array<double, 4> integrate_real_parts(const TransferSpec& spec,
                                           const ControlSchedule& schedule,
                                           const OdeOptions& ode) {
  const double c0 = spec.c0_value();
  // u1R, u2R, u1R', u2R'
  std::array<double, 4> x{0.0, 0.0, -c0 * std::sqrt(spec.omega1_0 / 2.0), 0.0};
  auto rhs = [&](const std::array<double, 4>& s, std::array<double, 4>& ds, double t) {
    ControlValues v = schedule(t);
    ds[0] = s[2];
    ds[1] = s[3];
    ds[2] = -v.omega1_sq * s[0] + v.gamma * s[1];
    ds[3] = -v.omega2_sq * s[1] + v.gamma * s[0];
  };
  integrate_at(rhs, x, {0.0, spec.tf}, ode, [](const auto&, double) {});
  return {x[0], x[2], x[1], x[3] + c0 * std::sqrt(spec.omega2_f / 2.0)};
}

struct Schedules {
  CosineAnsatz gamma, u1, u2;
  ControlSchedule schedule;
};

Schedules build(const TransferSpec& spec, const std::array<double, 3>& p) {
  ImaginaryParts parts = build_imaginary_parts(spec);
  Schedules s;
  s.gamma = gamma_family(spec).at({p[0]});
  s.u1 = parts.u1.at({p[1]});
  s.u2 = parts.u2.at({p[2]});
  s.schedule = transfer_schedule(s.gamma, s.u1, s.u2);
  return s;
}

double norm(const std::array<double, 4>& r) {
  return std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3]);
}

struct Problem {
  const TransferSpec* spec;
  const OdeOptions* ode;
  int evaluations = 0;

  std::array<double, 4> residuals(const std::array<double, 3>& p) {
    ++evaluations;
    try {
      return transfer_residuals(*spec, p, *ode);
    } catch (const DesignRejected&) {
    } catch (const SimulationError&) {
    }
    return {kPenalty, kPenalty, kPenalty, kPenalty};
  }
};

double simplex_objective(const gsl_vector* v, void* params) {
  auto* pr = static_cast<Problem*>(params);
  auto r = pr->residuals({gsl_vector_get(v, 0), gsl_vector_get(v, 1), gsl_vector_get(v, 2)});
  double n = norm(r);
  return n * n;
}

int lm_residuals(const gsl_vector* v, void* params, gsl_vector* f) {
  auto* pr = static_cast<Problem*>(params);
  auto r = pr->residuals({gsl_vector_get(v, 0), gsl_vector_get(v, 1), gsl_vector_get(v, 2)});
  for (int i = 0; i < 4; ++i) gsl_vector_set(f, i, r[i]);
  return GSL_SUCCESS;
}

std::array<double, 3> run_simplex(Problem& pr, const std::array<double, 3>& x0,
                                  int max_iter) {
  gsl_multimin_function fn{&simplex_objective, 3, &pr};
  gsl_vector* x = gsl_vector_alloc(3);
  gsl_vector* step = gsl_vector_alloc(3);
  for (int i = 0; i < 3; ++i) {
    gsl_vector_set(x, i, x0[i]);
    gsl_vector_set(step, i, 0.25);
  }
  gsl_multimin_fminimizer* s =
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
  gsl_multimin_fminimizer_set(s, &fn, x, step);
  for (int it = 0; it < max_iter; ++it) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (s->fval < 1e-22) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-12) == GSL_SUCCESS) break;
  }
  std::array<double, 3> out{gsl_vector_get(s->x, 0), gsl_vector_get(s->x, 1),
                            gsl_vector_get(s->x, 2)};
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return out;
}

std::array<double, 3> run_polish(Problem& pr, const std::array<double, 3>& x0,
                                 int max_iter) {
  gsl_multifit_nlinear_parameters params = gsl_multifit_nlinear_default_parameters();
  params.h_df = 1e-7;
  gsl_multifit_nlinear_workspace* w =
      gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &params, 4, 3);
  gsl_multifit_nlinear_fdf fdf{};
  fdf.f = &lm_residuals;
  fdf.df = nullptr;
  fdf.fvv = nullptr;
  fdf.n = 4;
  fdf.p = 3;
  fdf.params = &pr;
  gsl_vector* x = gsl_vector_alloc(3);
  for (int i = 0; i < 3; ++i) gsl_vector_set(x, i, x0[i]);
  gsl_multifit_nlinear_init(x, &fdf, w);
  int info = 0;
  gsl_multifit_nlinear_driver(static_cast<std::size_t>(max_iter), 1e-15, 1e-15, 1e-15,
                              nullptr, nullptr, &info, w);
  gsl_vector* xs = gsl_multifit_nlinear_position(w);
  std::array<double, 3> out{gsl_vector_get(xs, 0), gsl_vector_get(xs, 1),
                            gsl_vector_get(xs, 2)};
  gsl_vector_free(x);
  gsl_multifit_nlinear_free(w);
  return out;
}

}  // namespace

double TransferSpec::c0_value() const { return c0.value_or(std::sqrt(2.0 * omega1_0)); }

void TransferSpec::validate() const {
  for (double w : {omega1_0, omega2_0, omega1_f, omega2_f})
    if (!(w > 0.0) || !std::isfinite(w))
      throw ConfigError("transfer boundary frequencies must be positive and finite");
  if (!std::isfinite(gamma_0) || !std::isfinite(gamma_f))
    throw ConfigError("transfer boundary couplings must be finite");
  if (!(tf > 0.0) || !std::isfinite(tf))
    throw ConfigError("transfer duration t_f must be positive and finite");
  double c = c0_value();
  if (!(std::isfinite(c) && c != 0.0)) throw ConfigError("c0 must be finite and nonzero");
  if (!std::isfinite(index0[0]) || !std::isfinite(index0[1]))
    throw ConfigError("index-0 coefficients must be finite");
}

CosineFamily gamma_family(const TransferSpec& spec) {
  return solve_cosine({{Boundary::start, 0, spec.gamma_0},
                       {Boundary::end, 0, spec.gamma_f},
                       {Boundary::start, 2, 0.0},
                       {Boundary::end, 2, 0.0}},
                      5, {4}, spec.tf);
}

ImaginaryParts build_imaginary_parts(const TransferSpec& spec) {
  spec.validate();
  const double c0 = spec.c0_value();
  const double u10 = c0 / std::sqrt(2.0 * spec.omega1_0);
  const double beta = c0 / std::sqrt(2.0 * spec.omega2_f);
  const double w10 = spec.omega1_0 * spec.omega1_0, w20 = spec.omega2_0 * spec.omega2_0;
  const double w1f = spec.omega1_f * spec.omega1_f, w2f = spec.omega2_f * spec.omega2_f;
  const double g0 = spec.gamma_0, gf = spec.gamma_f;
  std::vector<BoundaryConstraint> c1{{Boundary::start, 0, u10},
                                     {Boundary::end, 0, 0.0},
                                     {Boundary::start, 2, -w10 * u10},
                                     {Boundary::end, 2, gf * beta},
                                     {Boundary::end, 4, -gf * beta * (w1f + w2f)}};
  std::vector<BoundaryConstraint> c2{{Boundary::start, 0, 0.0},
                                     {Boundary::end, 0, beta},
                                     {Boundary::start, 2, g0 * u10},
                                     {Boundary::end, 2, -w2f * beta},
                                     {Boundary::start, 4, -g0 * u10 * (w10 + w20)}};
  return {solve_cosine(c1, 7, {6}, spec.tf, {{0, spec.index0[0]}}),
          solve_cosine(c2, 7, {6}, spec.tf, {{0, spec.index0[1]}})};
}

std::pair<double, double> reconstruct_frequencies(const CosineAnsatz& u1I,
                                                  const CosineAnsatz& u2I,
                                                  const CosineAnsatz& gamma, double t) {
  const double tf = u1I.duration();
  const bool boundary = t == 0.0 || t == tf;
  const double g = evaluate(gamma, t);
  const double u[2] = {evaluate(u1I, t), evaluate(u2I, t)};
  const double dd[2] = {evaluate(u1I, t, 2), evaluate(u2I, t, 2)};
  const double scale = std::max(
      {std::abs(evaluate(u1I, 0.0)), std::abs(evaluate(u2I, tf)), std::abs(evaluate(u1I, tf)),
       std::abs(evaluate(u2I, 0.0))});
  double out[2];
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    if (std::abs(u[i]) <= 1e-12 * scale) {
      if (!boundary)
        throw DesignRejected("frequency reconstruction singular at t=" + fmt(t));
      const CosineAnsatz& ui = i == 0 ? u1I : u2I;
      out[i] = (g * dd[j] - evaluate(ui, t, 4)) / dd[i];
    } else {
      out[i] = (g * u[j] - dd[i]) / u[i];
    }
  }
  return {out[0], out[1]};
}

ControlSchedule transfer_schedule(const CosineAnsatz& gamma, const CosineAnsatz& u1I,
                                  const CosineAnsatz& u2I) {
  const double tf = u1I.duration();
  Cheb g = to_cheb(gamma), c1 = to_cheb(u1I), c2 = to_cheb(u2I);
  Cheb n1 = g * c2 - to_cheb(u1I, 2);
  Cheb n2 = g * c1 - to_cheb(u2I, 2);
  // u1 vanishes at t_f (x = -1), u2 at t = 0 (x = +1).
  Cheb q1 = c1.deflate(-1.0), q2 = c2.deflate(1.0);
  check_denominator(q1, tf, 1);
  check_denominator(q2, tf, 2);
  return ControlSchedule(
      std::make_shared<TransferSource>(g, n1.deflate(-1.0), q1, n2.deflate(1.0), q2, tf),
      tf);
}

std::array<double, 4> transfer_residuals(const TransferSpec& spec,
                                         const std::array<double, 3>& coefficients,
                                         const OdeOptions& ode) {
  Schedules s = build(spec, coefficients);
  return integrate_real_parts(spec, s.schedule, ode);
}

TransferProtocol assemble_transfer(const TransferSpec& spec,
                                   const std::array<double, 3>& coefficients,
                                   const OdeOptions& ode, std::size_t reference_nodes) {
  spec.validate();
  Schedules s = build(spec, coefficients);
  TransferProtocol p;
  p.spec = spec;
  p.gamma = s.gamma;
  p.u1I = s.u1;
  p.u2I = s.u2;
  p.schedule = s.schedule;
  p.coefficients = coefficients;
  const double c0 = spec.c0_value();
  CPair u0{cplx(0.0, c0 / std::sqrt(2.0 * spec.omega1_0)), cplx(0.0, 0.0)};
  CPair du0{cplx(-c0 * std::sqrt(spec.omega1_0 / 2.0), 0.0), cplx(0.0, 0.0)};
  p.reference =
      integrate_reference(p.schedule, u0, du0, uniform_grid(spec.tf, reference_nodes), ode);
  const ReferencePoint& end = p.reference.nodes().back();
  p.final_residuals = {end.u[0].real(), end.du[0].real(), end.u[1].real(),
                       end.du[1].real() + c0 * std::sqrt(spec.omega2_f / 2.0)};
  p.residual = norm(p.final_residuals);
  return p;
}

TransferProtocol shoot_transfer(const TransferSpec& spec, const ShootOptions& opt) {
  spec.validate();
  gsl_set_error_handler_off();
  Problem pr{&spec, &opt.ode};
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> jitter(0.0, opt.perturbation);

  std::array<double, 3> best_x = opt.initial_guess;
  double best = std::numeric_limits<double>::infinity();
  int attempts = 0;
  for (int attempt = 0; attempt <= opt.restarts; ++attempt) {
    std::array<double, 3> x0 = opt.initial_guess;
    if (attempt > 0)
      for (auto& v : x0) v += jitter(rng);
    ++attempts;
    auto x1 = run_simplex(pr, x0, opt.simplex_iterations);
    auto x2 = run_polish(pr, x1, opt.polish_iterations);
    double r = norm(pr.residuals(x2));
    spdlog::debug("shooting attempt {}: residual {:.3e} at ({:.6f}, {:.6f}, {:.6f})", attempt,
                  r, x2[0], x2[1], x2[2]);
    if (r < best) {
      best = r;
      best_x = x2;
    }
    if (best < opt.tolerance) break;
  }
  if (!(best < opt.tolerance)) {
    std::ostringstream msg;
    msg << "shooting stagnated after " << attempts << " attempts: best residual " << best
        << " at (a4, b6, c6) = (" << best_x[0] << ", " << best_x[1] << ", " << best_x[2]
        << ")";
    throw ShootingStagnated(msg.str(), best_x, best);
  }
  TransferProtocol p = assemble_transfer(spec, best_x, opt.ode, opt.reference_nodes);
  p.evaluations = pr.evaluations;
  p.attempts = attempts;
  return p;
}

}  // namespace sta
