#include <algorithm>
#include <cmath>

#include "sta/error.hpp"
#include "sta/moments.hpp"
#include "sta_cli/commands.hpp"
#include "sta_cli/io.hpp"

namespace sta::cli {
namespace {

constexpr double kRoundTripTolerance = 1e-9;
constexpr double kSampleEq7Tolerance = 1e-6;
constexpr double kAnsatzEq7Tolerance = 1e-8;
constexpr double kGuideTolerance = 1e-10;
constexpr double kTransferBoundaryTolerance = 1e-8;
constexpr double kSymplecticTolerance = 1e-9;
constexpr double kInvariantTolerance = 1e-6;
constexpr double kLinearInvariantTolerance = 1e-8;
constexpr double kUncertaintyTolerance = 1e-9;

const std::vector<std::string> kScheduleHeader = {"t",     "omega1_sq",  "omega2_sq", "gamma",
                                                  "theta", "Omega_l_sq", "Omega_t_sq"};
const std::vector<std::string> kReferenceHeader = {"t",      "u1_re",  "u1_im",  "u2_re", "u2_im",
                                                   "du1_re", "du1_im", "du2_re", "du2_im"};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1.0); }

double cell(const CsvTable& t, std::size_t row, std::size_t col) {
  const auto& v = t.rows[row][col];
  if (!v) throw ConfigError("CSV field empty at row " + std::to_string(row + 1));
  return *v;
}

std::vector<ReferencePoint> reference_nodes(const CsvTable& t) {
  std::vector<ReferencePoint> nodes;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ReferencePoint p;
    p.t = cell(t, r, 0);
    p.u = {cplx(cell(t, r, 1), cell(t, r, 2)), cplx(cell(t, r, 3), cell(t, r, 4))};
    p.du = {cplx(cell(t, r, 5), cell(t, r, 6)), cplx(cell(t, r, 7), cell(t, r, 8))};
    nodes.push_back(p);
  }
  return nodes;
}

Check roundtrip(const Protocol& p, const CsvTable& s) {
  double worst = 0.0;
  double t_worst = 0.0;
  for (std::size_t r = 0; r < s.rows.size(); ++r) {
    double t = cell(s, r, 0);
    ControlValues v = p.schedule(t);
    double e = std::max({rel(cell(s, r, 1), v.omega1_sq), rel(cell(s, r, 2), v.omega2_sq),
                         rel(cell(s, r, 3), v.gamma)});
    if (e > worst) {
      worst = e;
      t_worst = t;
    }
  }
  return {"schedule_roundtrip",
          worst <= kRoundTripTolerance,
          {{"max_relative_difference", worst}, {"at_t", t_worst},
           {"tolerance", kRoundTripTolerance}, {"samples", s.rows.size()}}};
}

Check eq7_samples(const CsvTable& s, const CsvTable& ref) {
  std::vector<ControlValues> samples;
  for (std::size_t r = 0; r < s.rows.size(); ++r)
    samples.push_back({cell(s, r, 1), cell(s, r, 2), cell(s, r, 3)});
  const double tf = cell(s, s.rows.size() - 1, 0);
  ControlSchedule sampled = ControlSchedule::sampled(samples, tf);
  auto nodes = reference_nodes(ref);
  for (auto& n : nodes) n.ddu = reference_acceleration(sampled(n.t), n.u);
  ReferenceSolution sol(sampled, std::move(nodes));
  double r = sol.consistency_residual();
  return {"eq7_samples", r <= kSampleEq7Tolerance,
          {{"scaled_residual", r}, {"tolerance", kSampleEq7Tolerance}}};
}

template <class U, class D>
Check eq7_ansatz(const ControlSchedule& sched, U&& u, D&& ddu, double tf) {
  double worst = 0.0, scale = 1.0, t_worst = 0.0;
  std::vector<double> res;
  const auto grid = uniform_grid(tf, 4001);
  for (double t : grid) {
    ControlValues v = sched(t);
    CPair a = u(t), b = ddu(t);
    scale = std::max({scale, std::abs(b[0]), std::abs(b[1]), std::abs(v.omega1_sq * a[0]),
                      std::abs(v.omega2_sq * a[1]), std::abs(v.gamma * a[0]),
                      std::abs(v.gamma * a[1])});
    res.push_back(eq7_residual(v, a, b));
  }
  for (std::size_t k = 0; k < res.size(); ++k)
    if (res[k] > worst) {
      worst = res[k];
      t_worst = grid[k];
    }
  double r = worst / scale;
  return {"eq7_coefficients", r <= kAnsatzEq7Tolerance,
          {{"scaled_residual", r}, {"at_t", t_worst}, {"tolerance", kAnsatzEq7Tolerance}}};
}

json controls(const ControlValues& v) {
  return {{"omega1_sq", v.omega1_sq}, {"omega2_sq", v.omega2_sq}, {"gamma", v.gamma}};
}

double control_error(const ControlValues& a, const ControlValues& b) {
  return std::max({rel(a.omega1_sq, b.omega1_sq), rel(a.omega2_sq, b.omega2_sq),
                   rel(a.gamma, b.gamma)});
}

ControlValues guide_controls(const WaveguideBoundary& w) {
  return {w.omega1 * w.omega1, w.omega2 * w.omega2, w.gamma};
}

Check boundaries(const Config& c, const Protocol& p, const CsvTable* ref) {
  const double tf = c.duration();
  ControlValues s = p.schedule(0.0), e = p.schedule(tf);
  json d = {{"start", controls(s)}, {"end", controls(e)}};
  bool pass = true;
  double tol = kGuideTolerance;
  ControlValues want_s{}, want_e{};
  switch (p.kind) {
    case ProtocolKind::deflection: {
      const auto& x = *p.deflection;
      want_s = guide_controls(x.initial);
      want_e = guide_controls(x.final_boundary);
      d["Omega_t_final"] = std::sqrt(normal_modes(e.omega1_sq, e.omega2_sq, e.gamma).Omega_t_sq);
      for (auto [at, kind, w] : {std::tuple{0.0, x.spec.start_kind, x.initial},
                                 std::tuple{tf, x.spec.end_kind, x.final_boundary}}) {
        try {
          InvariantForm f = boundary_invariant_form(
              kind, {evaluate(x.u1, at, 0), evaluate(x.u2, at, 0)},
              {evaluate(x.u1, at, 1), evaluate(x.u2, at, 1)}, w.theta);
          d[at == 0.0 ? "invariant_start" : "invariant_end"] = {
              {"kind", to_string(kind)}, {"observable", f.observable}, {"prefactor", f.prefactor}};
        } catch (const DesignRejected& err) {
          pass = false;
          d[at == 0.0 ? "invariant_start" : "invariant_end"] = err.what();
        }
      }
      break;
    }
    case ProtocolKind::transfer: {
      const auto& t = c.transfer;
      tol = kTransferBoundaryTolerance;
      want_s = {t.omega1_0 * t.omega1_0, t.omega2_0 * t.omega2_0, t.gamma_0};
      want_e = {t.omega1_f * t.omega1_f, t.omega2_f * t.omega2_f, t.gamma_f};
      if (ref) {
        const std::size_t last = ref->rows.size() - 1;
        const double c0 = t.c0_value();
        std::array<double, 4> r{cell(*ref, last, 1), cell(*ref, last, 5), cell(*ref, last, 3),
                                cell(*ref, last, 7) + c0 * std::sqrt(t.omega2_f / 2.0)};
        double n = std::hypot(std::hypot(r[0], r[1]), std::hypot(r[2], r[3]));
        d["final_residual"] = n;
        d["final_residual_tolerance"] = c.shooting.tolerance;
        pass = pass && n <= c.shooting.tolerance;
      }
      break;
    }
    case ProtocolKind::linear_ramp:
      want_s = guide_controls(c.ramp.initial);
      want_e = guide_controls(c.ramp.final_boundary);
      break;
    case ProtocolKind::expansion_1d: {
      const auto& x = *p.expansion;
      const double w1 = c.expansion.spectator_omega * c.expansion.spectator_omega;
      want_s = {w1, x.omega_initial * x.omega_initial, 0.0};
      want_e = {w1, x.omega_final * x.omega_final, 0.0};
      double rf = std::sqrt(x.omega_initial / x.omega_final);
      double rho_err = std::max({std::abs(evaluate(x.rho, 0.0) - 1.0),
                                 std::abs(evaluate(x.rho, tf) - rf),
                                 std::abs(evaluate(x.rho, 0.0, 1)), std::abs(evaluate(x.rho, tf, 1)),
                                 std::abs(evaluate(x.rho, 0.0, 2)), std::abs(evaluate(x.rho, tf, 2))});
      d["rho_boundary_error"] = rho_err;
      pass = pass && rho_err <= kGuideTolerance;
      break;
    }
  }
  double err = std::max(control_error(s, want_s), control_error(e, want_e));
  d["expected_start"] = controls(want_s);
  d["expected_end"] = controls(want_e);
  d["max_relative_error"] = err;
  d["tolerance"] = tol;
  return {"boundary_conditions", pass && err <= tol, d};
}

Check symplectic(const CsvTable& ref) {
  auto nodes = reference_nodes(ref);
  std::vector<double> s;
  for (const auto& n : nodes) s.push_back(symplectic_constant(n));
  double d = drift(s);
  return {"symplectic_constant", d <= kSymplecticTolerance,
          {{"value", s.front()}, {"drift", d}, {"tolerance", kSymplecticTolerance}}};
}

Check conservation(const Config& c, const Protocol& p) {
  const auto times = uniform_grid(c.duration(), c.simulation.samples);
  GaussianState init = make_initial_state(c.simulation.initial, p.schedule(0.0));
  auto states = propagate_moments(p.schedule, init, times, c.simulation.ode);
  json d;
  bool pass = true;
  double min_nu = INFINITY;
  for (const auto& s : states) min_nu = std::min(min_nu, symplectic_eigenvalues(s.cov).minCoeff());
  d["min_symplectic_eigenvalue"] = min_nu;
  pass = pass && min_nu >= 0.5 - kUncertaintyTolerance;
  if (p.reference) {
    std::vector<double> inv, wr;
    std::vector<cplx> g;
    const bool real = p.reference->is_real();
    for (std::size_t k = 0; k < times.size(); ++k) {
      inv.push_back(quadratic_invariant_expectation(states[k], *p.reference, times[k]));
      g.push_back(linear_invariant_expectation(states[k], *p.reference, times[k]));
      if (real) wr.push_back(wronskian_sum(*p.reference, states[k].mean, times[k]));
    }
    double gd = 0.0;
    for (const auto& x : g) gd = std::max(gd, std::abs(x - g.front()));
    gd /= std::max(std::abs(g.front()), 1.0);
    d["I_exp_drift"] = drift(inv);
    d["G_drift"] = gd;
    pass = pass && drift(inv) <= kInvariantTolerance && gd <= kLinearInvariantTolerance;
    if (real) {
      d["wronskian_sum_drift"] = drift(wr);
      pass = pass && drift(wr) <= kLinearInvariantTolerance;
    }
  }
  d["tolerances"] = {{"I_exp", kInvariantTolerance},
                     {"G", kLinearInvariantTolerance},
                     {"uncertainty", kUncertaintyTolerance}};
  return {"conservation", pass, d};
}

}  // namespace

std::vector<Check> verify_protocol(const Config& c, const std::filesystem::path& dir) {
  const json doc = read_json(dir / "protocol.json");
  Protocol p = protocol_from_json(c, doc);
  const CsvTable sched = read_csv(dir / "schedule.csv", kScheduleHeader);
  if (sched.rows.size() < 5) throw ConfigError("schedule.csv has too few rows");
  std::optional<CsvTable> ref;
  if (p.reference) ref = read_csv(dir / "reference.csv", kReferenceHeader);

  std::vector<Check> out;
  out.push_back(roundtrip(p, sched));
  if (ref) out.push_back(eq7_samples(sched, *ref));
  const double tf = c.duration();
  if (p.deflection) {
    const auto& x = *p.deflection;
    out.push_back(eq7_ansatz(
        p.schedule, [&](double t) { return CPair{evaluate(x.u1, t), evaluate(x.u2, t)}; },
        [&](double t) { return CPair{evaluate(x.u1, t, 2), evaluate(x.u2, t, 2)}; }, tf));
  } else if (p.transfer) {
    const auto& x = *p.transfer;
    out.push_back(eq7_ansatz(
        p.schedule, [&](double t) { return CPair{evaluate(x.u1I, t), evaluate(x.u2I, t)}; },
        [&](double t) { return CPair{evaluate(x.u1I, t, 2), evaluate(x.u2I, t, 2)}; }, tf));
  } else if (p.expansion) {
    const auto& x = *p.expansion;
    double worst = 0.0, scale = 1.0;
    for (double t : uniform_grid(tf, 4001)) {
      double r = evaluate(x.rho, t), dd = evaluate(x.rho, t, 2), w = x.omega_sq(t);
      double k = x.K * x.K / (r * r * r);
      scale = std::max({scale, std::abs(dd), std::abs(w * r), std::abs(k)});
      worst = std::max(worst, std::abs(dd + w * r - k));
    }
    out.push_back({"ermakov_coefficients", worst / scale <= kAnsatzEq7Tolerance,
                   {{"scaled_residual", worst / scale}, {"tolerance", kAnsatzEq7Tolerance}}});
  }
  out.push_back(boundaries(c, p, ref ? &*ref : nullptr));
  if (ref) out.push_back(symplectic(*ref));
  out.push_back(conservation(c, p));
  return out;
}

}  // namespace sta::cli
