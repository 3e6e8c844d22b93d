// Acceptance checks; prints one PASS/FAIL line per criterion.
// Usage: sta_acceptance [criterion ...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "conservation.hpp"
#include "fixtures.hpp"
#include "sta/deflection.hpp"
#include "sta/error.hpp"
#include "sta/grid.hpp"
#include "sta/moments.hpp"
#include "sta/observables.hpp"
#include "sta/transfer.hpp"

using namespace sta;
using namespace sta::testing;

namespace {

// Pinned tolerances.
constexpr double kMomentEnergyTol = 1e-6;
constexpr double kGridEnergyTol = 1e-3;
constexpr double kMomentRunSeconds = 1.0;
constexpr double kGridRunSeconds = 60.0;
constexpr double kRampVarianceMin = 1e-3;
constexpr int kRampCrossingsMin = 2;
constexpr double kStaVarianceMax = 1e-10;
constexpr double kScalingTol = 1e-6;
constexpr double kTable1Tol = 1e-10;
constexpr double kShootingTol = 1e-8;
constexpr double kTransferEnergyTol = 1e-4;
constexpr double kInvariantDriftTol = 1e-6;
constexpr double kGDriftTol = 1e-8;
constexpr double kWronskianDriftTol = 1e-8;
constexpr double kSymplecticDriftTol = 1e-9;
constexpr double kEq7Tol = 1e-8;
constexpr double kGridNormTol = 1e-10;
constexpr double kEngineTol = 1e-3;
constexpr double kFidelityMin = 0.9999;
constexpr std::size_t kSamples = 401;

struct Outcome {
  bool pass = true;
  std::string summary;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

using Field = std::function<std::optional<double>(const ObservableRecord&)>;

const std::vector<std::pair<std::string, Field>>& record_fields() {
  static const std::vector<std::pair<std::string, Field>> f = {
      {"E_l", [](const ObservableRecord& r) -> std::optional<double> { return r.E_l; }},
      {"E_t", [](const ObservableRecord& r) { return r.E_t; }},
      {"H1", [](const ObservableRecord& r) { return r.H1; }},
      {"H2", [](const ObservableRecord& r) { return r.H2; }},
      {"H_total", [](const ObservableRecord& r) -> std::optional<double> { return r.H_total; }},
      {"I_exp", [](const ObservableRecord& r) { return r.I_exp; }},
      {"G_re",
       [](const ObservableRecord& r) -> std::optional<double> {
         if (!r.G) return std::nullopt;
         return r.G->real();
       }},
      {"G_im",
       [](const ObservableRecord& r) -> std::optional<double> {
         if (!r.G) return std::nullopt;
         return r.G->imag();
       }},
      {"R_t", [](const ObservableRecord& r) { return r.R_t; }},
  };
  return f;
}

// Worst |a - b| / max(|a|, |b|, 1) over all fields and samples.
double engine_difference(const std::vector<ObservableRecord>& a,
                         const std::vector<ObservableRecord>& b, std::string* worst_field) {
  double worst = 0.0;
  for (const auto& [name, get] : record_fields())
    for (std::size_t k = 0; k < a.size(); ++k) {
      auto x = get(a[k]), y = get(b[k]);
      double d;
      if (x.has_value() != y.has_value())
        d = INFINITY;
      else if (!x)
        continue;
      else
        d = std::abs(*x - *y) / std::max({std::abs(*x), std::abs(*y), 1.0});
      if (d > worst) {
        worst = d;
        if (worst_field) *worst_field = name;
      }
    }
  return worst;
}

struct EngineRuns {
  std::vector<ObservableRecord> moments, grid;
  double moment_seconds = 0.0, grid_seconds = 0.0;
  int n1 = 0, n2 = 0;
  bool leak = false;
};

EngineRuns run_engines(const ControlSchedule& schedule, const ReferenceSolution* ref,
                       const GaussianState& initial, double tf, bool with_grid) {
  EngineRuns out;
  auto times = uniform_grid(tf, kSamples);
  auto t0 = Clock::now();
  auto states = propagate_moments(schedule, initial, times);
  out.moments = observe_series(schedule, times, states, ref);
  out.moment_seconds = seconds_since(t0);
  if (!with_grid) return out;
  t0 = Clock::now();
  GridGeometry geo = auto_geometry(states);
  out.n1 = geo.n1;
  out.n2 = geo.n2;
  GridRun run = propagate_grid(schedule, GridWavefunction::from_gaussian(initial, geo), times,
                               auto_time_step(schedule));
  out.leak = run.boundary_leak;
  out.grid = observe_series(schedule, times, run.moments, ref, &run.norms);
  out.grid_seconds = seconds_since(t0);
  return out;
}

struct DeflectionInstance {
  double q_l0, tf;
  EngineRuns runs;
};

std::vector<DeflectionInstance> deflection_instances() {
  std::vector<DeflectionInstance> out;
  for (double q : {-4.0, 0.0, 4.0})
    for (double tf : {1.0, 2.0, 4.0, 8.0}) {
      DeflectionProtocol p = design_deflection(quarter_turn(tf));
      GaussianState g = make_initial_state(packet(q), p.schedule(0.0));
      out.push_back({q, tf, run_engines(p.schedule, &p.reference, g, tf, true)});
    }
  return out;
}

const std::vector<DeflectionInstance>& cached_instances() {
  static const std::vector<DeflectionInstance> v = deflection_instances();
  return v;
}

Outcome criterion1() {
  Outcome o;
  double worst_m = 0.0, worst_g = 0.0, slow_m = 0.0, slow_g = 0.0;
  for (const auto& in : cached_instances()) {
    const auto& m = in.runs.moments;
    const auto& g = in.runs.grid;
    double em = std::abs(m.back().E_l / m.front().E_l - 1.0);
    double eg = in.runs.leak ? INFINITY : std::abs(g.back().E_l / g.front().E_l - 1.0);
    worst_m = std::max(worst_m, em);
    worst_g = std::max(worst_g, eg);
    slow_m = std::max(slow_m, in.runs.moment_seconds);
    if (in.runs.n1 * in.runs.n2 <= 256 * 256) slow_g = std::max(slow_g, in.runs.grid_seconds);
  }
  o.pass = worst_m < kMomentEnergyTol && worst_g < kGridEnergyTol &&
           slow_m < kMomentRunSeconds && slow_g < kGridRunSeconds;
  o.summary = "12 instances, max|E_l ratio - 1| moments " + fmt(worst_m) + " (tol " +
              fmt(kMomentEnergyTol) + "), grid " + fmt(worst_g) + " (tol " + fmt(kGridEnergyTol) +
              "); slowest moment run " + fmt(slow_m) + " s, slowest 256^2 grid run " +
              fmt(slow_g) + " s";
  return o;
}

double final_energy_ratio(const ControlSchedule& s, const ReferenceSolution* ref, double tf) {
  GaussianState g = make_initial_state(packet(-4.0), s(0.0));
  auto rec = run_engines(s, ref, g, tf, false).moments;
  return rec.back().E_l / rec.front().E_l;
}

Outcome criterion2() {
  WaveguideBoundary a = waveguide_boundary(1.0, 2.41);
  WaveguideBoundary b = table1_targets(a, Closure::gamma_const);
  std::vector<double> ramp, sta;
  for (int i = 0; i < 30; ++i) {
    double tf = 1.0 + 9.0 * i / 29.0;
    ramp.push_back(final_energy_ratio(linear_ramp_schedule(a, b, tf), nullptr, tf));
    DeflectionProtocol p = design_deflection(quarter_turn(tf));
    sta.push_back(final_energy_ratio(p.schedule, &p.reference, tf));
  }
  int crossings = 0;
  for (std::size_t i = 1; i < ramp.size(); ++i)
    if ((ramp[i - 1] - 1.0) * (ramp[i] - 1.0) < 0.0) ++crossings;
  double vr = sample_variance(ramp), vs = sample_variance(sta);
  Outcome o;
  o.pass = vr > kRampVarianceMin && crossings >= kRampCrossingsMin && vs < kStaVarianceMax;
  o.summary = "ramp variance " + fmt(vr) + " (> " + fmt(kRampVarianceMin) + "), crossings of 1: " +
              std::to_string(crossings) + " (>= " + std::to_string(kRampCrossingsMin) +
              "), STA variance " + fmt(vs) + " (< " + fmt(kStaVarianceMax) + ")";
  return o;
}

Outcome criterion3() {
  double worst = 0.0, worst_cross = 0.0, worst_rounded = 0.0;
  for (double r : {0.2, 0.4146, 0.6, 1.0}) {
    double measured[2];
    int i = 0;
    for (Closure c : {Closure::gamma_const, Closure::omega2_const}) {
      DeflectionSpec s = quarter_turn(2.0, 1.0, c);
      s.F.reset();
      s.ratio = r;
      DeflectionProtocol p = design_deflection(s);
      GaussianState g = make_initial_state(packet(0.0), p.schedule(0.0));
      auto rec = run_engines(p.schedule, &p.reference, g, s.tf, false).moments;
      measured[i] = rec.back().E_l / rec.front().E_l;
      worst = std::max(worst, relative(measured[i], p.F * p.F));
      worst_rounded = std::max(worst_rounded, relative(measured[i], std::pow(2.412 * r, 2)));
      ++i;
    }
    worst_cross = std::max(worst_cross, relative(measured[0], measured[1]));
  }
  Outcome o;
  o.pass = worst < kScalingTol && worst_cross < kScalingTol;
  o.summary = "max rel |E_l ratio - F^2| " + fmt(worst) + ", closures differ by " +
              fmt(worst_cross) + " (tol " + fmt(kScalingTol) + "); vs rounded (2.412 r)^2: " +
              fmt(worst_rounded);
  return o;
}

Outcome criterion4() {
  const double w1 = 1.0, w2 = 2.41;
  const double Wt0 = std::hypot(w1, w2);
  struct Expect {
    Closure c;
    double w1f, w2f, Wtf;
  };
  const Expect rows[] = {{Closure::gamma_const, w2, w1, Wt0},
                         {Closure::omega2_const, w2 * w2 / w1, w2, w2 / w1 * Wt0}};
  double worst = 0.0, Wt_compressed = 0.0;
  for (const auto& e : rows) {
    DeflectionProtocol p = design_deflection(quarter_turn(1.0, 1.0, e.c));
    ControlValues v = p.schedule(1.0);
    NormalModeFrame f = normal_modes(v.omega1_sq, v.omega2_sq, v.gamma);
    worst = std::max({worst, relative(std::sqrt(v.omega1_sq), e.w1f),
                      relative(std::sqrt(v.omega2_sq), e.w2f),
                      relative(std::sqrt(f.Omega_t_sq), e.Wtf)});
    if (e.c == Closure::omega2_const) Wt_compressed = std::sqrt(f.Omega_t_sq);
  }
  Outcome o;
  o.pass = worst < kTable1Tol && std::abs(Wt_compressed - 6.29) < 5e-3;
  o.summary = "six final values, max rel error " + fmt(worst) + " (tol " + fmt(kTable1Tol) +
              "); compressed Omega_t(t_f) = " + std::to_string(Wt_compressed);
  return o;
}

Outcome criterion5() {
  Outcome o;
  auto t0 = Clock::now();
  TransferProtocol p;
  try {
    p = shoot_transfer(swap_spec(6.0));
  } catch (const ShootingStagnated& e) {
    o.pass = false;
    o.summary = std::string("shooting stagnated: ") + e.what();
    return o;
  }
  double shoot_s = seconds_since(t0);
  auto run = [&](InitialStateSpec init) {
    return run_engines(p.schedule, &p.reference, make_initial_state(init, p.schedule(0.0)),
                       p.spec.tf, false)
        .moments;
  };
  InitialStateSpec vac;
  vac.kind = InitialKind::uncoupled_product_ground;
  InitialStateSpec coh;
  coh.kind = InitialKind::coherent_mode1;
  coh.alpha = {1.0, 0.0};
  auto rv = run(vac), rc = run(coh);
  double e_vac = std::abs(*rv.back().H2 - *rv.front().H1);
  double e_coh = std::abs(*rc.back().H2 - *rc.front().H1);
  double e_one = std::abs(*rc.front().H1 - 1.0);
  double drift = 0.0;
  for (const auto* rec : {&rv, &rc}) {
    const double i0 = *rec->front().I_exp;
    for (const auto& r : *rec)
      drift = std::max(drift, std::abs(*r.I_exp - i0) / std::max(std::abs(i0), 1.0));
  }
  o.pass = p.residual < kShootingTol && e_vac < kTransferEnergyTol &&
           e_coh < kTransferEnergyTol && e_one < kTransferEnergyTol && drift < kInvariantDriftTol;
  std::ostringstream s;
  s << "residual " << fmt(p.residual) << " in " << fmt(shoot_s) << " s; |H2(t_f)-H1(0)| vacuum "
    << fmt(e_vac) << ", coherent " << fmt(e_coh) << "; <I> drift " << fmt(drift)
    << "; (a4,b6,c6) = (" << p.coefficients[0] << ", " << p.coefficients[1] << ", "
    << p.coefficients[2] << ") vs reference (" << kComparisonTransferCoefficients[0] << ", "
    << kComparisonTransferCoefficients[1] << ", " << kComparisonTransferCoefficients[2]
    << ") [informational]";
  o.summary = s.str();
  return o;
}

Outcome criterion6() {
  auto specs = random_deflections(50, 20240611);
  double g = 0, w = 0, sy = 0, eq = 0, nd = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    ConservationSample c = measure_conservation(specs[i], 1000 + i);
    g = std::max(g, c.G_drift);
    w = std::max(w, c.wronskian_drift);
    sy = std::max(sy, c.symplectic_drift);
    eq = std::max(eq, c.eq7_residual);
    nd = std::max(nd, c.grid_norm_drift);
  }
  Outcome o;
  o.pass = g < kGDriftTol && w < kWronskianDriftTol && sy < kSymplecticDriftTol && eq < kEq7Tol &&
           nd < kGridNormTol;
  o.summary = "50 protocols: G " + fmt(g) + ", Wronskian " + fmt(w) + ", symplectic " + fmt(sy) +
              ", Eq7 " + fmt(eq) + ", grid norm " + fmt(nd);
  return o;
}

Outcome criterion7() {
  Outcome o;
  double worst = 0.0;
  std::string field;
  for (const auto& in : cached_instances()) {
    std::string f;
    double d = in.runs.leak ? INFINITY : engine_difference(in.runs.moments, in.runs.grid, &f);
    if (d > worst) {
      worst = d;
      field = f;
    }
  }
  bool deflection_ok = worst <= kEngineTol;
  std::string weak;
  bool weak_ok = false;
  try {
    TransferProtocol p = shoot_transfer(swap_spec(0.3));
    InitialStateSpec coh;
    coh.kind = InitialKind::coherent_mode1;
    EngineRuns r = run_engines(p.schedule, &p.reference, make_initial_state(coh, p.schedule(0.0)),
                               p.spec.tf, true);
    std::string f;
    double d = r.leak ? INFINITY : engine_difference(r.moments, r.grid, &f);
    weak_ok = d <= kEngineTol;
    weak = "weak transfer max rel diff " + fmt(d) + " (" + f + ")";
  } catch (const ShootingStagnated& e) {
    std::ostringstream s;
    s << "weak transfer (gamma_b = 0.3) not designable: shooting stagnated at residual "
      << fmt(e.residual()) << ", best (a4,b6,c6) = (" << e.best()[0] << ", " << e.best()[1]
      << ", " << e.best()[2] << ")";
    weak = s.str();
  } catch (const DesignRejected& e) {
    weak = std::string("weak transfer (gamma_b = 0.3) rejected: ") + e.what();
  }
  o.pass = deflection_ok && weak_ok;
  o.summary = "deflection instances max rel diff " + fmt(worst) + " (" + field + ", tol " +
              fmt(kEngineTol) + ", " + (deflection_ok ? "ok" : "exceeded") + "); " + weak;
  return o;
}

Outcome criterion8() {
  Expansion1D e = design_1d_expansion(2.61, 6.29, 1.0);
  ControlSchedule s = e.schedule(1.0);
  InitialStateSpec init;
  init.kind = InitialKind::uncoupled_product_ground;
  GaussianState g0 = make_initial_state(init, s(0.0));
  GaussianState target = make_initial_state(init, s(1.0));
  auto times = uniform_grid(1.0, kSamples);
  auto states = propagate_moments(s, g0, times);
  GridGeometry geo = auto_geometry(states);
  GridRun run = propagate_grid(s, GridWavefunction::from_gaussian(g0, geo), times,
                               auto_time_step(s));
  double fid = std::norm(GridWavefunction::from_gaussian(target, geo).overlap(run.final_state));
  Outcome o;
  o.pass = fid >= kFidelityMin && !run.boundary_leak;
  o.summary = "grid fidelity with final ground state " + std::to_string(fid) + " (>= " +
              std::to_string(kFidelityMin) + "), moments " +
              std::to_string(gaussian_fidelity(states.back(), target));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
      {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8}};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (const auto& [k, _] : criteria) selected.push_back(k);
  bool all = true;
  for (int k : selected) {
    auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion %d\n", k);
      return 2;
    }
    Outcome o;
    auto t0 = Clock::now();
    try {
      o = it->second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d: %s  %s  [%.1f s]\n", k, o.pass ? "PASS" : "FAIL",
                o.summary.c_str(), seconds_since(t0));
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
