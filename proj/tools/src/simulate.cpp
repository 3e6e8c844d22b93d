#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>

#include <spdlog/spdlog.h>

#include "sta/error.hpp"
#include "sta/moments.hpp"
#include "sta_cli/commands.hpp"
#include "sta_cli/io.hpp"

namespace sta::cli {

const std::vector<std::string> kTimeseriesHeader = {
    "t",   "omega1_sq", "omega2_sq", "gamma",   "theta", "Omega_l_sq", "Omega_t_sq", "E_l",
    "E_t", "H1",        "H2",        "H_total", "I_exp", "G_re",       "G_im",       "norm"};

namespace {

using Field = std::optional<double> (*)(const ObservableRecord&);

// Observables compared across engines; controls and norm are excluded.
const std::vector<std::pair<const char*, Field>>& compared_fields() {
  static const std::vector<std::pair<const char*, Field>> f = {
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

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json controls_json(const ObservableRecord& r) {
  return {{"omega1_sq", r.omega1_sq}, {"omega2_sq", r.omega2_sq},
          {"gamma", r.gamma},         {"theta", r.theta},
          {"Omega_l_sq", r.Omega_l_sq}, {"Omega_t_sq", r.Omega_t_sq}};
}

GaussianState ground_state(double w1, double w2) {
  GaussianState g;
  g.cov = Eigen::Matrix4d::Zero();
  g.cov(0, 0) = 0.5 / w1;
  g.cov(1, 1) = 0.5 / w2;
  g.cov(2, 2) = 0.5 * w1;
  g.cov(3, 3) = 0.5 * w2;
  return g;
}

json engine_diagnostics(const EngineResult& run) {
  const auto& rec = run.records;
  const ObservableRecord& a = rec.front();
  const ObservableRecord& b = rec.back();
  json d;
  d["engine"] = to_string(run.engine);
  d["samples"] = rec.size();
  d["E_l"] = {{"initial", a.E_l}, {"final", b.E_l}, {"ratio", b.E_l / a.E_l}};
  d["E_t"] = {{"initial", opt(a.E_t)}, {"final", opt(b.E_t)}};
  d["R_t_final"] = opt(b.R_t);
  d["H1"] = {{"initial", opt(a.H1)}, {"final", opt(b.H1)}};
  d["H2"] = {{"initial", opt(a.H2)}, {"final", opt(b.H2)}};
  d["H_total"] = {{"initial", a.H_total}, {"final", b.H_total}};
  d["I_exp"] = {{"initial", opt(a.I_exp)}, {"final", opt(b.I_exp)}};
  json drifts = json::object();
  if (a.I_exp) {
    std::vector<double> s;
    for (const auto& r : rec) s.push_back(*r.I_exp);
    drifts["I_exp"] = drift(s);
  }
  if (a.G) {
    double g0 = std::abs(*a.G), worst = 0.0;
    for (const auto& r : rec) worst = std::max(worst, std::abs(*r.G - *a.G));
    drifts["G"] = worst / std::max(g0, 1.0);
  }
  if (a.norm) {
    std::vector<double> s;
    for (const auto& r : rec) s.push_back(*r.norm);
    drifts["norm"] = drift(s);
  }
  d["drifts"] = drifts;
  double min_nu = INFINITY, det0 = run.states.front().cov.determinant(), det_drift = 0.0;
  for (const auto& s : run.states) {
    min_nu = std::min(min_nu, symplectic_eigenvalues(s.cov).minCoeff());
    det_drift = std::max(det_drift, std::abs(s.cov.determinant() - det0) / std::abs(det0));
  }
  d["min_symplectic_eigenvalue"] = min_nu;
  d["covariance_determinant_drift"] = det_drift;
  return d;
}

// |a - b| / max(|a|, |b|, 1) per field, maximised over time.
json equivalence(const EngineResult& a, const EngineResult& b) {
  json fields = json::object();
  double worst = 0.0;
  for (const auto& [name, get] : compared_fields()) {
    double m = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < a.records.size(); ++k) {
      auto x = get(a.records[k]), y = get(b.records[k]);
      if (x.has_value() != y.has_value()) {
        m = INFINITY;
        any = true;
        continue;
      }
      if (!x) continue;
      any = true;
      m = std::max(m, std::abs(*x - *y) / std::max({std::abs(*x), std::abs(*y), 1.0}));
    }
    if (any) {
      fields[name] = m;
      worst = std::max(worst, m);
    }
  }
  return {{"max_relative_difference", worst},
          {"fields", fields},
          {"tolerance", kEngineTolerance},
          {"pass", worst <= kEngineTolerance}};
}

}  // namespace

double drift(const std::vector<double>& s) {
  if (s.empty()) return 0.0;
  double worst = 0.0;
  for (double x : s) worst = std::max(worst, std::abs(x - s.front()));
  return worst / std::max(std::abs(s.front()), 1.0);
}

void write_timeseries(const std::filesystem::path& path,
                      const std::vector<ObservableRecord>& records) {
  CsvWriter w(path, kTimeseriesHeader);
  for (const auto& r : records) {
    std::optional<double> gre, gim;
    if (r.G) {
      gre = r.G->real();
      gim = r.G->imag();
    }
    w.row(std::vector<std::optional<double>>{r.t, r.omega1_sq, r.omega2_sq, r.gamma, r.theta,
                                             r.Omega_l_sq, r.Omega_t_sq, r.E_l, r.E_t, r.H1,
                                             r.H2, r.H_total, r.I_exp, gre, gim, r.norm});
  }
}

SimulationResult simulate_protocol(const Config& c, const Protocol& p, Engine engine) {
  const auto wall0 = std::chrono::steady_clock::now();
  const std::vector<double> times = uniform_grid(c.duration(), c.simulation.samples);
  const GaussianState initial = make_initial_state(c.simulation.initial, p.schedule(0.0));
  const ReferenceSolution* ref = p.reference ? &*p.reference : nullptr;

  SimulationResult out;
  std::vector<GaussianState> moment_states =
      propagate_moments(p.schedule, initial, times, c.simulation.ode);

  std::optional<GaussianState> target;
  if (p.expansion)
    target = ground_state(c.expansion.spectator_omega, p.expansion->omega_final);

  if (engine == Engine::moments || engine == Engine::both) {
    EngineResult r;
    r.engine = Engine::moments;
    r.times = times;
    r.states = moment_states;
    r.records = observe_series(p.schedule, times, r.states, ref);
    r.diagnostics = engine_diagnostics(r);
    if (target)
      r.diagnostics["fidelity_final_ground"] = gaussian_fidelity(r.states.back(), *target);
    out.runs.push_back(std::move(r));
  }
  if (engine == Engine::grid || engine == Engine::both) {
    const GridOptions& go = c.grid;
    GridGeometry g = auto_geometry(moment_states, go.min_n, go.margin, go.sigmas, go.max_n);
    if (go.n1) g.n1 = *go.n1;
    if (go.n2) g.n2 = *go.n2;
    if (go.L1) g.L1 = *go.L1;
    if (go.L2) g.L2 = *go.L2;
    const double dt = go.dt ? *go.dt : auto_time_step(p.schedule, go.dt_threshold);
    spdlog::info("grid engine: {}x{} points, box [{:.3g}, {:.3g}], dt {:.3e}", g.n1, g.n2, g.L1,
                 g.L2, dt);
    GridWavefunction psi0 = GridWavefunction::from_gaussian(initial, g);
    GridRun run = propagate_grid(p.schedule, psi0, times, dt);
    if (run.boundary_leak)
      throw SimulationError("grid boundary leak: edge probability " +
                                format_double(run.max_boundary_probability) + " exceeds " +
                                format_double(kBoundaryLeakThreshold) + " at t=" +
                                format_double(*run.leak_time),
                            *run.leak_time);
    EngineResult r;
    r.engine = Engine::grid;
    r.times = times;
    r.states = run.moments;
    r.records = observe_series(p.schedule, times, r.states, ref, &run.norms);
    r.diagnostics = engine_diagnostics(r);
    r.diagnostics["grid"] = {{"n1", g.n1},
                             {"n2", g.n2},
                             {"L1", g.L1},
                             {"L2", g.L2},
                             {"dt", run.dt},
                             {"steps", run.steps},
                             {"max_boundary_probability", run.max_boundary_probability}};
    if (target) {
      GridWavefunction ground = GridWavefunction::from_gaussian(*target, g);
      r.diagnostics["fidelity_final_ground"] = std::norm(ground.overlap(run.final_state));
    }
    out.runs.push_back(std::move(r));
  }

  json report;
  report["kind"] = to_string(c.kind);
  report["config_hash"] = c.design_hash();
  report["t_f"] = c.duration();
  const ObservableRecord& first = out.runs.front().records.front();
  const ObservableRecord& last = out.runs.front().records.back();
  report["boundary"] = {{"start", controls_json(first)}, {"end", controls_json(last)}};
  if (p.deflection) {
    const auto& d = *p.deflection;
    report["deflection"] = {{"F", d.F}, {"F_squared", d.F * d.F}, {"ratio", d.ratio},
                            {"closure", to_string(d.spec.closure)}};
  }
  if (p.transfer) {
    const auto& t = *p.transfer;
    report["transfer"] = {
        {"coefficients", {{"a4", t.coefficients[0]}, {"b6", t.coefficients[1]},
                          {"c6", t.coefficients[2]}}},
        {"comparison", {{"a4", kComparisonTransferCoefficients[0]},
                        {"b6", kComparisonTransferCoefficients[1]},
                        {"c6", kComparisonTransferCoefficients[2]}}},
        {"residual", t.residual},
        {"evaluations", t.evaluations},
        {"attempts", t.attempts}};
  }
  json engines = json::array();
  for (const auto& r : out.runs) engines.push_back(r.diagnostics);
  report["engines"] = engines;
  if (out.runs.size() == 2) report["equivalence"] = equivalence(out.runs[0], out.runs[1]);
  report["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  out.report = std::move(report);
  return out;
}

}  // namespace sta::cli
