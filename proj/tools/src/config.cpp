#include "sta_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include <openssl/evp.h>

#include "sta/error.hpp"

namespace sta::cli {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config" + (path.empty() ? std::string() : " " + path) + ": " + what);
}

// Object view that rejects keys outside the allowed set.
class Obj {
 public:
  Obj(const json& j, std::string path, const std::vector<std::string>& allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "/" : path_, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!ok.count(key)) fail(sub(key), "unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string sub(const std::string& key) const { return path_ + "/" + key; }
  const json& raw(const char* key) const { return j_.at(key); }

  double number(const char* key) const {
    if (!has(key)) fail(sub(key), "required number missing");
    return as_number(j_.at(key), sub(key));
  }
  double number(const char* key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }
  std::optional<double> maybe_number(const char* key) const {
    if (!has(key)) return std::nullopt;
    return number(key);
  }
  double positive(const char* key) const {
    double v = number(key);
    if (!(v > 0.0)) fail(sub(key), "must be positive, got " + std::to_string(v));
    return v;
  }
  double positive(const char* key, double fallback) const {
    return has(key) ? positive(key) : fallback;
  }
  long long integer(const char* key, long long fallback, long long min) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(sub(key), "expected an integer");
    long long n = v.get<long long>();
    if (n < min) fail(sub(key), "must be at least " + std::to_string(min));
    return n;
  }
  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) fail(sub(key), "expected a string");
    return j_.at(key).get<std::string>();
  }
  Obj child(const char* key, std::initializer_list<const char*> allowed) const {
    return Obj(j_.at(key), sub(key), {allowed.begin(), allowed.end()});
  }
  std::vector<double> numbers(const char* key) const {
    const json& v = j_.at(key);
    if (!v.is_array()) fail(sub(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(as_number(v[i], sub(key) + "/" + std::to_string(i)));
    return out;
  }

  static double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where, "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) fail(where, "must be finite");
    return d;
  }

 private:
  const json& j_;
  std::string path_;
};

// Translates library validation errors into path-qualified config errors.
template <class F>
auto guarded(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    std::string what = e.what();
    if (what.rfind("config", 0) == 0) throw;
    fail(path, what);
  }
}

double freq(const Obj& o, const char* plain, const char* squared) {
  const bool a = o.has(plain), b = o.has(squared);
  if (a == b)
    fail(o.sub(plain), std::string("give exactly one of '") + plain + "' or '" + squared +
                           "'");
  if (a) return o.positive(plain);
  return std::sqrt(o.positive(squared));
}

std::pair<double, double> freq_pair(const Obj& parent, const char* key) {
  if (!parent.has(key)) fail(parent.sub(key), "required object missing");
  Obj o = parent.child(key, {"omega1", "omega2", "omega1_sq", "omega2_sq"});
  return {freq(o, "omega1", "omega1_sq"), freq(o, "omega2", "omega2_sq")};
}

WaveguideBoundary guide(const Obj& parent, const char* key) {
  auto [w1, w2] = freq_pair(parent, key);
  return guarded(parent.sub(key), [&] { return waveguide_boundary(w1, w2); });
}

double duration(const Obj& o) {
  if (!o.has("t_f")) fail("/t_f", "required number missing");
  double tf = o.number("t_f");
  if (!(tf > 0.0)) fail("/t_f", "duration must be positive, got " + std::to_string(tf));
  return tf;
}

void parse_deflection(const Obj& o, Config& c) {
  DeflectionSpec& d = c.deflection;
  d.tf = duration(o);
  d.closure = guarded("/closure",
                      [&] { return closure_from_string(o.string("closure", "gamma_const")); });
  d.delta_theta = o.maybe_number("delta_theta");
  if (!o.has("initial")) fail("/initial", "required object missing");
  Obj init = o.child("initial", {"omega1", "omega2", "omega1_sq", "omega2_sq"});
  const bool has_w2 = init.has("omega2") || init.has("omega2_sq");
  if (has_w2) {
    d.initial = guide(o, "initial");
  } else {
    if (!d.delta_theta) fail("/initial/omega2", "required unless delta_theta is given");
    double w1 = freq(init, "omega1", "omega1_sq");
    d.initial = guarded("/delta_theta",
                        [&] { return initial_for_deflection_angle(w1, *d.delta_theta); });
  }
  if (o.has("final")) d.final_boundary = guide(o, "final");
  d.F = o.maybe_number("F");
  d.ratio = o.maybe_number("ratio");
  if (d.F && d.ratio) fail("/F", "give either F or ratio, not both");
  if (d.F && !(*d.F > 0.0)) fail("/F", "must be positive");
  if (d.ratio && *d.ratio == 0.0) fail("/ratio", "must be nonzero");
  d.start_kind = guarded("/start_kind", [&] {
    return boundary_kind_from_string(o.string("start_kind", "longitudinal_momentum"));
  });
  d.end_kind = guarded("/end_kind", [&] {
    return boundary_kind_from_string(o.string("end_kind", "longitudinal_momentum"));
  });
  d.singularity_floor = o.positive("singularity_floor", d.singularity_floor);
  d.reference_nodes =
      static_cast<std::size_t>(o.integer("reference_nodes", 2001, 5));
}

void parse_transfer(const Obj& o, Config& c) {
  TransferSpec& s = c.transfer;
  s.tf = duration(o);
  std::tie(s.omega1_0, s.omega2_0) = freq_pair(o, "initial");
  std::tie(s.omega1_f, s.omega2_f) = freq_pair(o, "final");
  if (o.has("gamma_b")) {
    if (o.has("gamma_0") || o.has("gamma_f"))
      fail("/gamma_b", "give gamma_b or the pair gamma_0/gamma_f, not both");
    s.gamma_0 = s.gamma_f = o.number("gamma_b");
  } else {
    s.gamma_0 = o.number("gamma_0");
    s.gamma_f = o.number("gamma_f");
  }
  if (o.has("c0")) s.c0 = o.positive("c0");
  if (o.has("index0")) {
    auto v = o.numbers("index0");
    if (v.size() != 2) fail("/index0", "expected two numbers");
    s.index0 = {v[0], v[1]};
  }
  guarded("", [&] {
    s.validate();
    return 0;
  });
  ShootOptions& sh = c.shooting;
  if (o.has("shooting")) {
    Obj so = o.child("shooting", {"initial_guess", "restarts", "perturbation", "seed",
                                  "tolerance", "simplex_iterations", "polish_iterations",
                                  "reference_nodes"});
    if (so.has("initial_guess")) {
      auto v = so.numbers("initial_guess");
      if (v.size() != 3) fail("/shooting/initial_guess", "expected three numbers");
      sh.initial_guess = {v[0], v[1], v[2]};
    }
    sh.restarts = static_cast<int>(so.integer("restarts", sh.restarts, 0));
    sh.perturbation = so.positive("perturbation", sh.perturbation);
    sh.seed = static_cast<std::uint64_t>(so.integer("seed", static_cast<long long>(sh.seed), 0));
    sh.tolerance = so.positive("tolerance", sh.tolerance);
    sh.simplex_iterations =
        static_cast<int>(so.integer("simplex_iterations", sh.simplex_iterations, 1));
    sh.polish_iterations =
        static_cast<int>(so.integer("polish_iterations", sh.polish_iterations, 0));
    sh.reference_nodes = static_cast<std::size_t>(
        so.integer("reference_nodes", static_cast<long long>(sh.reference_nodes), 5));
  }
}

void parse_ramp(const Obj& o, Config& c) {
  c.ramp.tf = duration(o);
  c.ramp.initial = guide(o, "initial");
  if (o.has("final") && o.has("closure")) fail("/final", "give final or closure, not both");
  if (o.has("final")) {
    c.ramp.final_boundary = guide(o, "final");
  } else {
    Closure k = guarded("/closure",
                        [&] { return closure_from_string(o.string("closure", "gamma_const")); });
    c.ramp.final_boundary = table1_targets(c.ramp.initial, k);
  }
}

void parse_expansion(const Obj& o, Config& c) {
  c.expansion.tf = duration(o);
  c.expansion.omega_initial = o.positive("omega_initial");
  c.expansion.omega_final = o.positive("omega_final");
  c.expansion.spectator_omega = o.positive("spectator_omega", 1.0);
}

InitialStateSpec default_initial(ProtocolKind k) {
  InitialStateSpec s;
  if (k == ProtocolKind::deflection || k == ProtocolKind::linear_ramp) {
    s.kind = InitialKind::waveguide_packet;
    s.q_l0 = 0.0;
    s.p_l0 = 1.0;
  } else {
    s.kind = InitialKind::uncoupled_product_ground;
  }
  return s;
}

void parse_simulation(const Obj& top, Config& c) {
  SimulationOptions& sim = c.simulation;
  sim.initial = default_initial(c.kind);
  if (!top.has("simulation")) return;
  Obj o = top.child("simulation", {"samples", "initial_state", "ode"});
  sim.samples = static_cast<std::size_t>(o.integer("samples", 401, 2));
  if (o.has("initial_state")) {
    Obj s = o.child("initial_state", {"kind", "q_l0", "p_l0", "sigma", "alpha"});
    std::string kind = s.string("kind", "");
    if (kind == "waveguide_packet") {
      sim.initial.kind = InitialKind::waveguide_packet;
      sim.initial.q_l0 = s.number("q_l0", 0.0);
      sim.initial.p_l0 = s.number("p_l0", 1.0);
      sim.initial.sigma = s.positive("sigma", sim.initial.sigma);
    } else if (kind == "uncoupled_product_ground") {
      sim.initial.kind = InitialKind::uncoupled_product_ground;
    } else if (kind == "coherent_mode1") {
      sim.initial.kind = InitialKind::coherent_mode1;
      sim.initial.alpha = {1.0, 0.0};
      if (s.has("alpha")) {
        const json& a = s.raw("alpha");
        if (a.is_array()) {
          auto v = s.numbers("alpha");
          if (v.size() != 2) fail(s.sub("alpha"), "expected [re, im]");
          sim.initial.alpha = {v[0], v[1]};
        } else {
          sim.initial.alpha = {Obj::as_number(a, s.sub("alpha")), 0.0};
        }
      }
    } else {
      fail(s.sub("kind"), "expected waveguide_packet, uncoupled_product_ground or "
                          "coherent_mode1");
    }
    if (sim.initial.kind != InitialKind::waveguide_packet &&
        (s.has("q_l0") || s.has("p_l0") || s.has("sigma")))
      fail(s.sub("kind"), "packet parameters only apply to waveguide_packet");
    if (sim.initial.kind != InitialKind::coherent_mode1 && s.has("alpha"))
      fail(s.sub("alpha"), "alpha only applies to coherent_mode1");
  }
  if (o.has("ode")) {
    Obj od = o.child("ode", {"method", "abs_tol", "rel_tol", "fixed_steps", "max_steps"});
    std::string m = od.string("method", "adaptive");
    if (m == "adaptive")
      sim.ode.method = OdeOptions::Method::adaptive;
    else if (m == "fixed_rk4")
      sim.ode.method = OdeOptions::Method::fixed_rk4;
    else
      fail(od.sub("method"), "expected adaptive or fixed_rk4");
    sim.ode.abs_tol = od.positive("abs_tol", sim.ode.abs_tol);
    sim.ode.rel_tol = od.positive("rel_tol", sim.ode.rel_tol);
    sim.ode.fixed_steps = static_cast<std::size_t>(
        od.integer("fixed_steps", static_cast<long long>(sim.ode.fixed_steps), 1));
    sim.ode.max_steps = static_cast<std::size_t>(
        od.integer("max_steps", static_cast<long long>(sim.ode.max_steps), 1));
  }
}

void parse_grid(const Obj& top, Config& c) {
  if (!top.has("grid")) return;
  Obj o = top.child("grid", {"n", "n1", "n2", "L1", "L2", "dt", "min_n", "max_n", "margin",
                             "sigmas", "dt_threshold"});
  GridOptions& g = c.grid;
  if (o.has("n") && (o.has("n1") || o.has("n2"))) fail(o.sub("n"), "give n or n1/n2");
  auto pow2 = [&](const char* key) {
    long long n = o.integer(key, 0, 8);
    if (n & (n - 1)) fail(o.sub(key), "must be a power of two");
    return static_cast<int>(n);
  };
  if (o.has("n")) g.n1 = g.n2 = pow2("n");
  if (o.has("n1")) g.n1 = pow2("n1");
  if (o.has("n2")) g.n2 = pow2("n2");
  if (o.has("L1")) g.L1 = o.positive("L1");
  if (o.has("L2")) g.L2 = o.positive("L2");
  if (o.has("dt")) g.dt = o.positive("dt");
  if (o.has("min_n")) g.min_n = pow2("min_n");
  if (o.has("max_n")) g.max_n = pow2("max_n");
  g.margin = o.positive("margin", g.margin);
  g.sigmas = o.positive("sigmas", g.sigmas);
  g.dt_threshold = o.positive("dt_threshold", g.dt_threshold);
}

void parse_sweep(const Obj& top, Config& c) {
  if (!top.has("sweep")) return;
  Obj o = top.child("sweep", {"parameter", "values", "from", "to", "count"});
  SweepOptions s;
  s.parameter = o.string("parameter", "t_f");
  bool allowed = s.parameter == "t_f" ||
                 (c.kind == ProtocolKind::deflection &&
                  (s.parameter == "ratio" || s.parameter == "F"));
  if (!allowed)
    fail(o.sub("parameter"), "cannot sweep '" + s.parameter + "' for kind " +
                                 to_string(c.kind));
  if (o.has("values")) {
    if (o.has("from") || o.has("to") || o.has("count"))
      fail(o.sub("values"), "give values or from/to/count, not both");
    s.values = o.numbers("values");
  } else {
    double a = o.number("from"), b = o.number("to");
    auto n = static_cast<std::size_t>(o.integer("count", 0, 1));
    if (n == 0) fail(o.sub("count"), "required integer missing");
    for (std::size_t i = 0; i < n; ++i)
      s.values.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) /
                                          static_cast<double>(n - 1));
  }
  if (s.values.empty()) fail(o.sub("values"), "sweep list is empty");
  c.sweep = std::move(s);
}

}  // namespace

std::string to_string(Engine e) {
  switch (e) {
    case Engine::moments: return "moments";
    case Engine::grid: return "grid";
    case Engine::both: return "both";
  }
  return "?";
}

Engine engine_from_string(const std::string& name) {
  if (name == "moments") return Engine::moments;
  if (name == "grid") return Engine::grid;
  if (name == "both") return Engine::both;
  throw ConfigError("unknown engine '" + name + "' (expected moments, grid or both)");
}

std::string to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::deflection: return "deflection";
    case ProtocolKind::transfer: return "transfer";
    case ProtocolKind::linear_ramp: return "linear_ramp";
    case ProtocolKind::expansion_1d: return "expansion_1d";
  }
  return "?";
}

double Config::duration() const {
  switch (kind) {
    case ProtocolKind::deflection: return deflection.tf;
    case ProtocolKind::transfer: return transfer.tf;
    case ProtocolKind::linear_ramp: return ramp.tf;
    case ProtocolKind::expansion_1d: return expansion.tf;
  }
  return 0.0;
}

std::string Config::design_hash() const {
  json d = document;
  for (const char* k : {"engine", "output", "simulation", "grid", "sweep", "name"}) d.erase(k);
  const std::string text = d.dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

Config Config::with_parameter(const std::string& name, double value) const {
  json d = document;
  if (name == "t_f") {
    d["t_f"] = value;
  } else if (name == "ratio" || name == "F") {
    d.erase("ratio");
    d.erase("F");
    d[name] = value;
  } else {
    throw ConfigError("unknown sweep parameter '" + name + "'");
  }
  Config c = parse_config(d);
  c.engine = engine;
  c.out_dir = out_dir;
  return c;
}

Config parse_config(const json& document) {
  if (!document.is_object()) fail("/", "expected a JSON object");
  if (!document.contains("kind") || !document.at("kind").is_string())
    fail("/kind", "required string missing");
  const std::string kind = document.at("kind").get<std::string>();
  Config c;
  c.document = document;
  std::vector<std::string> allowed = {"kind",     "name", "engine", "output", "schedule_samples",
                                      "simulation", "grid", "sweep",  "t_f"};
  auto extend = [&](std::initializer_list<const char*> extra) {
    allowed.insert(allowed.end(), extra.begin(), extra.end());
  };
  if (kind == "deflection") {
    c.kind = ProtocolKind::deflection;
    extend({"initial", "final", "closure", "delta_theta", "F", "ratio", "start_kind",
            "end_kind", "singularity_floor", "reference_nodes"});
  } else if (kind == "transfer") {
    c.kind = ProtocolKind::transfer;
    extend({"initial", "final", "gamma_b", "gamma_0", "gamma_f", "c0", "index0", "shooting"});
  } else if (kind == "linear_ramp") {
    c.kind = ProtocolKind::linear_ramp;
    extend({"initial", "final", "closure"});
  } else if (kind == "expansion_1d") {
    c.kind = ProtocolKind::expansion_1d;
    extend({"omega_initial", "omega_final", "spectator_omega"});
  } else {
    fail("/kind", "unknown kind '" + kind +
                      "' (expected deflection, transfer, linear_ramp or expansion_1d)");
  }
  Obj top(document, "", allowed);
  switch (c.kind) {
    case ProtocolKind::deflection: parse_deflection(top, c); break;
    case ProtocolKind::transfer: parse_transfer(top, c); break;
    case ProtocolKind::linear_ramp: parse_ramp(top, c); break;
    case ProtocolKind::expansion_1d: parse_expansion(top, c); break;
  }
  if (top.has("engine"))
    c.engine = guarded("/engine", [&] { return engine_from_string(top.string("engine", "")); });
  if (top.has("output")) {
    Obj o = top.child("output", {"dir"});
    c.out_dir = o.string("dir", c.out_dir.string());
  }
  c.schedule_samples = static_cast<std::size_t>(top.integer("schedule_samples", 2001, 5));
  parse_simulation(top, c);
  parse_grid(top, c);
  parse_sweep(top, c);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace sta::cli
