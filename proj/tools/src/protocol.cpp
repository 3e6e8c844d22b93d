#include <cmath>

#include <spdlog/spdlog.h>

#include "sta/error.hpp"
#include "sta_cli/commands.hpp"
#include "sta_cli/io.hpp"

namespace sta::cli {
namespace {

json guide_json(const WaveguideBoundary& w) {
  return {{"omega1", w.omega1}, {"omega2", w.omega2}, {"gamma", w.gamma},
          {"theta", w.theta},   {"Omega_t", w.Omega_t}};
}

std::vector<double> doubles(const json& doc, const char* where) {
  if (!doc.is_array()) throw ConfigError(std::string("protocol: ") + where + " is not an array");
  std::vector<double> out;
  for (const auto& v : doc) {
    if (!v.is_number()) throw ConfigError(std::string("protocol: ") + where + " has a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

const json& field(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key))
    throw ConfigError(std::string("protocol: missing field '") + key + "'");
  return doc.at(key);
}

Protocol from_deflection(DeflectionProtocol d) {
  Protocol p;
  p.kind = ProtocolKind::deflection;
  p.schedule = d.schedule;
  p.reference = d.reference;
  p.deflection = std::move(d);
  return p;
}

Protocol from_transfer(TransferProtocol t) {
  Protocol p;
  p.kind = ProtocolKind::transfer;
  p.schedule = t.schedule;
  p.reference = t.reference;
  p.transfer = std::move(t);
  return p;
}

Protocol from_expansion(const Expansion1D& e, double spectator) {
  Protocol p;
  p.kind = ProtocolKind::expansion_1d;
  p.schedule = e.schedule(spectator);
  p.expansion = e;
  return p;
}

Protocol from_ramp(const RampSpec& r) {
  Protocol p;
  p.kind = ProtocolKind::linear_ramp;
  p.schedule = linear_ramp_schedule(r.initial, r.final_boundary, r.tf);
  return p;
}

}  // namespace

Protocol design_protocol(const Config& c) {
  switch (c.kind) {
    case ProtocolKind::deflection:
      return from_deflection(design_deflection(c.deflection));
    case ProtocolKind::transfer: {
      TransferProtocol t = shoot_transfer(c.transfer, c.shooting);
      spdlog::info("transfer converged: residual {:.3e}, (a4, b6, c6) = ({:.6f}, {:.6f}, {:.6f})",
                   t.residual, t.coefficients[0], t.coefficients[1], t.coefficients[2]);
      return from_transfer(std::move(t));
    }
    case ProtocolKind::linear_ramp:
      return from_ramp(c.ramp);
    case ProtocolKind::expansion_1d:
      return from_expansion(
          design_1d_expansion(c.expansion.omega_initial, c.expansion.omega_final, c.expansion.tf),
          c.expansion.spectator_omega);
  }
  throw ConfigError("unknown protocol kind");
}

json protocol_to_json(const Config& c, const Protocol& p) {
  json doc = {{"format", "sta-protocol"},
              {"version", 1},
              {"kind", to_string(p.kind)},
              {"config_hash", c.design_hash()},
              {"t_f", c.duration()},
              {"files", {{"schedule", "schedule.csv"}}}};
  if (p.reference) doc["files"]["reference"] = "reference.csv";
  if (p.deflection) {
    const auto& d = *p.deflection;
    doc["deflection"] = {{"closure", to_string(d.spec.closure)},
                         {"start_kind", to_string(d.spec.start_kind)},
                         {"end_kind", to_string(d.spec.end_kind)},
                         {"initial", guide_json(d.initial)},
                         {"final", guide_json(d.final_boundary)},
                         {"delta_theta", d.final_boundary.theta - d.initial.theta},
                         {"F", d.F},
                         {"F_squared", d.F * d.F},
                         {"ratio", d.ratio},
                         {"u1", d.u1.coefficients()},
                         {"u2", d.u2.coefficients()},
                         {"condition_number", std::max(d.u1.condition_number(),
                                                       d.u2.condition_number())},
                         {"singularity",
                          {{"min_abs_u1", d.singularity.min_abs_u1},
                           {"t_min_u1", d.singularity.t_min_u1},
                           {"min_abs_u2", d.singularity.min_abs_u2},
                           {"t_min_u2", d.singularity.t_min_u2},
                           {"floor", d.singularity.floor}}}};
  }
  if (p.transfer) {
    const auto& t = *p.transfer;
    doc["transfer"] = {
        {"coefficients", {{"a4", t.coefficients[0]}, {"b6", t.coefficients[1]},
                          {"c6", t.coefficients[2]}}},
        {"comparison", {{"a4", kComparisonTransferCoefficients[0]},
                        {"b6", kComparisonTransferCoefficients[1]},
                        {"c6", kComparisonTransferCoefficients[2]},
                        {"note", "informational only; optimizer-dependent"}}},
        {"residual", t.residual},
        {"final_residuals", t.final_residuals},
        {"evaluations", t.evaluations},
        {"attempts", t.attempts},
        {"c0", t.spec.c0_value()},
        {"index0", t.spec.index0},
        {"gamma", t.gamma.coefficients()},
        {"u1_imag", t.u1I.coefficients()},
        {"u2_imag", t.u2I.coefficients()}};
  }
  if (p.expansion) {
    const auto& e = *p.expansion;
    doc["expansion_1d"] = {{"rho", e.rho.coefficients()},
                           {"K", e.K},
                           {"omega_initial", e.omega_initial},
                           {"omega_final", e.omega_final},
                           {"spectator_omega", c.expansion.spectator_omega}};
  }
  if (p.kind == ProtocolKind::linear_ramp)
    doc["linear_ramp"] = {{"initial", guide_json(c.ramp.initial)},
                          {"final", guide_json(c.ramp.final_boundary)}};
  return doc;
}

Protocol protocol_from_json(const Config& c, const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "sta-protocol")
    throw ConfigError("protocol: not an sta-protocol document");
  const std::string hash = field(doc, "config_hash").get<std::string>();
  if (hash != c.design_hash())
    throw ConfigError("protocol: config hash mismatch (protocol " + hash.substr(0, 12) +
                      ", config " + c.design_hash().substr(0, 12) +
                      "); run design again for this config");
  if (field(doc, "kind").get<std::string>() != to_string(c.kind))
    throw ConfigError("protocol: kind differs from the config");
  try {
    switch (c.kind) {
      case ProtocolKind::deflection: {
        const json& d = field(doc, "deflection");
        PolynomialAnsatz u1(doubles(field(d, "u1"), "deflection.u1"), c.deflection.tf);
        PolynomialAnsatz u2(doubles(field(d, "u2"), "deflection.u2"), c.deflection.tf);
        return from_deflection(assemble_deflection(c.deflection, u1, u2));
      }
      case ProtocolKind::transfer: {
        const json& k = field(field(doc, "transfer"), "coefficients");
        std::array<double, 3> x{field(k, "a4").get<double>(), field(k, "b6").get<double>(),
                                field(k, "c6").get<double>()};
        TransferProtocol t = assemble_transfer(c.transfer, x, c.shooting.ode,
                                               c.shooting.reference_nodes);
        const json& tj = field(doc, "transfer");
        t.evaluations = tj.value("evaluations", 0);
        t.attempts = tj.value("attempts", 0);
        return from_transfer(std::move(t));
      }
      case ProtocolKind::linear_ramp:
        return from_ramp(c.ramp);
      case ProtocolKind::expansion_1d: {
        const json& e = field(doc, "expansion_1d");
        Expansion1D x;
        x.rho = PolynomialAnsatz(doubles(field(e, "rho"), "expansion_1d.rho"), c.expansion.tf);
        x.K = field(e, "K").get<double>();
        x.omega_initial = field(e, "omega_initial").get<double>();
        x.omega_final = field(e, "omega_final").get<double>();
        return from_expansion(x, c.expansion.spectator_omega);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("protocol: malformed field: ") + e.what());
  }
  throw ConfigError("unknown protocol kind");
}

void write_protocol(const Config& c, const Protocol& p, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json(dir / "protocol.json", protocol_to_json(c, p));
  {
    CsvWriter w(dir / "schedule.csv",
                {"t", "omega1_sq", "omega2_sq", "gamma", "theta", "Omega_l_sq", "Omega_t_sq"});
    ThetaTracker tracker;
    for (double t : uniform_grid(c.duration(), c.schedule_samples)) {
      ControlValues v = p.schedule(t);
      NormalModeFrame f = normal_modes(v.omega1_sq, v.omega2_sq, v.gamma);
      double theta = tracker.unwrap(f);
      w.row(std::vector<std::optional<double>>{t, v.omega1_sq, v.omega2_sq, v.gamma, theta,
                                               f.Omega_l_sq, f.Omega_t_sq});
    }
  }
  if (p.reference) {
    CsvWriter w(dir / "reference.csv", {"t", "u1_re", "u1_im", "u2_re", "u2_im", "du1_re",
                                        "du1_im", "du2_re", "du2_im"});
    for (const auto& n : p.reference->nodes())
      w.row(std::vector<std::optional<double>>{n.t, n.u[0].real(), n.u[0].imag(),
                                               n.u[1].real(), n.u[1].imag(), n.du[0].real(),
                                               n.du[0].imag(), n.du[1].real(), n.du[1].imag()});
  }
}

}  // namespace sta::cli
