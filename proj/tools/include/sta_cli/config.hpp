#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sta/deflection.hpp"
#include "sta/moments.hpp"
#include "sta/ode.hpp"
#include "sta/transfer.hpp"

namespace sta::cli {

using json = nlohmann::json;

enum class Engine { moments, grid, both };
enum class ProtocolKind { deflection, transfer, linear_ramp, expansion_1d };

std::string to_string(Engine e);
Engine engine_from_string(const std::string& name);
std::string to_string(ProtocolKind k);

struct RampSpec {
  WaveguideBoundary initial;
  WaveguideBoundary final_boundary;
  double tf = 1.0;
};

struct ExpansionSpec {
  double omega_initial = 1.0;
  double omega_final = 1.0;
  double tf = 1.0;
  double spectator_omega = 1.0;
};

struct GridOptions {
  std::optional<int> n1, n2;
  std::optional<double> L1, L2;
  std::optional<double> dt;
  int min_n = 256;
  int max_n = 2048;
  double margin = 1.25;
  double sigmas = 6.0;
  double dt_threshold = 1e-3;
};

struct SimulationOptions {
  std::size_t samples = 401;
  InitialStateSpec initial;
  OdeOptions ode;
};

struct SweepOptions {
  std::string parameter;  // "t_f", "ratio" or "F"
  std::vector<double> values;
};

struct Config {
  ProtocolKind kind = ProtocolKind::deflection;
  json document;
  Engine engine = Engine::moments;
  std::filesystem::path out_dir = "out";
  std::size_t schedule_samples = 2001;

  DeflectionSpec deflection;
  TransferSpec transfer;
  ShootOptions shooting;
  RampSpec ramp;
  ExpansionSpec expansion;

  SimulationOptions simulation;
  GridOptions grid;
  std::optional<SweepOptions> sweep;

  double duration() const;
  // Hex SHA-256 of the design-relevant part of the document.
  std::string design_hash() const;
  // Copy with the swept parameter replaced; the document is updated too.
  Config with_parameter(const std::string& name, double value) const;
};

// Validates against the schema; throws ConfigError naming the offending path.
Config parse_config(const json& document);
Config load_config(const std::filesystem::path& path);

}  // namespace sta::cli
