#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sta/deflection.hpp"
#include "sta/grid.hpp"
#include "sta/observables.hpp"
#include "sta/transfer.hpp"
#include "sta_cli/config.hpp"

namespace sta::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRejected = 2;
inline constexpr int kExitSimulation = 3;

// Relative tolerance for cross-engine agreement of observables.
inline constexpr double kEngineTolerance = 1e-3;

struct Protocol {
  ProtocolKind kind = ProtocolKind::deflection;
  ControlSchedule schedule;
  std::optional<ReferenceSolution> reference;
  std::optional<DeflectionProtocol> deflection;
  std::optional<TransferProtocol> transfer;
  std::optional<Expansion1D> expansion;
};

Protocol design_protocol(const Config& config);
// Rebuilds from stored coefficients; throws ConfigError on a hash mismatch
// or a malformed document.
Protocol protocol_from_json(const Config& config, const json& doc);
json protocol_to_json(const Config& config, const Protocol& p);
void write_protocol(const Config& config, const Protocol& p, const std::filesystem::path& dir);

struct EngineResult {
  Engine engine = Engine::moments;
  std::vector<double> times;
  std::vector<GaussianState> states;
  std::vector<ObservableRecord> records;
  json diagnostics;
};

struct SimulationResult {
  std::vector<EngineResult> runs;
  json report;
};

SimulationResult simulate_protocol(const Config& config, const Protocol& p, Engine engine);

extern const std::vector<std::string> kTimeseriesHeader;
void write_timeseries(const std::filesystem::path& path,
                      const std::vector<ObservableRecord>& records);

// max |x - x0| / max(|x0|, 1) over a series.
double drift(const std::vector<double>& series);

struct SweepRow {
  double value = 0.0;
  std::string status;  // ok, config_error, design_rejected, simulation_failed
  std::optional<double> E_l_ratio, R_t, F, I_drift, G_drift, H1_initial, H2_final;
  std::string message;
};

std::vector<SweepRow> run_sweep(const Config& config, Engine engine, unsigned threads);
void write_sweep(const std::filesystem::path& path, const std::string& parameter,
                 const std::vector<SweepRow>& rows);
unsigned sweep_threads();  // STA_THREADS or the hardware concurrency

struct Check {
  std::string name;
  bool pass = false;
  json detail;
};

std::vector<Check> verify_protocol(const Config& config, const std::filesystem::path& dir);

// Full command line handling; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sta::cli
