#include <atomic>
#include <cstdlib>
#include <thread>

#include <spdlog/spdlog.h>

#include "sta/error.hpp"
#include "sta_cli/commands.hpp"
#include "sta_cli/io.hpp"

namespace sta::cli {
namespace {

std::optional<double> get(const json& j, std::initializer_list<const char*> path) {
  const json* cur = &j;
  for (const char* k : path) {
    if (!cur->is_object() || !cur->contains(k)) return std::nullopt;
    cur = &cur->at(k);
  }
  if (!cur->is_number()) return std::nullopt;
  return cur->get<double>();
}

SweepRow run_point(const Config& base, const std::string& parameter, double value,
                   Engine engine) {
  SweepRow row;
  row.value = value;
  try {
    Config c = base.with_parameter(parameter, value);
    Protocol p = design_protocol(c);
    SimulationResult s = simulate_protocol(c, p, engine);
    const json& e = s.report["engines"][0];
    row.E_l_ratio = get(e, {"E_l", "ratio"});
    row.R_t = get(e, {"R_t_final"});
    row.I_drift = get(e, {"drifts", "I_exp"});
    row.G_drift = get(e, {"drifts", "G"});
    row.H1_initial = get(e, {"H1", "initial"});
    row.H2_final = get(e, {"H2", "final"});
    if (p.deflection) row.F = p.deflection->F;
    row.status = "ok";
  } catch (const ConfigError& e) {
    row.status = "config_error";
    row.message = e.what();
  } catch (const DesignRejected& e) {
    row.status = "design_rejected";
    row.message = e.what();
  } catch (const std::exception& e) {
    row.status = "simulation_failed";
    row.message = e.what();
  }
  if (row.status != "ok")
    spdlog::warn("sweep point {} = {}: {} ({})", parameter, value, row.status, row.message);
  return row;
}

}  // namespace

unsigned sweep_threads() {
  if (const char* env = std::getenv("STA_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1)
      throw ConfigError("STA_THREADS must be a positive integer, got '" + std::string(env) + "'");
    return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SweepRow> run_sweep(const Config& c, Engine engine, unsigned threads) {
  if (!c.sweep) throw ConfigError("config: sweep section missing");
  const auto& values = c.sweep->values;
  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < values.size();)
      rows[i] = run_point(c, c.sweep->parameter, values[i], engine);
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(values.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
  }
  return rows;
}

void write_sweep(const std::filesystem::path& path, const std::string& parameter,
                 const std::vector<SweepRow>& rows) {
  CsvWriter w(path, {"index", "parameter", "value", "status", "E_l_ratio", "R_t", "F",
                     "F_squared", "I_drift", "G_drift", "H1_initial", "H2_final", "message"});
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    std::optional<double> f2;
    if (r.F) f2 = *r.F * *r.F;
    w.row(std::vector<std::string>{std::to_string(i), parameter, format_double(r.value),
                                   r.status, cell(r.E_l_ratio), cell(r.R_t), cell(r.F),
                                   cell(f2), cell(r.I_drift), cell(r.G_drift),
                                   cell(r.H1_initial), cell(r.H2_final), r.message});
  }
}

}  // namespace sta::cli
