#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sta/error.hpp"
#include "sta_cli/commands.hpp"
#include "sta_cli/io.hpp"

namespace sta::cli {
namespace {

struct Args {
  std::string config;
  std::string out;
  std::string engine;
};

void use_stderr_logger() {
  static bool done = [] {
    auto logger = spdlog::stderr_color_mt("sta");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)done;
}

Config prepare(const Args& a) {
  Config c = load_config(a.config);
  if (!a.out.empty()) c.out_dir = a.out;
  if (!a.engine.empty()) c.engine = engine_from_string(a.engine);
  return c;
}

int cmd_design(const Config& c, std::ostream& out) {
  Protocol p = design_protocol(c);
  write_protocol(c, p, c.out_dir);
  json summary = protocol_to_json(c, p);
  summary["out_dir"] = c.out_dir.string();
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_simulate(const Config& c, std::ostream& out) {
  const auto file = c.out_dir / "protocol.json";
  Protocol p;
  if (std::filesystem::exists(file)) {
    p = protocol_from_json(c, read_json(file));
  } else {
    spdlog::info("no protocol in {}; designing first", c.out_dir.string());
    p = design_protocol(c);
    write_protocol(c, p, c.out_dir);
  }
  SimulationResult r = simulate_protocol(c, p, c.engine);
  for (const auto& run : r.runs)
    write_timeseries(c.out_dir / ("timeseries_" + to_string(run.engine) + ".csv"), run.records);
  write_json(c.out_dir / "report.json", r.report);
  out << r.report.dump(2) << '\n';
  return kExitOk;
}

int cmd_sweep(const Config& c, std::ostream& out) {
  if (!c.sweep) throw ConfigError("config: sweep section missing");
  std::filesystem::create_directories(c.out_dir);
  auto rows = run_sweep(c, c.engine, sweep_threads());
  write_sweep(c.out_dir / "sweep.csv", c.sweep->parameter, rows);
  std::size_t ok = 0;
  for (const auto& r : rows) ok += r.status == "ok";
  out << json{{"parameter", c.sweep->parameter},
              {"points", rows.size()},
              {"ok", ok},
              {"flagged", rows.size() - ok},
              {"output", (c.out_dir / "sweep.csv").string()}}
             .dump(2)
      << '\n';
  return kExitOk;
}

int cmd_verify(const Config& c, std::ostream& out) {
  auto checks = verify_protocol(c, c.out_dir);
  bool pass = true;
  json list = json::array();
  for (const auto& k : checks) {
    pass = pass && k.pass;
    list.push_back({{"name", k.name}, {"pass", k.pass}, {"detail", k.detail}});
  }
  json doc = {{"pass", pass}, {"checks", list}};
  write_json(c.out_dir / "verify.json", doc);
  out << doc.dump(2) << '\n';
  return pass ? kExitOk : kExitRejected;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  use_stderr_logger();
  CLI::App app{"Shortcut-to-adiabaticity designer for two coupled oscillators", "sta"};
  app.require_subcommand(1, 1);
  Args a;
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", a.config, "protocol config (JSON)")->required();
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("--engine", a.engine, "moments, grid or both")
        ->check(CLI::IsMember({"moments", "grid", "both"}));
    return sub;
  };
  CLI::App* design = add("design", "design a protocol and write schedule files");
  CLI::App* simulate = add("simulate", "propagate the designed protocol");
  CLI::App* sweep = add("sweep", "design and simulate over a parameter list");
  CLI::App* verify = add("verify", "check a designed protocol's invariants");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }
  try {
    Config c = prepare(a);
    if (*design) return cmd_design(c, out);
    if (*simulate) return cmd_simulate(c, out);
    if (*sweep) return cmd_sweep(c, out);
    if (*verify) return cmd_verify(c, out);
  } catch (const ConfigError& e) {
    err << "sta: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DesignRejected& e) {
    err << "sta: design rejected: " << e.what() << '\n';
    return kExitRejected;
  } catch (const SimulationError& e) {
    err << "sta: simulation failed at t=" << format_double(e.time()) << ": " << e.what()
        << '\n';
    return kExitSimulation;
  } catch (const std::exception& e) {
    err << "sta: " << e.what() << '\n';
    return kExitSimulation;
  }
  return kExitConfig;
}

}  // namespace sta::cli
