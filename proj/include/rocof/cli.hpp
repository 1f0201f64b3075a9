#pragma once

// Command-line front end: validate | rocof | screen | dispatch | simulate.
//
// Exit codes: 0 success / optimal, 1 usage or input error,
// 2 infeasible dispatch, 3 largest RoCoF found at a load bus.

#include <rocof/error.hpp>
#include <rocof/grid_model.hpp>
#include <rocof/inertia_dispatch.hpp>
#include <rocof/report_io.hpp>
#include <rocof/rocof_engine.hpp>
#include <rocof/susceptance.hpp>
#include <rocof/swing_oracle.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

namespace rocof::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInfeasible = 2, kAssumptionBreach = 3 };

struct RunConfig {
  std::string command;  // validate | rocof | screen | dispatch | simulate
  std::string grid_path;
  std::vector<std::string> buses;
  std::optional<double> mw;
  bool all_load_buses = false;
  std::optional<double> rocof_max;
  std::string format = "json";
  std::string output;         // empty: stdout
  std::string rocof_output;   // simulate companion file
  std::string dump_blocks;    // optional CSV of the susceptance blocks
  double dt = 1e-4;
  double horizon = 0.05;
  unsigned threads = 0;       // 0: from ROCOF_DISPATCH_THREADS / hardware
};

/// Writes via a temporary file in the same directory, then renames.
inline void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw ArgumentError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ArgumentError("cannot move output into place at '" + path + "': " + ec.message());
  }
}

inline unsigned thread_budget(unsigned requested) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ROCOF_DISPATCH_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Registers every subcommand and flag on `app`, binding into `cfg`.
inline void configure(CLI::App& app, RunConfig& cfg) {
  app.require_subcommand(1);
  app.fallthrough(false);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--grid", cfg.grid_path, "Grid file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--output,-o", cfg.output, "Output file (default: stdout)");
  };
  auto callback_for = [&](const char* name) { return [&cfg, name] { cfg.command = name; }; };

  auto* validate = app.add_subcommand("validate", "Check a grid file for structural problems");
  validate->add_option("--grid", cfg.grid_path, "Grid file (JSON)")->required()->check(CLI::ExistingFile);
  validate->add_option("--output,-o", cfg.output, "Output file (default: stdout)");
  validate->callback(callback_for("validate"));

  auto* rocof = app.add_subcommand("rocof", "Initial nodal RoCoF for one load step");
  add_common(rocof);
  rocof->add_option("--bus", cfg.buses, "Disturbed load bus")->required()->expected(1);
  rocof->add_option("--mw", cfg.mw, "Load increase, MW")->required();
  rocof->add_option("--dump-blocks", cfg.dump_blocks, "Also write the susceptance blocks as CSV");
  rocof->callback(callback_for("rocof"));

  auto* screen = app.add_subcommand("screen", "Initial RoCoF for a set of load steps");
  add_common(screen);
  auto* screen_bus = screen->add_option("--bus", cfg.buses, "Disturbed load bus (repeatable)");
  auto* screen_all = screen->add_flag("--all-load-buses", cfg.all_load_buses, "Step at every load bus (default)");
  screen_bus->excludes(screen_all);
  screen->add_option("--mw", cfg.mw, "Load increase, MW")->required();
  screen->add_option("--threads", cfg.threads, "Worker threads");
  screen->callback(callback_for("screen"));

  auto* dispatch = app.add_subcommand("dispatch", "Least-cost virtual inertia and nodal prices");
  add_common(dispatch);
  auto* dispatch_bus = dispatch->add_option("--bus", cfg.buses, "Contingency load bus (repeatable)");
  auto* dispatch_all = dispatch->add_flag("--all-load-buses", cfg.all_load_buses, "One contingency per load bus");
  dispatch_bus->excludes(dispatch_all);
  dispatch->add_option("--mw", cfg.mw, "Load increase, MW")->required();
  dispatch->add_option("--rocof-max", cfg.rocof_max, "RoCoF limit, Hz/s")->required();
  dispatch->callback(callback_for("dispatch"));

  auto* simulate = app.add_subcommand("simulate", "Swing-equation trace for one load step");
  simulate->add_option("--grid", cfg.grid_path, "Grid file (JSON)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--bus", cfg.buses, "Disturbed load bus")->required()->expected(1);
  simulate->add_option("--mw", cfg.mw, "Load increase, MW")->required();
  simulate->add_option("--dt", cfg.dt, "Time step, s");
  simulate->add_option("--horizon", cfg.horizon, "Simulated time, s");
  simulate->add_option("--output,-o", cfg.output, "Frequency trace CSV")->required();
  simulate->add_option("--rocof-output", cfg.rocof_output, "RoCoF trace CSV (default: <output stem>_rocof.csv)");
  simulate->callback(callback_for("simulate"));
}

namespace detail {

inline void emit(const RunConfig& cfg, const std::string& content, std::ostream& out) {
  if (cfg.output.empty()) out << content;
  else write_atomically(cfg.output, content);
}

inline std::string dump(const io::Json& j) { return j.dump(2) + "\n"; }

inline std::vector<Disturbance> contingencies_from(const RunConfig& cfg, const GridModel& grid) {
  const double mw = cfg.mw.value_or(0.0);
  if (cfg.buses.empty()) return expand_contingencies(grid, AllLoadBuses{}, mw);
  std::vector<Disturbance> out;
  for (const auto& b : cfg.buses) out.push_back({b, mw});
  return out;
}

inline int run_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto grid = load_grid_file(cfg.grid_path);
  const auto report = validate_grid(grid);
  emit(cfg, dump(io::validation_json(report)), out);
  if (!report.ok) {
    err << report.summary();
    return kUsage;
  }
  return kOk;
}

inline int run_rocof(const RunConfig& cfg, const GridModel& grid, std::ostream& out) {
  const auto blocks = assemble_blocks(grid);
  certify_invertible(blocks);
  if (!cfg.dump_blocks.empty()) {
    std::ostringstream csv;
    write_blocks_csv(blocks, csv);
    write_atomically(cfg.dump_blocks, csv.str());
  }
  auto t = std::make_shared<const PropagationMatrix>(propagation_matrix(blocks));
  const auto report = nodal_rocof_report(grid, blocks, t, {cfg.buses.front(), *cfg.mw});
  std::ostringstream os;
  if (cfg.format == "csv") io::write_report_csv(report, os);
  else os << dump(io::report_json(report));
  emit(cfg, os.str(), out);
  return kOk;
}

inline int run_screen(const RunConfig& cfg, const GridModel& grid, std::ostream& out) {
  const auto set = contingencies_from(cfg, grid);
  const auto result = screen_contingencies(grid, set, *cfg.mw, thread_budget(cfg.threads));
  std::ostringstream os;
  if (cfg.format == "csv") io::write_screening_csv(result, os);
  else os << dump(io::screening_json(result));
  emit(cfg, os.str(), out);
  return kOk;
}

inline int run_dispatch(const RunConfig& cfg, const GridModel& grid, std::ostream& out, std::ostream& err) {
  const auto set = contingencies_from(cfg, grid);
  const auto solution = dispatch(grid, set, *cfg.rocof_max);
  std::ostringstream os;
  if (cfg.format == "csv") io::write_dispatch_csv(grid, solution, os);
  else os << dump(io::dispatch_json(grid, set, solution));
  emit(cfg, os.str(), out);
  if (solution.status == lp::Status::infeasible) {
    err << "error: dispatch infeasible; no virtual inertia purchase keeps these buses within "
        << io::format_number(*cfg.rocof_max) << " Hz/s:\n";
    for (const auto& [g, k] : solution.infeasible_pairs)
      err << "  generator " << grid.generators[g].bus << " under contingency " << k << " (load step at "
          << set[k].bus << ")\n";
    return kInfeasible;
  }
  return kOk;
}

inline int run_simulate(const RunConfig& cfg, const GridModel& grid, std::ostream& out) {
  const Disturbance d{cfg.buses.front(), *cfg.mw};
  const auto trace = simulate_swing(grid, d, cfg.horizon, cfg.dt);
  std::ostringstream freq, rocof;
  write_trace_csv(trace, freq);
  write_trace_rocof_csv(trace, rocof);
  std::string rocof_path = cfg.rocof_output;
  if (rocof_path.empty()) {
    std::filesystem::path p(cfg.output);
    rocof_path = (p.parent_path() / (p.stem().string() + "_rocof.csv")).string();
  }
  write_atomically(cfg.output, freq.str());
  write_atomically(rocof_path, rocof.str());

  const Vector estimate = initial_rocof_estimate(trace);
  std::optional<Vector> algebraic;
  if (d.p_dis_mw > 0.0) {
    const auto report = nodal_rocof_report(grid, d);
    Vector a(report.gen_rocof.size() + report.load_rocof.size());
    a << report.gen_rocof, report.load_rocof;
    algebraic = std::move(a);
  }
  out << dump(io::initial_rocof_json(trace, estimate, algebraic ? &*algebraic : nullptr));
  return kOk;
}

}  // namespace detail

/// Executes a parsed configuration. Diagnostics go to `err`; never throws.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.command == "validate") return detail::run_validate(cfg, out, err);
    const auto grid = load_grid_file(cfg.grid_path);
    const auto report = validate_grid(grid);
    if (!report.ok) {
      err << "error: invalid grid\n" << report.summary();
      return kUsage;
    }
    if (cfg.command == "rocof") return detail::run_rocof(cfg, grid, out);
    if (cfg.command == "screen") return detail::run_screen(cfg, grid, out);
    if (cfg.command == "dispatch") return detail::run_dispatch(cfg, grid, out, err);
    if (cfg.command == "simulate") return detail::run_simulate(cfg, grid, out);
    err << "error: unknown command '" << cfg.command << "'\n";
    return kUsage;
  } catch (const RocofAssumptionBreach& e) {
    err << "error: model assumption breach: " << e.what() << '\n';
    for (const auto& b : e.report().buses())
      err << "  " << b.id << " (" << to_string(b.kind) << "): " << io::format_number(b.rocof_hz_per_s) << " Hz/s\n";
    return kAssumptionBreach;
  } catch (const ModelAssumptionBreach& e) {
    err << "error: model assumption breach: " << e.what() << '\n';
    return kAssumptionBreach;
  } catch (const InternalConsistencyError& e) {
    err << "error: internal consistency failure: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

/// Parses argv and runs. CLI11 usage errors map to exit code 1.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Nodal RoCoF analysis and inertia dispatch", "rocof"};
  RunConfig cfg;
  configure(app, cfg);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto parsed = app.get_subcommands();
    out << (parsed.empty() ? app.help() : parsed.back()->help());
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return run(cfg, out, err);
}

}  // namespace rocof::cli
