#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdv/cosim.hpp"
#include "sdv/metrics.hpp"
#include "sdv/scenario.hpp"
#include "sdv/trace.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitProtocol = 3;

struct RunFlags {
  std::string scenario_path;
  std::optional<long> seed;
  std::string mode = "lockstep";
  std::optional<double> until;
  std::string trace_out;
  bool debug_candidates = false;
  bool fail_on_collision = false;
  int planner_threads = 1;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("scenario", flags.scenario_path, "scenario YAML file")->required();
  cmd->add_option("--seed", flags.seed, "override the scenario seed");
  cmd->add_option("--mode", flags.mode, "lockstep or realtime")
      ->check(CLI::IsMember({"lockstep", "realtime"}));
  cmd->add_option("--until", flags.until, "stop after this much simulated time [s]");
  cmd->add_option("--trace-out", flags.trace_out,
                  "write <path>, <path>.events and <path>.timing");
  cmd->add_flag("--debug-candidates", flags.debug_candidates,
                "dump every ranked candidate next to the trace");
  cmd->add_flag("--fail-on-collision", flags.fail_on_collision,
                "end the run at the first collision");
  cmd->add_option("--planner-threads", flags.planner_threads, "parallel planning jobs")
      ->check(CLI::PositiveNumber);
}

sdv::RunOptions options_of(const RunFlags& flags) {
  sdv::RunOptions opts;
  if (flags.seed) opts.seed = *flags.seed;
  opts.realtime = flags.mode == "realtime";
  opts.until = flags.until;
  opts.planner_threads = flags.planner_threads;
  opts.debug_candidates = flags.debug_candidates;
  opts.fail_on_collision = flags.fail_on_collision;
  return opts;
}

void write_outputs(const RunFlags& flags, sdv::ScenarioRun& run,
                   const sdv::SimulationResult& result) {
  if (flags.trace_out.empty()) return;
  const sdv::SimClock& clock = run.sim().clock();
  std::ostringstream trace;
  sdv::write_trace(trace, result.trace);
  sdv::write_file(flags.trace_out, trace.str());
  std::ostringstream events;
  sdv::write_events(events, result.events);
  sdv::write_file(flags.trace_out + ".events", events.str());
  std::ostringstream timing;
  sdv::write_timing(timing, result.timing, clock.tick_dt, clock.plan_dt);
  sdv::write_file(flags.trace_out + ".timing", timing.str());
  if (flags.debug_candidates)
    sdv::write_file(flags.trace_out + ".candidates", run.sim().debug_dump());
}

void print_summary(const sdv::SimulationResult& result) {
  std::cout << "end reason=" << result.end_reason << " ticks=" << result.ticks
            << " plan_cycles=" << result.plan_cycles
            << " collisions=" << (result.collision ? "yes" : "no") << "\n";
  for (const sdv::SimEvent& e : result.events)
    if (e.kind == "collision" || e.kind == "trigger")
      std::cout << sdv::format_fixed(e.sim_time) << " " << e.kind << " " << e.detail << "\n";
}

int cmd_run(const RunFlags& flags) {
  sdv::Scenario scenario;
  try {
    scenario = sdv::load_scenario(flags.scenario_path);
  } catch (const sdv::Error& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitValidation;
  }
  try {
    sdv::ScenarioRun run(scenario, options_of(flags));
    const sdv::SimulationResult result = run.run();
    write_outputs(flags, run, result);
    print_summary(result);
  } catch (const sdv::Error& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_validate(const std::string& path) {
  try {
    const sdv::Scenario scenario = sdv::load_scenario(path);
    std::cout << "ok name=" << scenario.name << " agents=" << scenario.agents.size()
              << " triggers=" << scenario.triggers.size() << "\n";
  } catch (const sdv::Error& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

int cmd_metrics(const std::vector<std::string>& paths) {
  try {
    std::vector<std::vector<sdv::TraceRow>> files;
    for (const std::string& p : paths) files.push_back(sdv::read_trace(p));

    std::vector<sdv::RunSummary> runs;
    for (std::size_t i = 0; i < files.size(); ++i) {
      sdv::RunSummary summary;
      summary.scenario_type = paths[i];
      summary.vehicles = static_cast<int>(sdv::trace_actor_ids(files[i]).size());
      runs.push_back(summary);
    }
    if (files.size() == 2) {
      for (const int id : sdv::trace_actor_ids(files[0])) {
        const sdv::Trace a = sdv::trace_of(files[0], id);
        const sdv::Trace b = sdv::trace_of(files[1], id);
        if (b.samples.empty()) continue;
        const double value = sdv::sted(a, b);
        std::cout << "sted vehicle=" << id << " value=" << sdv::format_fixed(value) << "\n";
        runs[1].sted = value;
      }
    }
    const sdv::MetricsReport rep = sdv::report(runs);
    std::cout << rep.text;
    for (const auto& [name, values] : rep.columns) {
      std::cout << "column " << name;
      for (const double v : values) std::cout << " " << sdv::format_fixed(v);
      std::cout << "\n";
    }
  } catch (const sdv::Error& e) {
    std::cerr << "metrics error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_serve(const RunFlags& flags, const std::string& endpoint) {
  std::string host = "127.0.0.1";
  int port = 0;
  if (!endpoint.empty()) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos) {
      std::cerr << "endpoint must be host:port\n";
      return kExitValidation;
    }
    host = endpoint.substr(0, colon);
    try {
      port = std::stoi(endpoint.substr(colon + 1));
    } catch (const std::exception&) {
      std::cerr << "bad endpoint port '" << endpoint.substr(colon + 1) << "'\n";
      return kExitValidation;
    }
    if (host != "127.0.0.1" && host != "localhost") {
      std::cerr << "co-simulation binds loopback only\n";
      return kExitValidation;
    }
  }

  sdv::Scenario scenario;
  try {
    scenario = sdv::load_scenario(flags.scenario_path);
  } catch (const sdv::Error& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitValidation;
  }
  try {
    sdv::ScenarioRun run(scenario, options_of(flags));
    sdv::CoSimServer server(port);
    std::cout << "listening on 127.0.0.1:" << server.port() << std::endl;
    const sdv::SimulationResult result = server.serve(run);
    write_outputs(flags, run, result);
    print_summary(result);
  } catch (const sdv::ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const sdv::Error& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scenario-based traffic micro-simulation"};
  app.require_subcommand(1);

  RunFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "execute a scenario");
  add_run_flags(run_cmd, run_flags);

  std::string validate_path;
  CLI::App* validate_cmd = app.add_subcommand("validate", "check a scenario file");
  validate_cmd->add_option("scenario", validate_path, "scenario YAML file")->required();

  std::vector<std::string> metric_paths;
  CLI::App* metrics_cmd = app.add_subcommand("metrics", "summarize trace files");
  metrics_cmd->add_option("traces", metric_paths, "trace files")->required()->expected(-1);

  RunFlags serve_flags;
  std::string endpoint;
  CLI::App* serve_cmd = app.add_subcommand("serve", "drive a scenario over a co-sim socket");
  add_run_flags(serve_cmd, serve_flags);
  serve_cmd->add_option("--endpoint", endpoint, "host:port to listen on (default loopback)");

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) return cmd_run(run_flags);
  if (validate_cmd->parsed()) return cmd_validate(validate_path);
  if (metrics_cmd->parsed()) return cmd_metrics(metric_paths);
  if (serve_cmd->parsed()) return cmd_serve(serve_flags, endpoint);
  return kExitOk;
}
