#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdv/engine.hpp"

namespace sdv {

struct ScriptSpec {
  std::vector<Vec2> polyline;
  SpeedProfile profile;
  std::map<std::string, SpeedProfile> alternates;  // selectable via triggers
};

struct AgentSpec {
  std::string name;
  std::string kind;  // sdv | pdt | ego | pedestrian | static
  bool active = true;
  bool external = false;  // ego only: state injected over the co-sim link
  double length = 4.8;
  double width = 1.9;
  bool has_start = false;
  double start_x = 0.0, start_y = 0.0, start_speed = 0.0, start_heading = 0.0;
  bool heading_given = false;  // otherwise aligned with the lane at the start
  std::vector<Vec2> route;
  std::string tree;
  std::map<std::string, std::string> overrides;  // param -> DSL value text
  bool has_script = false;
  ScriptSpec script;

  bool drives_tree() const { return !tree.empty(); }
};

struct TriggerSpec {
  enum class When { Time, Region, Gap };
  enum class Action { Activate, SwitchProfile, End };

  When when = When::Time;
  double time = 0.0;
  std::string region_agent;
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  std::string gap_from, gap_to;
  double gap_below = 0.0;

  Action action = Action::Activate;
  std::string target_agent;   // activate / switch_profile
  std::string profile_name;   // switch_profile
  std::string end_reason;     // end
};

struct Scenario {
  std::string name;
  std::string file;      // where it was loaded from
  std::string map_file;  // resolved relative to `file`
  std::uint64_t seed = 0;
  EndConditions end;
  std::vector<std::string> tree_files;  // resolved
  std::map<std::string, std::vector<std::pair<double, std::string>>> signals;
  std::vector<AgentSpec> agents;
  std::vector<TriggerSpec> triggers;
};

// Parses and fully validates a scenario: schema, unique agent names, exactly
// one ego, resolvable map/tree references, and trigger cross-references.
// Throws ScenarioError with file:line locations.
Scenario load_scenario(const std::string& file);
Scenario parse_scenario(const std::string& yaml_text, const std::string& filename);

// Canonical YAML form; parse(serialize(s)) is equivalent to s.
std::string serialize_scenario(const Scenario& s);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<bool> realtime;
  std::optional<double> until;
  int planner_threads = 1;
  bool debug_candidates = false;
  bool fail_on_collision = false;
};

// A scenario instantiated into a Simulation, with trigger state and the
// per-agent tree copies (scenario overrides applied) kept alive.
class ScenarioRun {
 public:
  ScenarioRun(const Scenario& scenario, const RunOptions& opts);

  Simulation& sim() { return *sim_; }
  const Scenario& scenario() const { return scenario_; }
  int agent_id(const std::string& name) const;  // engine vehicle id
  EndConditions effective_end() const;          // scenario end merged with run options
  SimulationResult run();

 private:
  void eval_triggers(Simulation& sim);

  Scenario scenario_;
  RunOptions opts_;
  Map map_;
  TreeLibrary library_;
  std::deque<BTNode> agent_trees_;  // stable addresses for the Simulation
  std::map<std::string, int> ids_;
  std::map<std::string, ScriptSpec> scripts_;
  std::vector<bool> fired_;
  std::unique_ptr<Simulation> sim_;
};

SimulationResult run_scenario(const Scenario& scenario, const RunOptions& opts = {});

}  // namespace sdv
