#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sdv/behavior.hpp"
#include "sdv/frenet.hpp"
#include "sdv/map.hpp"
#include "sdv/planner.hpp"
#include "sdv/snapshot.hpp"
#include "sdv/trace.hpp"
#include "sdv/types.hpp"

namespace sdv {

struct SimClock {
  double sim_time = 0.0;
  double tick_dt = 1.0 / 30.0;
  double plan_dt = 1.0 / 3.0;
  bool realtime = false;

  // Throws DomainError unless plan_dt is an integer multiple of tick_dt.
  int ticks_per_plan() const;
};

// Piecewise-linear speed over time. Breakpoints are (t, v) with t ascending;
// speed holds constant before the first and after the last breakpoint.
struct SpeedProfile {
  std::vector<std::pair<double, double>> points;

  static SpeedProfile constant(double v) { return SpeedProfile{{{0.0, v}}}; }
  double speed_at(double t) const;
  double accel_at(double t) const;             // left-continuous slope
  double integrate(double t0, double t1) const;  // exact distance over [t0, t1]
};

// Scripted vehicle motion: a polyline followed at a speed profile. Distance
// accumulates from the activation time; profile switches preserve distance.
struct ScriptedVehicle {
  std::vector<Vec2> polyline;
  SpeedProfile profile;
  double profile_zero = 0.0;  // sim time the current profile started
  double traveled = 0.0;      // distance at last_update
  double last_update = 0.0;

  void activate(double t);
  void advance(double t);                   // mutates traveled / last_update
  double distance_at(double t) const;       // pure lookahead
  CartesianState state_at(double t) const;  // pure lookahead
  void switch_profile(const SpeedProfile& next, double t);
  double total_length() const;
};

// Constant-deceleration stop used when planning yields no feasible
// trajectory. Lateral position freezes at engagement.
struct StopProfile {
  double t0 = 0.0;
  double s0 = 0.0;
  double v0 = 0.0;  // signed
  double d0 = 0.0;
  double decel = 2.5;

  FrenetState state_at(double t) const;
};

// A planned motion bound to the reference frame it was computed in. Past the
// trajectory end the terminal velocity is held until the next plan lands.
struct ActiveMotion {
  std::shared_ptr<const ReferencePath> frame;
  std::optional<FrenetTrajectory> traj;
  std::optional<StopProfile> stop;

  bool valid() const { return frame && (traj || stop); }
  double start_time() const;
  double end_time() const;  // stop profiles never expire
  FrenetState state_at(double t) const;
  CartesianState cartesian_at(double t) const;  // extends past the frame ends
};

enum class VehicleKind { SDV, PDT, EgoStub };

struct VehicleRuntime {
  int id = 0;
  std::string name;
  VehicleKind kind = VehicleKind::SDV;
  ActorType actor_type = ActorType::SDV;
  double length = 4.8;
  double width = 1.9;
  bool active = true;
  double activation_time = 0.0;
  bool frozen = false;  // evaluation failed; vehicle holds position
  bool external = false;  // state injected via co-simulation
  CartesianState state;
  std::vector<std::pair<double, CartesianState>> trace;
  double last_s = 0.0, last_d = 0.0;  // frame coordinates of the last tick

  // Planning vehicles.
  const BTNode* tree = nullptr;  // owned by the caller's TreeLibrary
  Blackboard bb;
  RoutePlan route;
  ActiveMotion motion;
  std::optional<ActiveMotion> pending;  // installed at its start time
  int last_decision_node = -1;
  std::string last_maneuver;
  std::set<int> executed_nodes;
  std::uint64_t rng_seed = 0;

  // Scripted vehicles.
  ScriptedVehicle script;

  bool plans() const { return tree != nullptr; }
};

struct EndConditions {
  double timeout = 120.0;
  bool on_collision = false;
  // Ends when the named vehicle is within margin of its route goal.
  std::optional<std::string> goal_vehicle;
  double goal_margin = 2.0;
};

struct SimulationResult {
  std::vector<TraceRow> trace;
  std::vector<SimEvent> events;
  TimingLog timing;
  int ticks = 0;
  int plan_cycles = 0;
  bool collision = false;
  std::string end_reason;
};

// The simulation loop. Vehicles update at tick_dt from their active
// trajectories; planning vehicles replan every plan_dt against an immutable
// world snapshot predicted one plan period ahead. With planner_threads > 1
// the per-vehicle planning jobs run concurrently; results are installed in
// vehicle-id order, so traces do not depend on the thread count.
class Simulation {
 public:
  Simulation(Map map, SimClock clock, std::uint64_t seed = 0);

  // Tree storage is not owned; keep the TreeLibrary alive for the run.
  int add_sdv(const std::string& name, const BTNode* tree, const CartesianState& start,
              const std::vector<Vec2>& route_points, ActorType type = ActorType::SDV);
  int add_scripted(const std::string& name, ActorType type, const std::vector<Vec2>& polyline,
                   const SpeedProfile& profile, bool active_now = true, double length = 4.8,
                   double width = 1.9);
  int add_external(const std::string& name, const CartesianState& start);

  void activate(int id);
  void switch_profile(int id, const SpeedProfile& profile);
  void set_external_state(int id, const CartesianState& state);
  void add_signal(const std::string& name, std::vector<std::pair<double, std::string>> schedule);
  void request_end(const std::string& reason);
  void log_event(const std::string& kind, const std::string& detail);

  double sim_time() const { return clock_.sim_time; }
  const SimClock& clock() const { return clock_; }
  const Map& map() const { return map_; }
  int planner_threads = 1;
  bool debug_candidates = false;

  const std::vector<VehicleRuntime>& vehicles() const { return vehicles_; }
  VehicleRuntime* find_vehicle(const std::string& name);
  const VehicleRuntime* find_vehicle(const std::string& name) const;
  std::string signal_phase(const std::string& name) const;

  // World estimate for one planning vehicle, predicted at t_predict.
  TrafficSnapshot build_snapshot(const VehicleRuntime& v, double t_predict,
                                 const ReferencePath& frame) const;
  CartesianState predict_cartesian(const VehicleRuntime& v, double t) const;

  // Called before planning on every tick; used for scenario triggers.
  std::function<void(Simulation&)> pre_tick_hook;

  void plan_cycle();
  void tick_all();
  // One tick: hook, plan boundary if due, then tick_all.
  void step();
  SimulationResult run(const EndConditions& end);

  // Pieces of run() exposed for externally stepped sessions (co-simulation).
  void record_initial_state();
  std::optional<std::string> check_end(const EndConditions& end) const;
  void finish(const std::string& reason);

  const SimulationResult& result() const { return result_; }
  const std::string& debug_dump() const { return debug_dump_; }

 private:
  struct PlanJobResult;
  PlanJobResult plan_vehicle(const VehicleRuntime& v) const;
  void detect_collisions();
  void append_row(VehicleRuntime& v);
  double goal_distance(const VehicleRuntime& v) const;

  Map map_;
  SimClock clock_;
  std::uint64_t seed_ = 0;
  long tick_index_ = 0;
  std::vector<VehicleRuntime> vehicles_;  // sorted by id
  std::map<std::string, std::vector<std::pair<double, std::string>>> signals_;
  std::set<std::pair<int, int>> contacts_;  // colliding pairs, for edge-triggered events
  SimulationResult result_;
  std::string debug_dump_;
  std::optional<std::string> end_requested_;
};

}  // namespace sdv
