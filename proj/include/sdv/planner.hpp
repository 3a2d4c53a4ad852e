#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdv/behavior.hpp"
#include "sdv/quintic.hpp"
#include "sdv/snapshot.hpp"
#include "sdv/types.hpp"

namespace sdv {

struct FeasibilityLimits {
  double max_jerk_lon = 8.0;   // m/s^3
  double max_jerk_lat = 6.0;
  double max_accel_lon = 4.0;  // m/s^2
  double max_accel_lat = 3.0;
};

struct CostWeights {
  double time = 1.0;
  double efficiency = 2.0;
  double lane_offset = 1.0;
  double jerk = 0.5;
  double accel = 0.5;
  double proximity = 3.0;
};

// Fully resolved maneuver request: target parameters (point or interval),
// horizon, sampling counts, cost weights, and feasibility limits.
struct ManeuverConfig {
  std::string maneuver;
  Range target_speed = Range::point(13.9);
  Range time_gap{1.8, 2.2};
  Range lateral_offset = Range::point(0.0);
  std::optional<Range> target_lane_id;  // relative lane, +left / -right
  std::optional<Range> stop_point;      // absolute s; defaults resolve at planning time
  double stop_margin = 2.5;             // distance kept before a stop line
  std::string vehicle;                  // named target actor, when required
  std::vector<double> delta_s;          // (gap m, relative speed m/s[, accel m/s^2])
  Range acceptance_gap = Range::point(0.0);
  Range horizon{2.0, 5.0};
  int samples_per_param = 3;
  CostWeights weights;
  FeasibilityLimits limits;
  std::vector<std::string> collision_ignore;       // actors exempt from collision checks
  std::map<std::string, double> proximity_factors;  // per-actor proximity multiplier
  std::optional<double> resume_delay;  // behavior-level hold after a stop; carried by calibration

  static ManeuverConfig from_params(const std::string& maneuver, const ParamMap& params);
  static ManeuverConfig from_decision(const Decision& decision);
};

// Terminal boundary condition for one candidate: state at t0 + T.
struct TargetState {
  FrenetState state;
  double T = 0.0;
};

// Allowed lateral band for the vehicle footprint during a maneuver.
struct LaneBounds {
  double d_min = -1.75;
  double d_max = 1.75;
};

struct Violation {
  std::string reason;
  double at_time = 0.0;  // seconds from trajectory start
  std::string actor;     // colliding actor, when applicable
};

struct FeasibilityContext {
  FeasibilityLimits limits;
  LaneBounds lane_bounds;
  bool reverse_maneuver = false;
  double path_s_min = -1e18;  // candidates must stay inside the fitted path
  double path_s_max = 1e18;
  std::vector<std::string> collision_ignore;
};

struct CostBreakdown {
  double time = 0.0;
  double efficiency = 0.0;
  double lane_offset = 0.0;
  double jerk = 0.0;
  double accel = 0.0;
  double proximity = 0.0;
};

struct RankedCandidate {
  FrenetTrajectory trajectory;
  int index = -1;
  bool feasible = false;
  std::optional<Violation> violation;
  double cost = 0.0;
  CostBreakdown breakdown;
};

struct RankingResult {
  std::vector<RankedCandidate> ranking;  // in candidate-index order
  int best_index = -1;                   // -1 = no feasible candidate

  const RankedCandidate* best() const {
    return best_index >= 0 ? &ranking[best_index] : nullptr;
  }
};

// Samples the maneuver's ranged parameters (uniform, endpoints included) and
// horizon values, and realizes one terminal state per combination. Missing
// named target vehicle raises PlanError; an empty result is not an error.
std::vector<TargetState> find_targets(const ManeuverConfig& config,
                                      const TrafficSnapshot& snapshot);

// One jerk-minimal trajectory per target, anchored at t0.
std::vector<FrenetTrajectory> generate_candidates(const FrenetState& start,
                                                  const std::vector<TargetState>& targets,
                                                  double t0);

// Samples the trajectory at 0.1 s and reports the first violated constraint:
// direction inversion, jerk/acceleration limits per axis, footprint leaving
// the lane band, leaving the fitted path, or a predicted collision (checked
// with three covering disks per vehicle).
std::optional<Violation> check_feasibility(const FrenetTrajectory& traj,
                                           const TrafficSnapshot& snapshot,
                                           const FeasibilityContext& ctx);

// Scores all candidates and picks the cheapest feasible one (ties go to the
// lowest index). Throws PlanError on an empty candidate list.
RankingResult rank_and_select(const std::vector<FrenetTrajectory>& candidates,
                              const TrafficSnapshot& snapshot, const ManeuverConfig& config);

struct PlanOutcome {
  std::optional<FrenetTrajectory> trajectory;
  RankingResult ranking;
  ManeuverConfig config;
};

// find_targets -> generate_candidates -> check_feasibility -> rank_and_select.
// No feasible candidate yields an empty trajectory (caller falls back).
PlanOutcome plan(const Decision& decision, const TrafficSnapshot& snapshot);

}  // namespace sdv
