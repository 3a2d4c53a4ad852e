#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdv/reference_path.hpp"
#include "sdv/types.hpp"

namespace sdv {

enum class ActorType { SDV, Ego, PDT, Pedestrian, Static };

// Another traffic participant as seen by the planning vehicle: current state
// and predicted motion, both expressed in the planning vehicle's Frenet frame.
struct ActorView {
  int id = -1;
  std::string name;
  ActorType type = ActorType::SDV;
  FrenetState state;
  double length = 4.8;
  double width = 1.9;
  // Lane the actor occupies relative to the planning vehicle: 0 = same lane,
  // positive = lanes to the left, negative = to the right.
  int relative_lane = 0;
  // Predicted states sampled every prediction_dt starting at the snapshot
  // timestamp (index 0 = current state).
  std::vector<FrenetState> prediction;
  double prediction_dt = 1.0 / 3.0;

  // State dt seconds ahead: linear interpolation between samples, constant
  // velocity beyond the last one.
  FrenetState predicted(double dt) const;
};

// Immutable world estimate one vehicle plans against. All longitudinal and
// lateral quantities are in that vehicle's own Frenet frame.
struct TrafficSnapshot {
  double timestamp = 0.0;
  FrenetState self;
  double self_length = 4.8;
  double self_width = 1.9;
  const ReferencePath* path = nullptr;
  double lane_width = 3.5;
  double speed_limit = 13.9;
  double remaining_route_length = 1e9;
  std::optional<double> stop_line_s;          // nearest stop line ahead, if any
  std::optional<std::string> stop_line_signal;
  std::map<std::string, std::string> signal_phase;
  std::vector<ActorView> actors;
  double prediction_dt = 1.0 / 3.0;
  double horizon_max = 5.0;

  const ActorView* find_actor(const std::string& name) const;
  // Nearest vehicle ahead in the same lane (pedestrians and static obstacles
  // excluded). lane_tol < 0 uses half the lane width.
  const ActorView* find_lead(double max_distance = 60.0, double lane_tol = -1.0) const;

  // Free bumper-to-bumper gap to an actor ahead of self (negative = overlap).
  double front_gap(const ActorView& a) const;
  // Free gap of self's rear bumper ahead of the actor (positive when self is
  // fully ahead of it).
  double rear_gap(const ActorView& a) const;
};

}  // namespace sdv
