#include <algorithm>
#include <cmath>

#include "sdv/behavior.hpp"

namespace sdv {

double param_number(const ParamMap& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second.as_number();
}

Range param_range(const ParamMap& params, const std::string& key, Range fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second.as_range();
}

std::optional<double> param_opt_number(const ParamMap& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) return std::nullopt;
  return it->second.as_number();
}

std::optional<std::string> param_symbol(const ParamMap& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) return std::nullopt;
  return it->second.as_symbol();
}

const std::vector<double>* param_tuple(const ParamMap& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end() || it->second.kind != ParamValue::Kind::Tuple) return nullptr;
  return &it->second.tuple;
}

namespace {

// Slack on maneuver end predicates; the planner hits targets to solver
// precision, but execution quantizes to plan boundaries.
constexpr double kSpeedTol = 0.25;
constexpr double kLateralTol = 0.3;
constexpr double kGapTol = 0.5;
constexpr double kTimeGapTol = 0.1;
constexpr double kStandstill = 0.05;

struct TickContext {
  const TrafficSnapshot& world;
  Blackboard* bb;
  std::vector<Decision> emissions;
};

bool evaluate_condition(const BTNode& node, TickContext& ctx) {
  const TrafficSnapshot& w = ctx.world;
  const ParamMap& p = node.params;
  if (node.name == "reached_goal") {
    return w.remaining_route_length <= param_number(p, "margin", 2.0);
  }
  if (node.name == "lead_vehicle_exists") {
    return w.find_lead(param_number(p, "max_distance", 60.0)) != nullptr;
  }
  if (node.name == "gap_to") {
    const auto vehicle = param_symbol(p, "vehicle");
    if (!vehicle) return false;
    const ActorView* a = w.find_actor(*vehicle);
    if (!a) return false;
    const auto lane = param_opt_number(p, "target_lane_id");
    if (lane && a->relative_lane != static_cast<int>(*lane)) return false;
    const Range r = param_range(p, "range", Range(0.0, 0.0));
    const double gap = w.rear_gap(*a);
    return gap >= r.lo && gap <= r.hi;
  }
  if (node.name == "sim_time_elapsed") {
    return w.timestamp >= param_number(p, "t", 0.0);
  }
  if (node.name == "timer") {
    auto [it, inserted] = ctx.bb->timer_start.try_emplace(node.node_id, w.timestamp);
    return w.timestamp - it->second >= param_number(p, "t", 0.0);
  }
  if (node.name == "lane_occupied") {
    const int lane = static_cast<int>(param_number(p, "lane_id", 0.0));
    const double ahead = param_number(p, "ahead", 50.0);
    const double behind = param_number(p, "behind", 10.0);
    for (const ActorView& a : w.actors) {
      if (a.relative_lane != lane) continue;
      const double ds = a.state.s - w.self.s;
      if (ds >= -behind && ds <= ahead) return true;
    }
    return false;
  }
  if (node.name == "stop_line_ahead") {
    if (!w.stop_line_s) return false;
    const double dist = *w.stop_line_s - w.self.s;
    return dist >= 0.0 && dist <= param_number(p, "within", 30.0);
  }
  throw LinkError("unknown condition '" + node.name + "' reached the ticker");
}

// Whether the maneuver's target state currently holds. missing_vehicle is
// set when a referenced or required traffic vehicle is absent, which fails
// the leaf instead of running it forever.
bool maneuver_satisfied(const BTNode& node, const TrafficSnapshot& w, bool* missing_vehicle) {
  const ParamMap& p = node.params;
  if (node.name == "velocity_keeping") {
    const Range r = param_range(p, "target_speed", Range::point(w.speed_limit));
    return w.self.s_dot >= r.lo - kSpeedTol && w.self.s_dot <= r.hi + kSpeedTol;
  }
  if (node.name == "vehicle_following") {
    const auto vehicle = param_symbol(p, "vehicle");
    const ActorView* lead = vehicle ? w.find_actor(*vehicle) : w.find_lead();
    if (!lead) {
      *missing_vehicle = true;
      return false;
    }
    const double gap = w.front_gap(*lead);
    if (lead->state.s_dot < 0.5) return gap <= 5.0 && std::abs(w.self.s_dot) <= 1.0;
    const Range r = param_range(p, "time_gap", Range(1.8, 2.2));
    const double tg = gap / std::max(w.self.s_dot, 0.1);
    return tg >= r.lo - kTimeGapTol && tg <= r.hi + kTimeGapTol;
  }
  if (node.name == "lane_swerve") {
    const double target_d = param_number(p, "target_lane_id", 0.0) * w.lane_width +
                            param_number(p, "lateral_offset", 0.0);
    return std::abs(w.self.d - target_d) <= kLateralTol &&
           std::abs(w.self.d_dot) <= kLateralTol;
  }
  if (node.name == "merge_in_front") {
    const auto vehicle = param_symbol(p, "vehicle");
    const ActorView* a = vehicle ? w.find_actor(*vehicle) : nullptr;
    if (!a) {
      *missing_vehicle = true;
      return false;
    }
    const std::vector<double>* ds = param_tuple(p, "delta_s");
    if (!ds || ds->size() < 2) return false;
    const double lane = param_number(p, "target_lane_id", a->relative_lane);
    const double target_d = lane * w.lane_width;
    const double gap = w.rear_gap(*a);
    const double rel_v = w.self.s_dot - a->state.s_dot;
    return std::abs(gap - (*ds)[0]) <= kGapTol && std::abs(rel_v - (*ds)[1]) <= kGapTol &&
           std::abs(w.self.d - target_d) <= 2.0 * kLateralTol;
  }
  if (node.name == "stop") {
    double target;
    if (auto sp = param_opt_number(p, "stop_point")) {
      target = *sp;
    } else if (w.stop_line_s) {
      target = *w.stop_line_s - param_number(p, "margin", 2.5);
    } else {
      target = w.self.s + w.remaining_route_length;
    }
    return std::abs(w.self.s_dot) <= kStandstill && w.self.s >= target - 2.0;
  }
  if (node.name == "reverse") {
    const Range r = param_range(p, "target_speed", Range::point(2.0));
    return std::abs(w.self.s_dot + r.mid()) <= kSpeedTol;
  }
  throw LinkError("unknown maneuver '" + node.name + "' reached the ticker");
}

TickStatus tick_node(const BTNode& node, TickContext& ctx) {
  ctx.bb->visited.insert(node.node_id);
  switch (node.kind) {
    case BTNode::Kind::Fallback: {
      for (const BTNode& c : node.children) {
        const TickStatus st = tick_node(c, ctx);
        if (st != TickStatus::Failure) return st;
      }
      return TickStatus::Failure;
    }
    case BTNode::Kind::Sequence: {
      size_t start = 0;
      auto mem = ctx.bb->sequence_resume.find(node.node_id);
      if (mem != ctx.bb->sequence_resume.end()) {
        start = std::min(static_cast<size_t>(mem->second), node.children.size() - 1);
      }
      for (size_t i = start; i < node.children.size(); ++i) {
        const TickStatus st = tick_node(node.children[i], ctx);
        if (st == TickStatus::Running) {
          ctx.bb->sequence_resume[node.node_id] = static_cast<int>(i);
          return TickStatus::Running;
        }
        if (st == TickStatus::Failure) {
          ctx.bb->sequence_resume.erase(node.node_id);
          return TickStatus::Failure;
        }
      }
      ctx.bb->sequence_resume.erase(node.node_id);
      return TickStatus::Success;
    }
    case BTNode::Kind::Parallel: {
      int succeeded = 0;
      bool any_running = false;
      for (const BTNode& c : node.children) {
        const TickStatus st = tick_node(c, ctx);
        if (st == TickStatus::Success) ++succeeded;
        if (st == TickStatus::Running) any_running = true;
      }
      const int threshold = node.parallel_threshold < 0
                                ? static_cast<int>(node.children.size())
                                : node.parallel_threshold;
      if (succeeded >= threshold) return TickStatus::Success;
      if (any_running) return TickStatus::Running;
      return TickStatus::Failure;
    }
    case BTNode::Kind::Condition:
      return evaluate_condition(node, ctx) ? TickStatus::Success : TickStatus::Failure;
    case BTNode::Kind::Maneuver: {
      bool missing = false;
      const bool satisfied = maneuver_satisfied(node, ctx.world, &missing);
      int& hold = ctx.bb->maneuver_hold[node.node_id];
      if (missing) {
        hold = 0;
        return TickStatus::Failure;
      }
      TickStatus st = TickStatus::Running;
      if (satisfied) {
        hold += 1;
        if (hold >= 2) st = TickStatus::Success;
      } else {
        hold = 0;
      }
      ctx.emissions.push_back({node.name, node.params, node.node_id, st});
      return st;
    }
    case BTNode::Kind::SubtreeRef: {
      if (node.children.size() != 1) {
        throw LinkError("subtree '" + node.name + "' was not linked before ticking");
      }
      return tick_node(node.children.front(), ctx);
    }
  }
  return TickStatus::Failure;
}

}  // namespace

TickResult tick(const BTNode& root, const TrafficSnapshot& world, Blackboard* memory) {
  if (root.node_id < 0) throw LinkError("behavior tree is not linked");
  TickContext ctx{world, memory, {}};
  TickResult result;
  result.status = tick_node(root, ctx);
  const Decision* chosen = nullptr;
  for (const Decision& d : ctx.emissions) {
    if (d.status == TickStatus::Running) chosen = &d;
  }
  if (!chosen && !ctx.emissions.empty()) chosen = &ctx.emissions.back();
  if (chosen) {
    result.decision = *chosen;
    if (memory->active_maneuver_node != chosen->node_id) {
      memory->timer_start.clear();
      memory->active_maneuver_node = chosen->node_id;
    }
  }
  return result;
}

}  // namespace sdv
