#include "sdv/planner.hpp"

#include <algorithm>
#include <cmath>

#include "sdv/reference_path.hpp"

namespace sdv {
namespace {

constexpr double kSampleDt = 0.1;       // feasibility and cost sampling step
constexpr double kProximitySigma = 2.0;  // m, proximity falloff scale
constexpr double kDiskScale = 1.2;       // covering-disk radius = width/2 * scale
constexpr double kSpeedEps = 0.01;       // m/s slack for direction inversion

double sq(double x) { return x * x; }

// Uniform samples over a range, endpoints included. Point ranges and single
// sample counts collapse to the midpoint.
std::vector<double> sample_range(const Range& r, int n) {
  if (r.is_point() || n <= 1) return {r.mid()};
  std::vector<double> out;
  out.reserve(static_cast<size_t>(n));
  const double step = r.span() / (n - 1);
  for (int i = 0; i < n; ++i) out.push_back(r.lo + i * step);
  return out;
}

std::vector<double> horizon_samples(const ManeuverConfig& cfg) {
  // The horizon is sampled at three values regardless of samples_per_param so
  // the candidate count stays bounded when many parameters are ranged.
  return sample_range(cfg.horizon, 3);
}

const ActorView* resolve_target_vehicle(const ManeuverConfig& cfg,
                                        const TrafficSnapshot& snapshot, bool required) {
  if (!cfg.vehicle.empty()) {
    const ActorView* a = snapshot.find_actor(cfg.vehicle);
    if (!a && required) {
      throw PlanError(cfg.maneuver + ": target vehicle '" + cfg.vehicle +
                      "' is not present in the traffic snapshot");
    }
    return a;
  }
  return snapshot.find_lead();
}

double lane_center(double relative_lane, const TrafficSnapshot& snapshot) {
  return relative_lane * snapshot.lane_width;
}

// Reference lane center used by the lane-offset cost and the lateral band.
double reference_lane_center(const ManeuverConfig& cfg, const TrafficSnapshot& snapshot) {
  if (cfg.maneuver == "lane_swerve" && cfg.target_lane_id)
    return lane_center(std::round(cfg.target_lane_id->mid()), snapshot);
  if (cfg.maneuver == "merge_in_front") {
    if (cfg.target_lane_id) return lane_center(std::round(cfg.target_lane_id->mid()), snapshot);
    if (const ActorView* a = snapshot.find_actor(cfg.vehicle))
      return lane_center(a->relative_lane, snapshot);
  }
  return 0.0;
}

LaneBounds lane_bounds_for(const ManeuverConfig& cfg, const TrafficSnapshot& snapshot) {
  const double half = snapshot.lane_width / 2.0;
  const double target = reference_lane_center(cfg, snapshot);
  LaneBounds b;
  b.d_min = std::min(0.0, target) - half;
  b.d_max = std::max(0.0, target) + half;
  return b;
}

bool is_ignored(const std::string& name, const std::vector<std::string>& ignore) {
  return std::find(ignore.begin(), ignore.end(), name) != ignore.end();
}

// Footprint yaw relative to the path; lateral motion dominates at low speed.
double footprint_yaw(double s_dot, double d_dot) {
  return std::atan2(d_dot, std::max(std::fabs(s_dot), 0.5));
}

struct Disk {
  double s, d, r;
};

void covering_disks(double s, double d, double yaw, double length, double width,
                    Disk out[3]) {
  const double r = width / 2.0 * kDiskScale;
  const double step = length / 3.0;
  const double cs = std::cos(yaw), sn = std::sin(yaw);
  for (int i = -1; i <= 1; ++i) {
    out[i + 1] = Disk{s + i * step * cs, d + i * step * sn, r};
  }
}

std::vector<double> time_samples(double duration) {
  std::vector<double> ts;
  const int n = static_cast<int>(std::floor(duration / kSampleDt + 1e-9));
  ts.reserve(static_cast<size_t>(n) + 2);
  for (int i = 0; i <= n; ++i) ts.push_back(i * kSampleDt);
  if (duration - ts.back() > 1e-9) ts.push_back(duration);
  return ts;
}

// Target speed used to normalize the efficiency cost.
double efficiency_reference(const ManeuverConfig& cfg, const TrafficSnapshot& snapshot) {
  double v = snapshot.speed_limit;
  if (cfg.maneuver == "velocity_keeping" || cfg.maneuver == "reverse") {
    v = std::fabs(cfg.target_speed.mid());
  } else if (cfg.maneuver == "vehicle_following") {
    if (const ActorView* a = resolve_target_vehicle(cfg, snapshot, false))
      v = std::fabs(a->state.s_dot);
  } else if (cfg.maneuver == "merge_in_front") {
    if (const ActorView* a = snapshot.find_actor(cfg.vehicle)) {
      const double dv = cfg.delta_s.size() > 1 ? cfg.delta_s[1] : 0.0;
      v = std::fabs(a->state.s_dot + dv);
    }
  } else if (cfg.maneuver == "lane_swerve") {
    v = std::fabs(snapshot.self.s_dot);
  }
  return std::max(0.1, v);
}

}  // namespace

ManeuverConfig ManeuverConfig::from_params(const std::string& maneuver, const ParamMap& params) {
  ManeuverConfig cfg;
  cfg.maneuver = maneuver;
  for (const auto& [key, value] : params) {
    if (key == "target_speed") {
      cfg.target_speed = value.as_range();
    } else if (key == "time_gap") {
      cfg.time_gap = value.as_range();
    } else if (key == "lateral_offset") {
      cfg.lateral_offset = value.as_range();
    } else if (key == "target_lane_id") {
      cfg.target_lane_id = value.as_range();
    } else if (key == "stop_point") {
      cfg.stop_point = value.as_range();
    } else if (key == "margin") {
      cfg.stop_margin = value.as_number();
    } else if (key == "vehicle") {
      cfg.vehicle = value.as_symbol();
    } else if (key == "delta_s") {
      cfg.delta_s = value.tuple;
    } else if (key == "acceptance_gap") {
      cfg.acceptance_gap = value.as_range();
    } else if (key == "T") {
      cfg.horizon = value.as_range();
    } else if (key == "samples_per_param") {
      cfg.samples_per_param = std::max(1, static_cast<int>(std::lround(value.as_number())));
    } else if (key == "weight_time") {
      cfg.weights.time = value.as_number();
    } else if (key == "weight_efficiency") {
      cfg.weights.efficiency = value.as_number();
    } else if (key == "weight_lane_offset") {
      cfg.weights.lane_offset = value.as_number();
    } else if (key == "weight_jerk") {
      cfg.weights.jerk = value.as_number();
    } else if (key == "weight_accel") {
      cfg.weights.accel = value.as_number();
    } else if (key == "weight_proximity") {
      cfg.weights.proximity = value.as_number();
    } else if (key == "max_jerk_lon") {
      cfg.limits.max_jerk_lon = value.as_number();
    } else if (key == "max_jerk_lat") {
      cfg.limits.max_jerk_lat = value.as_number();
    } else if (key == "max_accel_lon") {
      cfg.limits.max_accel_lon = value.as_number();
    } else if (key == "max_accel_lat") {
      cfg.limits.max_accel_lat = value.as_number();
    } else if (key == "collision_ignore") {
      cfg.collision_ignore.push_back(value.as_symbol());
    } else if (key.rfind("proximity_factor_", 0) == 0) {
      cfg.proximity_factors[key.substr(17)] = value.as_number();
    }
    // Unknown keys were already rejected at link time.
  }
  return cfg;
}

ManeuverConfig ManeuverConfig::from_decision(const Decision& decision) {
  return from_params(decision.maneuver, decision.params);
}

std::vector<TargetState> find_targets(const ManeuverConfig& cfg,
                                      const TrafficSnapshot& snapshot) {
  std::vector<TargetState> targets;
  const FrenetState& self = snapshot.self;
  const int n = cfg.samples_per_param;
  const std::vector<double> horizons = horizon_samples(cfg);
  const std::vector<double> offsets = sample_range(cfg.lateral_offset, n);

  auto push = [&](double T, double s, double sd, double sdd, double d) {
    TargetState t;
    t.T = T;
    t.state = FrenetState{s, sd, sdd, d, 0.0, 0.0};
    targets.push_back(t);
  };

  if (cfg.maneuver == "velocity_keeping") {
    for (double T : horizons)
      for (double v : sample_range(cfg.target_speed, n))
        for (double off : offsets)
          push(T, self.s + 0.5 * (self.s_dot + v) * T, v, 0.0, off);
  } else if (cfg.maneuver == "vehicle_following") {
    const ActorView* lead = resolve_target_vehicle(cfg, snapshot, !cfg.vehicle.empty());
    if (!lead) return targets;  // nothing to follow; caller falls back
    const double half_pair = 0.5 * (lead->length + snapshot.self_length);
    for (double T : horizons) {
      const FrenetState p = lead->predicted(T);
      const double v = std::max(0.0, p.s_dot);
      for (double tg : sample_range(cfg.time_gap, n))
        for (double off : offsets)
          push(T, p.s - tg * v - half_pair, v, 0.0, off);
    }
  } else if (cfg.maneuver == "lane_swerve") {
    const Range lanes = cfg.target_lane_id ? *cfg.target_lane_id : Range::point(0.0);
    for (double T : horizons)
      for (double lane : sample_range(lanes, n))
        for (double off : offsets)
          push(T, self.s + self.s_dot * T, self.s_dot, 0.0,
               lane_center(std::round(lane), snapshot) + off);
  } else if (cfg.maneuver == "merge_in_front") {
    const ActorView* target = snapshot.find_actor(cfg.vehicle);
    if (!target) {
      throw PlanError("merge_in_front: target vehicle '" + cfg.vehicle +
                      "' is not present in the traffic snapshot");
    }
    if (cfg.delta_s.size() < 2)
      throw PlanError("merge_in_front: delta_s requires (gap, relative speed)");
    const double gap = cfg.delta_s[0];
    const double dv = cfg.delta_s[1];
    const double da = cfg.delta_s.size() > 2 ? cfg.delta_s[2] : 0.0;
    const double half_pair = 0.5 * (target->length + snapshot.self_length);
    const double lane = cfg.target_lane_id ? std::round(cfg.target_lane_id->mid())
                                           : target->relative_lane;
    for (double T : horizons) {
      const FrenetState p = target->predicted(T);
      // Positive gap leaves that much free road between own rear bumper and
      // the target's front bumper; negative overlaps the target.
      push(T, p.s + gap + half_pair, p.s_dot + dv, da, lane_center(lane, snapshot));
    }
  } else if (cfg.maneuver == "stop") {
    Range stop_at = Range::point(self.s + snapshot.remaining_route_length);
    if (cfg.stop_point) {
      stop_at = *cfg.stop_point;
    } else if (snapshot.stop_line_s) {
      stop_at = Range::point(*snapshot.stop_line_s - cfg.stop_margin);
    }
    for (double T : horizons)
      for (double s : sample_range(stop_at, n))
        for (double off : offsets) push(T, s, 0.0, 0.0, off);
  } else if (cfg.maneuver == "reverse") {
    for (double T : horizons)
      for (double v : sample_range(cfg.target_speed, n))
        for (double off : offsets) {
          const double vt = -std::fabs(v);
          push(T, self.s + 0.5 * (self.s_dot + vt) * T, vt, 0.0, off);
        }
  } else {
    throw PlanError("unknown maneuver '" + cfg.maneuver + "'");
  }
  return targets;
}

std::vector<FrenetTrajectory> generate_candidates(const FrenetState& start,
                                                  const std::vector<TargetState>& targets,
                                                  double t0) {
  std::vector<FrenetTrajectory> out;
  out.reserve(targets.size());
  for (const TargetState& t : targets) {
    FrenetTrajectory tr;
    tr.s_poly = solve_quintic({start.s, start.s_dot, start.s_ddot},
                              {t.state.s, t.state.s_dot, t.state.s_ddot}, t.T);
    tr.d_poly = solve_quintic({start.d, start.d_dot, start.d_ddot},
                              {t.state.d, t.state.d_dot, t.state.d_ddot}, t.T);
    tr.duration = t.T;
    tr.t0 = t0;
    out.push_back(tr);
  }
  return out;
}

std::optional<Violation> check_feasibility(const FrenetTrajectory& traj,
                                           const TrafficSnapshot& snapshot,
                                           const FeasibilityContext& ctx) {
  const double base_dt = traj.t0 - snapshot.timestamp;
  Disk self_disks[3], actor_disks[3];
  for (double t : time_samples(traj.duration)) {
    const double s = traj.s_poly.value(t);
    const double sd = traj.s_poly.first(t);
    const double sdd = traj.s_poly.second(t);
    const double sddd = traj.s_poly.third(t);
    const double d = traj.d_poly.value(t);
    const double dd = traj.d_poly.first(t);
    const double ddd = traj.d_poly.second(t);
    const double dddd = traj.d_poly.third(t);

    if (s < ctx.path_s_min - 1e-6 || s > ctx.path_s_max + 1e-6)
      return Violation{"leaves reference path window", t, ""};
    if (!ctx.reverse_maneuver && sd < -kSpeedEps)
      return Violation{"direction inversion", t, ""};
    if (ctx.reverse_maneuver && sd > kSpeedEps)
      return Violation{"direction inversion", t, ""};
    if (std::fabs(sddd) > ctx.limits.max_jerk_lon)
      return Violation{"longitudinal jerk limit", t, ""};
    if (std::fabs(dddd) > ctx.limits.max_jerk_lat)
      return Violation{"lateral jerk limit", t, ""};
    if (std::fabs(sdd) > ctx.limits.max_accel_lon)
      return Violation{"longitudinal acceleration limit", t, ""};
    if (std::fabs(ddd) > ctx.limits.max_accel_lat)
      return Violation{"lateral acceleration limit", t, ""};

    const double yaw = footprint_yaw(sd, dd);
    const double extent = snapshot.self_width / 2.0 * std::fabs(std::cos(yaw)) +
                          snapshot.self_length / 2.0 * std::fabs(std::sin(yaw));
    if (d + extent > ctx.lane_bounds.d_max + 1e-9 || d - extent < ctx.lane_bounds.d_min - 1e-9)
      return Violation{"lane departure", t, ""};

    covering_disks(s, d, yaw, snapshot.self_length, snapshot.self_width, self_disks);
    for (const ActorView& a : snapshot.actors) {
      if (is_ignored(a.name, ctx.collision_ignore)) continue;
      const FrenetState p = a.predicted(base_dt + t);
      covering_disks(p.s, p.d, footprint_yaw(p.s_dot, p.d_dot), a.length, a.width,
                     actor_disks);
      for (const Disk& ds : self_disks) {
        for (const Disk& da : actor_disks) {
          const double dist = std::hypot(ds.s - da.s, ds.d - da.d);
          if (dist < ds.r + da.r) return Violation{"collision", t, a.name};
        }
      }
    }
  }
  return std::nullopt;
}

RankingResult rank_and_select(const std::vector<FrenetTrajectory>& candidates,
                              const TrafficSnapshot& snapshot, const ManeuverConfig& cfg) {
  if (candidates.empty()) throw PlanError(cfg.maneuver + ": no candidates to rank");

  FeasibilityContext ctx;
  ctx.limits = cfg.limits;
  ctx.lane_bounds = lane_bounds_for(cfg, snapshot);
  ctx.reverse_maneuver = cfg.maneuver == "reverse";
  ctx.collision_ignore = cfg.collision_ignore;
  if (snapshot.path) {
    // Path s is frame-local: the fitted window spans [0, length] regardless of
    // where it sits on the route (origin_s records that offset separately).
    ctx.path_s_min = 0.0;
    ctx.path_s_max = snapshot.path->length();
  }

  const double T_target = cfg.horizon.mid();
  const double v_ref = efficiency_reference(cfg, snapshot);
  const double d_ref = reference_lane_center(cfg, snapshot);
  const double half_lane = snapshot.lane_width / 2.0;
  const double j_norm = sq(cfg.limits.max_jerk_lon);
  const double a_norm = sq(cfg.limits.max_accel_lon);
  const double r_self = snapshot.self_width / 2.0 * kDiskScale;

  RankingResult result;
  result.ranking.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    const FrenetTrajectory& tr = candidates[i];
    RankedCandidate rc;
    rc.trajectory = tr;
    rc.index = static_cast<int>(i);
    rc.violation = check_feasibility(tr, snapshot, ctx);
    rc.feasible = !rc.violation.has_value();

    const double T = tr.duration;
    CostBreakdown& c = rc.breakdown;
    c.time = sq((T - T_target) / T_target);
    const double v_bar = (tr.s_poly.value(T) - tr.s_poly.value(0.0)) / T;
    c.efficiency = std::max(0.0, 1.0 - std::fabs(v_bar) / v_ref);
    c.jerk = (jerk_cost(tr.s_poly, T) + jerk_cost(tr.d_poly, T)) / (T * j_norm);
    c.accel = (accel_integral(tr.s_poly, T) + accel_integral(tr.d_poly, T)) / (T * a_norm);

    double lane_sum = 0.0, prox_sum = 0.0;
    const std::vector<double> ts = time_samples(T);
    const double base_dt = tr.t0 - snapshot.timestamp;
    for (double t : ts) {
      const double s = tr.s_poly.value(t);
      const double d = tr.d_poly.value(t);
      lane_sum += sq((d - d_ref) / half_lane);
      for (const ActorView& a : snapshot.actors) {
        if (is_ignored(a.name, cfg.collision_ignore)) continue;
        const FrenetState p = a.predicted(base_dt + t);
        const double r_a = a.width / 2.0 * kDiskScale;
        const double gap = std::max(0.0, std::hypot(s - p.s, d - p.d) - (r_self + r_a));
        double factor = 1.0;
        if (auto it = cfg.proximity_factors.find(a.name); it != cfg.proximity_factors.end())
          factor = it->second;
        prox_sum += factor * std::exp(-gap / kProximitySigma);
      }
    }
    c.lane_offset = lane_sum / static_cast<double>(ts.size());
    c.proximity = prox_sum;

    const CostWeights& w = cfg.weights;
    rc.cost = w.time * c.time + w.efficiency * c.efficiency + w.lane_offset * c.lane_offset +
              w.jerk * c.jerk + w.accel * c.accel + w.proximity * c.proximity;

    if (rc.feasible &&
        (result.best_index < 0 || rc.cost < result.ranking[result.best_index].cost)) {
      result.best_index = static_cast<int>(i);
    }
    result.ranking.push_back(std::move(rc));
  }
  return result;
}

PlanOutcome plan(const Decision& decision, const TrafficSnapshot& snapshot) {
  PlanOutcome out;
  out.config = ManeuverConfig::from_decision(decision);
  const std::vector<TargetState> targets = find_targets(out.config, snapshot);
  if (targets.empty()) return out;
  const std::vector<FrenetTrajectory> candidates =
      generate_candidates(snapshot.self, targets, snapshot.timestamp);
  out.ranking = rank_and_select(candidates, snapshot, out.config);
  if (const RankedCandidate* best = out.ranking.best()) out.trajectory = best->trajectory;
  return out;
}

}  // namespace sdv
