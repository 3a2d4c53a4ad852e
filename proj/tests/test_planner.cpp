#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "sdv/behavior.hpp"
#include "sdv/planner.hpp"

using namespace sdv;

namespace {

TrafficSnapshot cruising_world(double v = 10.0) {
  TrafficSnapshot w;
  w.timestamp = 1.0;
  w.self.s = 50.0;
  w.self.s_dot = v;
  w.remaining_route_length = 1000.0;
  return w;
}

ActorView actor(const std::string& name, double s, double s_dot, int lane = 0) {
  ActorView a;
  a.id = 7;
  a.name = name;
  a.state.s = s;
  a.state.s_dot = s_dot;
  a.state.d = lane * 3.5;
  a.relative_lane = lane;
  return a;
}

ParamMap params_of(const std::string& leaf_src) {
  const BTNode n = parse_tree(leaf_src);
  return n.params;
}

std::set<double> end_speeds(const std::vector<TargetState>& ts) {
  std::set<double> out;
  for (const TargetState& t : ts) out.insert(std::round(t.state.s_dot * 1e9) / 1e9);
  return out;
}

}  // namespace

TEST_CASE("maneuver config resolves parameters, weights, and limits") {
  const ParamMap p = params_of(
      "maneuver velocity_keeping(target_speed=14(+-10%), lateral_offset=0.5, T=4(+-25%), "
      "samples_per_param=5, weight_time=2, weight_proximity=9, max_jerk_lon=6, "
      "collision_ignore=ego, proximity_factor_ego=0.25)\n");
  const ManeuverConfig cfg = ManeuverConfig::from_params("velocity_keeping", p);
  CHECK(cfg.target_speed.lo == doctest::Approx(12.6));
  CHECK(cfg.target_speed.hi == doctest::Approx(15.4));
  CHECK(cfg.lateral_offset.is_point());
  CHECK(cfg.lateral_offset.lo == doctest::Approx(0.5));
  CHECK(cfg.horizon.lo == doctest::Approx(3.0));
  CHECK(cfg.horizon.hi == doctest::Approx(5.0));
  CHECK(cfg.samples_per_param == 5);
  CHECK(cfg.weights.time == doctest::Approx(2.0));
  CHECK(cfg.weights.proximity == doctest::Approx(9.0));
  CHECK(cfg.limits.max_jerk_lon == doctest::Approx(6.0));
  REQUIRE(cfg.collision_ignore.size() == 1);
  CHECK(cfg.collision_ignore[0] == "ego");
  CHECK(cfg.proximity_factors.at("ego") == doctest::Approx(0.25));
}

TEST_CASE("velocity keeping spans the speed band with midpoint arc targets") {
  const ParamMap p = params_of("maneuver velocity_keeping(target_speed=14(+-10%))\n");
  const ManeuverConfig cfg = ManeuverConfig::from_params("velocity_keeping", p);
  const TrafficSnapshot w = cruising_world(10.0);
  const std::vector<TargetState> ts = find_targets(cfg, w);
  // 3 horizon samples x 3 speed samples x 1 offset.
  CHECK(ts.size() == 9);
  CHECK(end_speeds(ts) == std::set<double>{12.6, 14.0, 15.4});
  for (const TargetState& t : ts) {
    // Terminal arc position assumes the mean of start and end speed.
    CHECK(t.state.s ==
          doctest::Approx(w.self.s + 0.5 * (w.self.s_dot + t.state.s_dot) * t.T).epsilon(1e-12));
    CHECK(t.state.s_ddot == 0.0);
    CHECK(t.state.d == 0.0);
  }
  const std::set<double> horizons = [&] {
    std::set<double> h;
    for (const TargetState& t : ts) h.insert(t.T);
    return h;
  }();
  CHECK(horizons == std::set<double>{2.0, 3.5, 5.0});
}

TEST_CASE("vehicle following targets the lead's predicted rear minus the time gap") {
  const ParamMap p = params_of("maneuver vehicle_following(time_gap=2(+-10%))\n");
  const ManeuverConfig cfg = ManeuverConfig::from_params("vehicle_following", p);
  TrafficSnapshot w = cruising_world(10.0);
  w.actors = {actor("lead", 90.0, 8.0)};
  const std::vector<TargetState> ts = find_targets(cfg, w);
  REQUIRE(ts.size() == 9);
  const double half_pair = 0.5 * (4.8 + 4.8);
  for (const TargetState& t : ts) {
    const double lead_s = 90.0 + 8.0 * t.T;  // constant-velocity prediction
    CHECK(t.state.s_dot == doctest::Approx(8.0));
    const double tg = (lead_s - half_pair - t.state.s) / 8.0;
    CHECK(tg >= 1.8 - 1e-9);
    CHECK(tg <= 2.2 + 1e-9);
  }

  // Without any lead the maneuver has nothing to do.
  w.actors.clear();
  CHECK(find_targets(cfg, w).empty());
}

TEST_CASE("following a stopped lead aims for a standstill bumper gap") {
  const ParamMap p = params_of("maneuver vehicle_following()\n");
  const ManeuverConfig cfg = ManeuverConfig::from_params("vehicle_following", p);
  TrafficSnapshot w = cruising_world(5.0);
  w.actors = {actor("lead", 80.0, 0.0)};
  const std::vector<TargetState> ts = find_targets(cfg, w);
  for (const TargetState& t : ts) {
    CHECK(t.state.s_dot == 0.0);
    // Zero speed collapses the time-gap term: target sits half_pair short of
    // the lead center, i.e. bumper to bumper.
    CHECK(t.state.s == doctest::Approx(80.0 - 4.8).epsilon(1e-12));
  }
}

TEST_CASE("a named following target that is absent is an error") {
  const ParamMap p = params_of("maneuver vehicle_following(vehicle=ghost)\n");
  const ManeuverConfig cfg = ManeuverConfig::from_params("vehicle_following", p);
  const TrafficSnapshot w = cruising_world();
  CHECK_THROWS_AS(find_targets(cfg, w), PlanError);
}

TEST_CASE("lane swerve keeps speed and moves to the lane center plus offset") {
  const ParamMap p = params_of("maneuver lane_swerve(target_lane_id=-1, lateral_offset=0.3)\n");
  const ManeuverConfig cfg = ManeuverConfig::from_params("lane_swerve", p);
  const TrafficSnapshot w = cruising_world(12.0);
  const std::vector<TargetState> ts = find_targets(cfg, w);
  REQUIRE(!ts.empty());
  for (const TargetState& t : ts) {
    CHECK(t.state.s_dot == doctest::Approx(12.0));
    CHECK(t.state.s == doctest::Approx(w.self.s + 12.0 * t.T));
    CHECK(t.state.d == doctest::Approx(-3.5 + 0.3));
  }
}

TEST_CASE("merge positions relative to the target's predicted front bumper") {
  const ParamMap p =
      params_of("maneuver merge_in_front(vehicle=ego, delta_s=(5, -3), target_lane_id=-1)\n");
  const ManeuverConfig cfg = ManeuverConfig::from_params("merge_in_front", p);
  TrafficSnapshot w = cruising_world(10.0);
  w.actors = {actor("ego", 40.0, 13.0, -1)};
  const std::vector<TargetState> ts = find_targets(cfg, w);
  REQUIRE(ts.size() == 3);  // one per horizon sample
  for (const TargetState& t : ts) {
    const double ego_s = 40.0 + 13.0 * t.T;
    // Free gap of 5 m ahead of the ego: own center sits gap + half lengths on.
    CHECK(t.state.s == doctest::Approx(ego_s + 5.0 + 4.8).epsilon(1e-9));
    CHECK(t.state.s_dot == doctest::Approx(10.0));  // ego speed - 3
    CHECK(t.state.d == doctest::Approx(-3.5));
  }

  w.actors.clear();
  CHECK_THROWS_AS(find_targets(cfg, w), PlanError);

  const ParamMap no_ds = params_of("maneuver merge_in_front(vehicle=ego)\n");
  ManeuverConfig bad = ManeuverConfig::from_params("merge_in_front", no_ds);
  w.actors = {actor("ego", 40.0, 13.0, -1)};
  CHECK_THROWS_AS(find_targets(bad, w), PlanError);
}

TEST_CASE("stop targets resolve from point, stop line, or route end") {
  TrafficSnapshot w = cruising_world(8.0);
  w.remaining_route_length = 60.0;

  const ManeuverConfig by_point =
      ManeuverConfig::from_params("stop", params_of("maneuver stop(stop_point=70)\n"));
  for (const TargetState& t : find_targets(by_point, w)) {
    CHECK(t.state.s == doctest::Approx(70.0));
    CHECK(t.state.s_dot == 0.0);
    CHECK(t.state.s_ddot == 0.0);
  }

  w.stop_line_s = 100.0;
  const ManeuverConfig by_line =
      ManeuverConfig::from_params("stop", params_of("maneuver stop(margin=2.5)\n"));
  for (const TargetState& t : find_targets(by_line, w)) {
    CHECK(t.state.s == doctest::Approx(97.5));
  }

  w.stop_line_s.reset();
  const ManeuverConfig by_route =
      ManeuverConfig::from_params("stop", params_of("maneuver stop()\n"));
  for (const TargetState& t : find_targets(by_route, w)) {
    CHECK(t.state.s == doctest::Approx(w.self.s + 60.0));
  }
}

TEST_CASE("reverse targets negative path speed") {
  const ManeuverConfig cfg =
      ManeuverConfig::from_params("reverse", params_of("maneuver reverse(target_speed=2)\n"));
  TrafficSnapshot w = cruising_world(0.0);
  for (const TargetState& t : find_targets(cfg, w)) {
    CHECK(t.state.s_dot == doctest::Approx(-2.0));
    CHECK(t.state.s < w.self.s);
  }
}

TEST_CASE("candidates connect the start state to each target") {
  const TrafficSnapshot w = cruising_world(10.0);
  const ManeuverConfig cfg = ManeuverConfig::from_params(
      "velocity_keeping", params_of("maneuver velocity_keeping(target_speed=12)\n"));
  const std::vector<TargetState> ts = find_targets(cfg, w);
  const std::vector<FrenetTrajectory> cands = generate_candidates(w.self, ts, w.timestamp);
  REQUIRE(cands.size() == ts.size());
  for (size_t i = 0; i < cands.size(); ++i) {
    CHECK(cands[i].t0 == w.timestamp);
    CHECK(cands[i].s_poly.value(0.0) == doctest::Approx(w.self.s));
    CHECK(cands[i].s_poly.first(0.0) == doctest::Approx(w.self.s_dot));
    CHECK(cands[i].s_poly.value(cands[i].duration) == doctest::Approx(ts[i].state.s));
    CHECK(cands[i].s_poly.first(cands[i].duration) == doctest::Approx(ts[i].state.s_dot));
  }
}

TEST_CASE("feasibility reports the first violated constraint") {
  const TrafficSnapshot w = cruising_world(10.0);
  FeasibilityContext ctx;
  auto traj = [&](const BoundaryState& s_end, double T, const BoundaryState& d_end = {0, 0, 0}) {
    FrenetTrajectory tr;
    tr.s_poly = solve_quintic({50.0, 10.0, 0.0}, s_end, T);
    tr.d_poly = solve_quintic({0.0, 0.0, 0.0}, d_end, T);
    tr.duration = T;
    tr.t0 = w.timestamp;
    return tr;
  };

  // Gentle continuation: no violation.
  CHECK_FALSE(check_feasibility(traj({90.0, 10.0, 0.0}, 4.0), w, ctx).has_value());

  // Backing up on a forward maneuver. Kept gentle so the speed sign flips
  // before any jerk or acceleration bound does.
  FrenetTrajectory creep;
  creep.s_poly = solve_quintic({50.0, 2.0, 0.0}, {45.0, -1.0, 0.0}, 5.0);
  creep.d_poly = solve_quintic({0, 0, 0}, {0, 0, 0}, 5.0);
  creep.duration = 5.0;
  creep.t0 = w.timestamp;
  const auto inv = check_feasibility(creep, w, ctx);
  REQUIRE(inv.has_value());
  CHECK(inv->reason == "direction inversion");

  // Violent longitudinal jump.
  const auto jerk = check_feasibility(traj({150.0, 10.0, 0.0}, 2.0), w, ctx);
  REQUIRE(jerk.has_value());
  CHECK(jerk->reason == "longitudinal jerk limit");

  // Harsh lateral move.
  const auto lat = check_feasibility(traj({90.0, 10.0, 0.0}, 4.0, {14.0, 0.0, 0.0}), w, ctx);
  REQUIRE(lat.has_value());
  CHECK(lat->reason == "lateral jerk limit");

  // Sustained over-acceleration within jerk limits.
  FeasibilityContext strict;
  strict.limits.max_jerk_lon = 100.0;
  strict.limits.max_accel_lon = 2.0;
  const auto acc = check_feasibility(traj({120.0, 25.0, 0.0}, 4.0), w, strict);
  REQUIRE(acc.has_value());
  CHECK(acc->reason == "longitudinal acceleration limit");

  // Footprint outside the allowed lateral band.
  FeasibilityContext banded;
  banded.limits.max_jerk_lat = 1e9;
  banded.limits.max_accel_lat = 1e9;
  banded.lane_bounds = LaneBounds{-1.75, 1.75};
  const auto lane = check_feasibility(traj({90.0, 10.0, 0.0}, 5.0, {3.0, 0.0, 0.0}), w, banded);
  REQUIRE(lane.has_value());
  CHECK(lane->reason == "lane departure");

  // Reverse maneuvers flip the direction rule.
  FeasibilityContext rev;
  rev.reverse_maneuver = true;
  FrenetTrajectory back;
  back.s_poly = solve_quintic({50.0, -1.0, 0.0}, {40.0, -2.0, 0.0}, 5.0);
  back.d_poly = solve_quintic({0, 0, 0}, {0, 0, 0}, 5.0);
  back.duration = 5.0;
  back.t0 = w.timestamp;
  CHECK_FALSE(check_feasibility(back, w, rev).has_value());
  CHECK(check_feasibility(traj({90.0, 10.0, 0.0}, 4.0), w, rev).has_value());
}

TEST_CASE("predicted overlap with another vehicle is a collision violation") {
  TrafficSnapshot w = cruising_world(10.0);
  w.actors = {actor("wall", 75.0, 0.0)};
  w.actors[0].prediction = {w.actors[0].state};  // parked
  FeasibilityContext ctx;

  FrenetTrajectory through;
  through.s_poly = solve_quintic({50.0, 10.0, 0.0}, {90.0, 10.0, 0.0}, 4.0);
  through.d_poly = solve_quintic({0, 0, 0}, {0, 0, 0}, 4.0);
  through.duration = 4.0;
  through.t0 = w.timestamp;
  const auto hit = check_feasibility(through, w, ctx);
  REQUIRE(hit.has_value());
  CHECK(hit->reason == "collision");
  CHECK(hit->actor == "wall");

  // The same trajectory passes when that actor is ignored.
  ctx.collision_ignore = {"wall"};
  CHECK_FALSE(check_feasibility(through, w, ctx).has_value());
}

TEST_CASE("ranking picks the cheapest feasible candidate deterministically") {
  TrafficSnapshot w = cruising_world(14.0);
  const ManeuverConfig cfg = ManeuverConfig::from_params(
      "velocity_keeping", params_of("maneuver velocity_keeping(target_speed=14(+-10%))\n"));
  const std::vector<TargetState> ts = find_targets(cfg, w);
  const std::vector<FrenetTrajectory> cands = generate_candidates(w.self, ts, w.timestamp);
  const RankingResult r1 = rank_and_select(cands, w, cfg);
  REQUIRE(r1.best_index >= 0);
  const RankedCandidate* best = r1.best();
  for (const RankedCandidate& rc : r1.ranking) {
    if (rc.feasible) CHECK(best->cost <= rc.cost + 1e-15);
  }
  // Re-ranking the identical input reproduces the same choice and costs.
  const RankingResult r2 = rank_and_select(cands, w, cfg);
  CHECK(r2.best_index == r1.best_index);
  for (size_t i = 0; i < r1.ranking.size(); ++i) {
    CHECK(r1.ranking[i].cost == r2.ranking[i].cost);
  }

  CHECK_THROWS_AS(rank_and_select({}, w, cfg), PlanError);
}

TEST_CASE("efficiency pulls the chosen speed toward the band that matches demand") {
  // Cruising at the band center with matching reference: the center sample
  // (T = 3.5, v = 14) is the natural minimum, beating slow-down candidates.
  TrafficSnapshot w = cruising_world(14.0);
  const ManeuverConfig cfg = ManeuverConfig::from_params(
      "velocity_keeping", params_of("maneuver velocity_keeping(target_speed=14(+-10%))\n"));
  const std::vector<TargetState> ts = find_targets(cfg, w);
  const std::vector<FrenetTrajectory> cands = generate_candidates(w.self, ts, w.timestamp);
  const RankingResult r = rank_and_select(cands, w, cfg);
  REQUIRE(r.best());
  const FrenetTrajectory& chosen = r.best()->trajectory;
  CHECK(chosen.s_poly.first(chosen.duration) >= 14.0 - 1e-9);
}

TEST_CASE("proximity cost discourages passing close to other traffic") {
  TrafficSnapshot w = cruising_world(10.0);
  const ManeuverConfig cfg = ManeuverConfig::from_params(
      "velocity_keeping", params_of("maneuver velocity_keeping(target_speed=10)\n"));
  const std::vector<TargetState> ts = find_targets(cfg, w);
  const std::vector<FrenetTrajectory> cands = generate_candidates(w.self, ts, w.timestamp);

  const RankingResult clear = rank_and_select(cands, w, cfg);
  ActorView near = actor("near", 70.0, 10.0, -1);
  near.state.d = -2.2;  // close alongside-to-be
  near.prediction = {near.state};
  w.actors = {near};
  const RankingResult crowded = rank_and_select(cands, w, cfg);
  REQUIRE(clear.best());
  REQUIRE(crowded.best());
  CHECK(crowded.best()->breakdown.proximity > clear.best()->breakdown.proximity);
  CHECK(crowded.best()->cost > clear.best()->cost);
}

TEST_CASE("plan wires the stages together and exposes the ranking") {
  TrafficSnapshot w = cruising_world(10.0);
  Decision d;
  d.maneuver = "velocity_keeping";
  d.params = params_of("maneuver velocity_keeping(target_speed=12(+-10%))\n");
  const PlanOutcome out = plan(d, w);
  REQUIRE(out.trajectory.has_value());
  CHECK(out.trajectory->t0 == w.timestamp);
  CHECK(out.trajectory->s_poly.value(0.0) == doctest::Approx(w.self.s));
  CHECK(out.ranking.ranking.size() == 9);
  CHECK(out.config.maneuver == "velocity_keeping");

  // An impossible request (stop far behind) produces no trajectory but a
  // full ranking of the rejected candidates.
  Decision blocked;
  blocked.maneuver = "stop";
  blocked.params = params_of("maneuver stop(stop_point=-500)\n");
  const PlanOutcome none = plan(blocked, w);
  CHECK_FALSE(none.trajectory.has_value());
  CHECK(none.ranking.best_index == -1);
  CHECK(!none.ranking.ranking.empty());
}
