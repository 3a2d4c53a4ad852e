#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "sdv/engine.hpp"

using namespace sdv;

namespace {

const char* kMapFile = SDVSIM_FIXTURE_DIR "/maps/straight_two_lane.yaml";

CartesianState moving(double x, double y, double v, double theta = 0.0) {
  CartesianState c;
  c.x = x;
  c.y = y;
  c.theta = theta;
  c.x_dot = v * std::cos(theta);
  c.y_dot = v * std::sin(theta);
  return c;
}

SimClock lockstep_clock() {
  SimClock c;
  c.realtime = false;
  return c;
}

std::vector<TraceRow> rows_of(const SimulationResult& r, int vehicle_id) {
  std::vector<TraceRow> out;
  for (const TraceRow& row : r.trace)
    if (row.vehicle_id == vehicle_id) out.push_back(row);
  return out;
}

}  // namespace

TEST_CASE("plan period must be a whole number of ticks") {
  SimClock c;
  CHECK(c.ticks_per_plan() == 10);  // 1/30 s ticks, 1/3 s plans
  c.tick_dt = 0.1;
  c.plan_dt = 0.5;
  CHECK(c.ticks_per_plan() == 5);
  c.plan_dt = 1.0 / 3.0;
  CHECK_THROWS_AS(c.ticks_per_plan(), DomainError);
  c.plan_dt = 0.05;
  CHECK_THROWS_AS(c.ticks_per_plan(), DomainError);
}

TEST_CASE("speed profiles interpolate and integrate exactly") {
  const SpeedProfile ramp{{{0.0, 10.0}, {2.0, 0.0}}};
  CHECK(ramp.speed_at(-1.0) == 10.0);
  CHECK(ramp.speed_at(1.0) == doctest::Approx(5.0));
  CHECK(ramp.speed_at(3.0) == 0.0);
  CHECK(ramp.accel_at(1.0) == doctest::Approx(-5.0));
  CHECK(ramp.accel_at(3.0) == 0.0);
  CHECK(ramp.integrate(0.0, 2.0) == doctest::Approx(10.0));  // triangle area
  CHECK(ramp.integrate(0.0, 5.0) == doctest::Approx(10.0));  // parked after 2 s
  CHECK(ramp.integrate(0.5, 1.5) == doctest::Approx(5.0));
  CHECK(ramp.integrate(2.0, 0.0) == doctest::Approx(-10.0));

  const SpeedProfile flat = SpeedProfile::constant(7.0);
  CHECK(flat.speed_at(123.0) == 7.0);
  CHECK(flat.integrate(1.0, 4.0) == doctest::Approx(21.0));
}

TEST_CASE("scripted vehicles follow their polyline and park at the end") {
  ScriptedVehicle s;
  s.polyline = {{0, 0}, {50, 0}, {50, 50}};
  s.profile = SpeedProfile::constant(10.0);
  s.activate(0.0);

  CartesianState c = s.state_at(2.0);
  CHECK(c.x == doctest::Approx(20.0));
  CHECK(c.y == doctest::Approx(0.0));
  CHECK(c.theta == doctest::Approx(0.0));
  CHECK(c.speed() == doctest::Approx(10.0));

  c = s.state_at(6.0);  // 60 m: 10 m up the second leg
  CHECK(c.x == doctest::Approx(50.0));
  CHECK(c.y == doctest::Approx(10.0));
  CHECK(c.theta == doctest::Approx(M_PI / 2.0));

  c = s.state_at(60.0);  // past the end: parked at the last vertex
  CHECK(c.x == doctest::Approx(50.0));
  CHECK(c.y == doctest::Approx(50.0));
  CHECK(c.speed() == 0.0);
}

TEST_CASE("profile switches preserve accumulated distance") {
  ScriptedVehicle s;
  s.polyline = {{0, 0}, {200, 0}};
  s.profile = SpeedProfile::constant(10.0);
  s.activate(0.0);
  s.advance(2.0);
  CHECK(s.traveled == doctest::Approx(20.0));
  s.switch_profile(SpeedProfile::constant(2.0), 2.0);
  CHECK(s.state_at(5.0).x == doctest::Approx(20.0 + 3.0 * 2.0));
  CHECK(s.state_at(5.0).speed() == doctest::Approx(2.0));
}

TEST_CASE("the stop fallback is a constant-deceleration profile") {
  const StopProfile p{1.0, 100.0, 10.0, -0.5, 2.5};
  FrenetState f = p.state_at(1.0);
  CHECK(f.s == doctest::Approx(100.0));
  CHECK(f.s_dot == doctest::Approx(10.0));
  CHECK(f.d == doctest::Approx(-0.5));

  f = p.state_at(3.0);  // two seconds in
  CHECK(f.s == doctest::Approx(100.0 + 20.0 - 5.0));
  CHECK(f.s_dot == doctest::Approx(5.0));
  CHECK(f.s_ddot == doctest::Approx(-2.5));

  // Stops after v/a = 4 s having covered v^2 / 2a = 20 m, then holds.
  f = p.state_at(5.0);
  CHECK(f.s == doctest::Approx(120.0));
  CHECK(f.s_dot == 0.0);
  CHECK(p.state_at(50.0).s == doctest::Approx(120.0));

  // Reversing traffic brakes toward negative s.
  const StopProfile rev{0.0, 100.0, -5.0, 0.0, 2.5};
  CHECK(rev.state_at(10.0).s == doctest::Approx(100.0 - 5.0));
  CHECK(rev.state_at(1.0).s_dot == doctest::Approx(-2.5));
}

TEST_CASE("active motions hold terminal velocity and extend past the frame") {
  std::vector<Vec2> pts;
  for (int i = 0; i <= 10; ++i) pts.push_back(Vec2(10.0 * i, 0.0));
  auto frame = std::make_shared<ReferencePath>(pts);

  ActiveMotion m;
  m.frame = frame;
  FrenetTrajectory tr;
  tr.s_poly = solve_quintic({10.0, 10.0, 0.0}, {60.0, 10.0, 0.0}, 5.0);
  tr.d_poly = solve_quintic({0, 0, 0}, {0, 0, 0}, 5.0);
  tr.duration = 5.0;
  tr.t0 = 1.0;
  m.traj = tr;

  CHECK(m.start_time() == 1.0);
  CHECK(m.end_time() == doctest::Approx(6.0));
  CHECK_THROWS_AS(m.state_at(0.5), DomainError);

  FrenetState f = m.state_at(3.0);
  CHECK(f.s == doctest::Approx(30.0));
  CHECK(f.s_dot == doctest::Approx(10.0));

  // Past the trajectory end the terminal speed carries the state forward.
  f = m.state_at(8.0);
  CHECK(f.s == doctest::Approx(60.0 + 2.0 * 10.0));
  CHECK(f.s_dot == doctest::Approx(10.0));
  CHECK(f.s_ddot == 0.0);

  // 80 m is within the 100 m frame; 120 m extends along the end heading.
  CartesianState c = m.cartesian_at(8.0);
  CHECK(c.x == doctest::Approx(80.0).epsilon(1e-6));
  c = m.cartesian_at(12.0);
  CHECK(c.x == doctest::Approx(120.0).epsilon(1e-6));
  CHECK(c.y == doctest::Approx(0.0));

  ActiveMotion stop;
  stop.frame = frame;
  stop.stop = StopProfile{0.0, 10.0, 5.0, 0.0, 2.5};
  CHECK(stop.end_time() > 1e17);  // fallback stops never expire
  CHECK(stop.state_at(100.0).s == doctest::Approx(15.0));
}

TEST_CASE("a cruising vehicle advances at its target speed tick by tick") {
  TreeLibrary lib = link_library(parse_tree_file(SDVSIM_FIXTURE_DIR "/trees/drive.bt"));
  Simulation sim(Map::load(kMapFile), lockstep_clock(), 7);
  const int id = sim.add_sdv("car", &lib.tree("drive"), moving(0, 0, 14.0), {{700, 0}});

  EndConditions end;
  end.timeout = 5.0;
  const SimulationResult r = sim.run(end);

  CHECK(r.end_reason == "timeout");
  CHECK(r.ticks == 150);  // 5 s of 1/30 s ticks
  CHECK(r.plan_cycles == 15);

  const std::vector<TraceRow> rows = rows_of(r, id);
  REQUIRE(rows.size() == 151);  // initial state + one row per tick
  const double dt = sim.clock().tick_dt;
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].sim_time == doctest::Approx(i * dt));
    CHECK(rows[i].v > 12.0);
    CHECK(rows[i].v < 16.0);
    // No teleports: consecutive samples move at most v_max * dt.
    CHECK(std::fabs(rows[i].x - rows[i - 1].x) < 16.0 * dt + 1e-6);
    CHECK(rows[i].s >= rows[i - 1].s - 1e-9);
  }
  // Steady cruise at the 14 m/s band center covers ~70 m in 5 s.
  CHECK(rows.back().x == doctest::Approx(70.0).epsilon(0.02));
  CHECK(std::fabs(rows.back().y) < 0.1);

  bool announced = false;
  for (const SimEvent& e : r.events) {
    CHECK(e.kind != "diagnostic");
    if (e.kind == "maneuver") {
      announced = true;
      CHECK(e.detail == "vehicle=car maneuver=velocity_keeping node=0");
    }
  }
  CHECK(announced);
}

TEST_CASE("a tree without a decision engages the braking fallback") {
  TreeLibrary lib = link_library(parse_trees(
      "btree mute:\n"
      "  sequence:\n"
      "    condition sim_time_elapsed(t=100000)\n"
      "    maneuver velocity_keeping(target_speed=10)\n"));
  Simulation sim(Map::load(kMapFile), lockstep_clock(), 3);
  const int id = sim.add_sdv("car", &lib.tree("mute"), moving(0, 0, 10.0), {{700, 0}});

  EndConditions end;
  end.timeout = 6.0;
  const SimulationResult r = sim.run(end);

  bool fallback_logged = false;
  for (const SimEvent& e : r.events) {
    if (e.kind == "diagnostic" && e.detail.find("fallback=stop") != std::string::npos &&
        e.detail.find("no decision from behavior tree") != std::string::npos) {
      fallback_logged = true;
    }
  }
  CHECK(fallback_logged);

  // Constant 2.5 m/s^2 braking from 10 m/s stops after exactly 20 m.
  const std::vector<TraceRow> rows = rows_of(r, id);
  REQUIRE(!rows.empty());
  CHECK(rows.back().x == doctest::Approx(20.0).epsilon(0.01));
  CHECK(rows.back().v == doctest::Approx(0.0));
  for (size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].v <= rows[i - 1].v + 1e-6);
}

TEST_CASE("head-on scripted traffic raises one collision event and can end the run") {
  Simulation sim(Map::load(kMapFile), lockstep_clock(), 1);
  sim.add_scripted("east", ActorType::PDT, {{0, 0}, {100, 0}}, SpeedProfile::constant(10.0));
  sim.add_scripted("west", ActorType::PDT, {{60, 0}, {-40, 0}}, SpeedProfile::constant(10.0));

  EndConditions end;
  end.timeout = 10.0;
  end.on_collision = true;
  const SimulationResult r = sim.run(end);

  CHECK(r.collision);
  CHECK(r.end_reason == "collision");
  int collision_events = 0;
  for (const SimEvent& e : r.events) {
    if (e.kind != "collision") continue;
    ++collision_events;
    CHECK(e.detail == "a=east b=west relative_speed=20.000000");
    // Closing 20 m/s from 60 m apart: contact just inside 3 s.
    CHECK(e.sim_time > 2.0);
    CHECK(e.sim_time < 3.0);
  }
  CHECK(collision_events == 1);
}

TEST_CASE("trigger-style hooks can activate vehicles and switch profiles") {
  Simulation sim(Map::load(kMapFile), lockstep_clock(), 1);
  const int runner =
      sim.add_scripted("runner", ActorType::PDT, {{0, 0}, {400, 0}}, SpeedProfile::constant(10.0));
  const int late = sim.add_scripted("late", ActorType::PDT, {{0, 3.5}, {400, 3.5}},
                                    SpeedProfile::constant(5.0), /*active_now=*/false);

  sim.pre_tick_hook = [&](Simulation& s) {
    if (s.sim_time() >= 1.0) s.activate(late);
    if (s.sim_time() >= 2.0 && s.find_vehicle("runner")->script.profile.points[0].second > 0.0)
      s.switch_profile(runner, SpeedProfile::constant(0.0));
    if (s.sim_time() >= 4.0) s.request_end("scripted_end");
  };

  EndConditions end;
  end.timeout = 30.0;
  const SimulationResult r = sim.run(end);
  CHECK(r.end_reason == "scripted_end");
  CHECK(sim.sim_time() == doctest::Approx(4.0).epsilon(0.01));

  // The runner froze where the zero profile caught it.
  const std::vector<TraceRow> runner_rows = rows_of(r, runner);
  CHECK(runner_rows.back().x == doctest::Approx(20.0).epsilon(0.01));

  // The late starter has no rows before activation and moves afterwards.
  const std::vector<TraceRow> late_rows = rows_of(r, late);
  REQUIRE(!late_rows.empty());
  CHECK(late_rows.front().sim_time >= 1.0 - 1e-9);
  CHECK(late_rows.back().x == doctest::Approx(5.0 * (4.0 - 1.0)).epsilon(0.02));
}

TEST_CASE("signal schedules step through phases and default to stop") {
  Simulation sim(Map::load(kMapFile), lockstep_clock(), 1);
  sim.add_signal("light", {{0.0, "red"}, {2.0, "green"}});
  CHECK(sim.signal_phase("light") == "red");
  CHECK(sim.signal_phase("unknown") == "stop");

  EndConditions end;
  end.timeout = 3.0;
  sim.run(end);
  CHECK(sim.signal_phase("light") == "green");
}

TEST_CASE("world snapshots carry neighbors, predictions, and route context") {
  TreeLibrary lib = link_library(parse_tree_file(SDVSIM_FIXTURE_DIR "/trees/drive.bt"));
  Simulation sim(Map::load(kMapFile), lockstep_clock(), 5);
  sim.add_sdv("me", &lib.tree("drive"), moving(0, 0, 10.0), {{700, 0}});
  sim.add_scripted("lead", ActorType::PDT, {{30, 0}, {500, 0}}, SpeedProfile::constant(8.0));
  sim.add_scripted("far", ActorType::PDT, {{300, 0}, {500, 0}}, SpeedProfile::constant(8.0));

  const VehicleRuntime& me = sim.vehicles()[0];
  const ReferencePath frame = fit_reference_path(me.route, me.state.position(), 300.0);
  const TrafficSnapshot snap = sim.build_snapshot(me, 0.0, frame);

  CHECK(snap.timestamp == 0.0);
  CHECK(snap.self.s == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(snap.self.s_dot == doctest::Approx(10.0));
  CHECK(snap.lane_width == doctest::Approx(3.5));
  CHECK(snap.speed_limit == doctest::Approx(16.7));
  CHECK(snap.remaining_route_length == doctest::Approx(me.route.length()).epsilon(1e-6));
  CHECK_FALSE(snap.stop_line_s.has_value());

  // 300 m away is beyond the 120 m actor radius; only the lead is visible.
  REQUIRE(snap.actors.size() == 1);
  const ActorView& lead = snap.actors[0];
  CHECK(lead.name == "lead");
  CHECK(lead.state.s == doctest::Approx(30.0).epsilon(1e-4));
  CHECK(lead.state.s_dot == doctest::Approx(8.0).epsilon(1e-6));
  CHECK(lead.relative_lane == 0);
  REQUIRE(lead.prediction.size() >= 2);
  // Prediction samples advance by speed * prediction_dt along the lane.
  CHECK(lead.prediction[1].s - lead.prediction[0].s ==
        doctest::Approx(8.0 * snap.prediction_dt).epsilon(1e-4));

  const ActorView* found = snap.find_lead();
  REQUIRE(found);
  CHECK(found->name == "lead");
  CHECK(snap.front_gap(*found) == doctest::Approx(30.0 - 4.8).epsilon(1e-4));
}

TEST_CASE("planner thread count does not change the trace") {
  TreeLibrary lib = link_library(parse_tree_file(SDVSIM_FIXTURE_DIR "/trees/follow.bt"));
  auto run_with_threads = [&](int threads) {
    Simulation sim(Map::load(kMapFile), lockstep_clock(), 42);
    sim.planner_threads = threads;
    sim.add_sdv("a", &lib.tree("follow"), moving(0, 0, 12.0), {{700, 0}});
    sim.add_sdv("b", &lib.tree("follow"), moving(40, 0, 10.0), {{700, 0}});
    sim.add_sdv("c", &lib.tree("follow"), moving(0, 3.5, 12.0), {{700, 3.5}});
    EndConditions end;
    end.timeout = 4.0;
    return sim.run(end);
  };

  const SimulationResult serial = run_with_threads(1);
  const SimulationResult parallel = run_with_threads(4);
  REQUIRE(serial.trace.size() == parallel.trace.size());
  for (size_t i = 0; i < serial.trace.size(); ++i) {
    const TraceRow& a = serial.trace[i];
    const TraceRow& b = parallel.trace[i];
    CHECK(a.sim_time == b.sim_time);
    CHECK(a.vehicle_id == b.vehicle_id);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.v == b.v);
    CHECK(a.theta == b.theta);
    CHECK(a.s == b.s);
    CHECK(a.d == b.d);
  }
  REQUIRE(serial.events.size() == parallel.events.size());
  for (size_t i = 0; i < serial.events.size(); ++i) {
    CHECK(serial.events[i].kind == parallel.events[i].kind);
    CHECK(serial.events[i].detail == parallel.events[i].detail);
  }
}

TEST_CASE("following keeps a stable gap behind a slower lead") {
  TreeLibrary lib = link_library(parse_tree_file(SDVSIM_FIXTURE_DIR "/trees/follow.bt"));
  Simulation sim(Map::load(kMapFile), lockstep_clock(), 9);
  const int id = sim.add_sdv("chaser", &lib.tree("follow"), moving(0, 0, 12.0), {{700, 0}});
  sim.add_scripted("pace", ActorType::PDT, {{45, 0}, {790, 0}}, SpeedProfile::constant(9.0));

  EndConditions end;
  end.timeout = 25.0;
  const SimulationResult r = sim.run(end);
  CHECK_FALSE(r.collision);

  // By the end of the run the chaser matches the lead speed and sits close
  // to the configured 2 s time gap (bumper gap = 2 s * 9 m/s).
  const std::vector<TraceRow> rows = rows_of(r, id);
  const TraceRow& last = rows.back();
  CHECK(last.v == doctest::Approx(9.0).epsilon(0.05));
  const double lead_x = 45.0 + 9.0 * last.sim_time;
  const double bumper_gap = lead_x - last.x - 4.8;
  CHECK(bumper_gap == doctest::Approx(2.0 * 9.0).epsilon(0.15));
}

TEST_CASE("external vehicles move only when told to") {
  Simulation sim(Map::load(kMapFile), lockstep_clock(), 1);
  const int id = sim.add_external("remote", moving(5, 0, 0.0));
  sim.pre_tick_hook = [&](Simulation& s) {
    s.set_external_state(id, moving(5.0 + 2.0 * s.sim_time(), 0, 2.0));
  };
  EndConditions end;
  end.timeout = 2.0;
  const SimulationResult r = sim.run(end);
  const std::vector<TraceRow> rows = rows_of(r, id);
  REQUIRE(!rows.empty());
  // Each row reflects the state injected just before its tick.
  CHECK(rows.back().x ==
        doctest::Approx(5.0 + 2.0 * (rows.back().sim_time - sim.clock().tick_dt)));
  CHECK(rows.back().v == doctest::Approx(2.0));
}

TEST_CASE("rate compliance summarizes timing logs") {
  TimingLog lockstep;
  lockstep.realtime = false;
  lockstep.tick_durations = {1.0, 1.0};
  CHECK_FALSE(compute_rate_compliance(lockstep, 0.1, 0.5).applicable);

  TimingLog log;
  log.realtime = true;
  log.tick_durations = {0.01, 0.02, 0.5};
  log.plan_durations = {0.1, 0.4};
  const RateCompliance rc = compute_rate_compliance(log, 0.1, 1.0 / 3.0);
  CHECK(rc.applicable);
  CHECK(rc.trc_pct == doctest::Approx(200.0 / 3.0));
  CHECK(rc.max_tick_s == doctest::Approx(0.5));
  CHECK(rc.tprc_pct == doctest::Approx(50.0));
  CHECK(rc.max_plan_s == doctest::Approx(0.4));

  TimingLog empty;
  empty.realtime = true;
  const RateCompliance all_ok = compute_rate_compliance(empty, 0.1, 0.5);
  CHECK(all_ok.trc_pct == 100.0);
  CHECK(all_ok.tprc_pct == 100.0);
}
