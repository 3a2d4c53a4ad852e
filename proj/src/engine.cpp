#include "sdv/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <sstream>
#include <thread>

namespace sdv {
namespace {

constexpr double kPathWindow = 300.0;   // m of route fitted around the vehicle
constexpr double kActorRadius = 120.0;  // actors beyond this are not snapshotted
constexpr double kActorLateralCut = 30.0;
constexpr double kFallbackDecel = 2.5;  // comfort limit for the stop fallback
constexpr double kDiskScale = 1.2;

double now_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

CartesianState extrapolate(const CartesianState& c, double dt) {
  CartesianState out = c;
  out.x += c.x_dot * dt;
  out.y += c.y_dot * dt;
  out.x_ddot = 0.0;
  out.y_ddot = 0.0;
  return out;
}

void footprint_disks(const CartesianState& c, double length, double width, Vec2 out[3],
                     double* radius) {
  *radius = width / 2.0 * kDiskScale;
  const double step = length / 3.0;
  const Vec2 dir{std::cos(c.theta), std::sin(c.theta)};
  for (int i = -1; i <= 1; ++i) out[i + 1] = c.position() + i * step * dir;
}

}  // namespace

int SimClock::ticks_per_plan() const {
  const double ratio = plan_dt / tick_dt;
  const int n = static_cast<int>(std::lround(ratio));
  if (n < 1 || std::fabs(ratio - n) > 1e-6)
    throw DomainError("plan_dt must be a positive integer multiple of tick_dt");
  return n;
}

double SpeedProfile::speed_at(double t) const {
  if (points.empty()) return 0.0;
  if (t <= points.front().first) return points.front().second;
  if (t >= points.back().first) return points.back().second;
  for (size_t i = 1; i < points.size(); ++i) {
    if (t <= points[i].first) {
      const auto& [t0, v0] = points[i - 1];
      const auto& [t1, v1] = points[i];
      const double u = (t - t0) / (t1 - t0);
      return v0 + u * (v1 - v0);
    }
  }
  return points.back().second;
}

double SpeedProfile::accel_at(double t) const {
  if (points.size() < 2) return 0.0;
  if (t <= points.front().first || t >= points.back().first) return 0.0;
  for (size_t i = 1; i < points.size(); ++i) {
    if (t <= points[i].first) {
      const auto& [t0, v0] = points[i - 1];
      const auto& [t1, v1] = points[i];
      return (v1 - v0) / (t1 - t0);
    }
  }
  return 0.0;
}

double SpeedProfile::integrate(double t0, double t1) const {
  if (points.empty()) return 0.0;
  if (t1 < t0) return -integrate(t1, t0);
  // Knots at every breakpoint make the trapezoid rule exact.
  std::vector<double> knots{t0};
  for (const auto& [t, v] : points) {
    (void)v;
    if (t > t0 && t < t1) knots.push_back(t);
  }
  knots.push_back(t1);
  double total = 0.0;
  for (size_t i = 1; i < knots.size(); ++i) {
    total += 0.5 * (speed_at(knots[i - 1]) + speed_at(knots[i])) * (knots[i] - knots[i - 1]);
  }
  return total;
}

void ScriptedVehicle::activate(double t) {
  profile_zero = t;
  last_update = t;
  traveled = 0.0;
}

void ScriptedVehicle::advance(double t) {
  traveled += profile.integrate(last_update - profile_zero, t - profile_zero);
  last_update = t;
}

double ScriptedVehicle::distance_at(double t) const {
  return traveled + profile.integrate(last_update - profile_zero, t - profile_zero);
}

double ScriptedVehicle::total_length() const {
  double len = 0.0;
  for (size_t i = 1; i < polyline.size(); ++i) len += (polyline[i] - polyline[i - 1]).norm();
  return len;
}

CartesianState ScriptedVehicle::state_at(double t) const {
  CartesianState c;
  if (polyline.empty()) return c;
  double dist = distance_at(t);
  double v = profile.speed_at(t - profile_zero);
  double a = profile.accel_at(t - profile_zero);
  const double total = total_length();
  if (dist >= total) {  // parked at the end of the polyline
    dist = total;
    v = 0.0;
    a = 0.0;
  }
  if (dist < 0.0) dist = 0.0;

  double run = 0.0;
  Vec2 pos = polyline.front();
  double theta = 0.0;
  for (size_t i = 1; i < polyline.size(); ++i) {
    const Vec2 seg = polyline[i] - polyline[i - 1];
    const double len = seg.norm();
    if (len < 1e-12) continue;
    theta = std::atan2(seg.y(), seg.x());
    if (run + len >= dist) {
      pos = polyline[i - 1] + seg * ((dist - run) / len);
      break;
    }
    run += len;
    pos = polyline[i];
  }
  c.x = pos.x();
  c.y = pos.y();
  c.theta = theta;
  c.x_dot = v * std::cos(theta);
  c.y_dot = v * std::sin(theta);
  c.x_ddot = a * std::cos(theta);
  c.y_ddot = a * std::sin(theta);
  return c;
}

void ScriptedVehicle::switch_profile(const SpeedProfile& next, double t) {
  advance(t);
  profile = next;
  profile_zero = t;
}

FrenetState StopProfile::state_at(double t) const {
  const double dt = std::max(0.0, t - t0);
  const double speed = std::fabs(v0);
  const double sign = v0 < 0.0 ? -1.0 : 1.0;
  const double t_stop = decel > 0.0 ? speed / decel : 0.0;
  FrenetState f;
  f.d = d0;
  if (dt < t_stop) {
    f.s = s0 + sign * (speed * dt - 0.5 * decel * dt * dt);
    f.s_dot = sign * (speed - decel * dt);
    f.s_ddot = -sign * decel;
  } else {
    f.s = s0 + sign * (0.5 * speed * speed / std::max(decel, 1e-9));
    f.s_dot = 0.0;
    f.s_ddot = 0.0;
  }
  return f;
}

double ActiveMotion::start_time() const {
  if (traj) return traj->t0;
  if (stop) return stop->t0;
  return 0.0;
}

double ActiveMotion::end_time() const {
  if (traj) return traj->end_time();
  return 1e18;
}

FrenetState ActiveMotion::state_at(double t) const {
  if (!valid()) throw DomainError("no active motion");
  if (t < start_time() - 1e-6)
    throw DomainError("motion evaluated before its start time");
  if (stop) return stop->state_at(t);
  const double te = std::min(t, traj->end_time());
  FrenetState f = eval_trajectory(*traj, te);
  if (t > te) {  // hold terminal velocity until the next plan lands
    f.s += f.s_dot * (t - te);
    f.d += f.d_dot * (t - te);
    f.s_ddot = 0.0;
    f.d_ddot = 0.0;
  }
  return f;
}

CartesianState ActiveMotion::cartesian_at(double t) const {
  FrenetState f = state_at(t);
  const double s_lo = 0.0;  // trajectory s is local to the motion's own frame
  const double s_hi = frame->length();
  double over = 0.0;
  if (f.s > s_hi) {
    over = f.s - s_hi;
    f.s = s_hi;
  } else if (f.s < s_lo) {
    over = f.s - s_lo;
    f.s = s_lo;
  }
  CartesianState c = to_cartesian(f, *frame);
  if (over != 0.0) {  // continue straight along the frame-end heading
    c.x += over * std::cos(c.theta);
    c.y += over * std::sin(c.theta);
  }
  return c;
}

Simulation::Simulation(Map map, SimClock clock, std::uint64_t seed)
    : map_(std::move(map)), clock_(clock), seed_(seed) {
  clock_.ticks_per_plan();  // validate early
  clock_.sim_time = 0.0;
  result_.timing.realtime = clock_.realtime;
}

int Simulation::add_sdv(const std::string& name, const BTNode* tree,
                        const CartesianState& start, const std::vector<Vec2>& route_points,
                        ActorType type) {
  if (!tree) throw ScenarioError("vehicle '" + name + "': planning vehicle needs a tree");
  VehicleRuntime v;
  v.id = static_cast<int>(vehicles_.size()) + 1;
  v.name = name;
  v.kind = VehicleKind::SDV;
  v.actor_type = type;
  v.tree = tree;
  v.state = start;
  v.rng_seed = splitmix64(seed_ ^ static_cast<std::uint64_t>(v.id));
  std::vector<Vec2> pts;
  pts.push_back(start.position());
  pts.insert(pts.end(), route_points.begin(), route_points.end());
  v.route = build_route(map_, pts);
  const ReferencePath fitted = fit_reference_path(v.route, start.position(), kPathWindow);
  const FrenetState f = to_frenet(start, fitted);
  v.last_s = f.s;
  v.last_d = f.d;
  vehicles_.push_back(std::move(v));
  return vehicles_.back().id;
}

int Simulation::add_scripted(const std::string& name, ActorType type,
                             const std::vector<Vec2>& polyline, const SpeedProfile& profile,
                             bool active_now, double length, double width) {
  if (polyline.size() < 2)
    throw ScenarioError("vehicle '" + name + "': scripted polyline needs at least 2 points");
  VehicleRuntime v;
  v.id = static_cast<int>(vehicles_.size()) + 1;
  v.name = name;
  v.kind = type == ActorType::Ego ? VehicleKind::EgoStub : VehicleKind::PDT;
  v.actor_type = type;
  v.length = length;
  v.width = width;
  v.active = active_now;
  v.script.polyline = polyline;
  v.script.profile = profile;
  v.script.activate(clock_.sim_time);
  v.state = v.script.state_at(clock_.sim_time);
  v.rng_seed = splitmix64(seed_ ^ static_cast<std::uint64_t>(v.id));
  vehicles_.push_back(std::move(v));
  return vehicles_.back().id;
}

int Simulation::add_external(const std::string& name, const CartesianState& start) {
  VehicleRuntime v;
  v.id = static_cast<int>(vehicles_.size()) + 1;
  v.name = name;
  v.kind = VehicleKind::EgoStub;
  v.actor_type = ActorType::Ego;
  v.external = true;
  v.state = start;
  vehicles_.push_back(std::move(v));
  return vehicles_.back().id;
}

VehicleRuntime* Simulation::find_vehicle(const std::string& name) {
  for (auto& v : vehicles_)
    if (v.name == name) return &v;
  return nullptr;
}

const VehicleRuntime* Simulation::find_vehicle(const std::string& name) const {
  for (const auto& v : vehicles_)
    if (v.name == name) return &v;
  return nullptr;
}

void Simulation::activate(int id) {
  for (auto& v : vehicles_) {
    if (v.id != id || v.active) continue;
    v.active = true;
    v.activation_time = clock_.sim_time;
    if (!v.plans()) {
      v.script.activate(clock_.sim_time);
      v.state = v.script.state_at(clock_.sim_time);
    }
  }
}

void Simulation::switch_profile(int id, const SpeedProfile& profile) {
  for (auto& v : vehicles_) {
    if (v.id != id) continue;
    v.script.switch_profile(profile, clock_.sim_time);
  }
}

void Simulation::set_external_state(int id, const CartesianState& state) {
  for (auto& v : vehicles_) {
    if (v.id != id) continue;
    if (!v.trace.empty()) v.last_s += (state.position() - v.state.position()).norm();
    v.state = state;
  }
}

void Simulation::add_signal(const std::string& name,
                            std::vector<std::pair<double, std::string>> schedule) {
  std::sort(schedule.begin(), schedule.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  signals_[name] = std::move(schedule);
}

void Simulation::request_end(const std::string& reason) { end_requested_ = reason; }

void Simulation::log_event(const std::string& kind, const std::string& detail) {
  result_.events.push_back({clock_.sim_time, kind, detail});
}

std::string Simulation::signal_phase(const std::string& name) const {
  auto it = signals_.find(name);
  if (it == signals_.end() || it->second.empty()) return "stop";  // unscheduled = stop sign
  std::string phase = it->second.front().second;
  for (const auto& [t, p] : it->second) {
    if (t <= clock_.sim_time + 1e-9) phase = p;
  }
  return phase;
}

CartesianState Simulation::predict_cartesian(const VehicleRuntime& v, double t) const {
  if (v.frozen) return v.state;
  if (v.external) return extrapolate(v.state, t - clock_.sim_time);
  if (!v.plans()) {
    if (!v.active) return v.state;
    return v.script.state_at(t);
  }
  if (!v.motion.valid()) return extrapolate(v.state, t - clock_.sim_time);
  try {
    return v.motion.cartesian_at(t);
  } catch (const Error&) {
    return extrapolate(v.state, t - clock_.sim_time);
  }
}

TrafficSnapshot Simulation::build_snapshot(const VehicleRuntime& v, double t_predict,
                                           const ReferencePath& frame) const {
  TrafficSnapshot snap;
  snap.timestamp = t_predict;
  const CartesianState own = predict_cartesian(v, t_predict);
  snap.self = to_frenet(own, frame);
  snap.self_length = v.length;
  snap.self_width = v.width;
  snap.path = &frame;
  snap.prediction_dt = clock_.plan_dt;

  const MapMatch match = map_.match(own.position());
  if (match.segment_id >= 0) {
    const LaneSegment& seg = map_.at(match.segment_id);
    snap.lane_width = seg.width;
    snap.speed_limit = seg.speed_limit;
  }
  snap.remaining_route_length =
      std::max(0.0, v.route.length() - (frame.origin_s() + snap.self.s));

  for (int sid : v.route.segment_ids) {
    const LaneSegment& seg = map_.at(sid);
    if (!seg.stop_line) continue;
    try {
      const PathProjection pr = frame.project(*seg.stop_line, kPathWindow);
      if (std::fabs(pr.d) > seg.width) continue;
      if (pr.s < snap.self.s - 2.0) continue;  // already past it
      if (!snap.stop_line_s || pr.s < *snap.stop_line_s) {
        snap.stop_line_s = pr.s;
        snap.stop_line_signal = seg.signal ? signal_phase(*seg.signal) : "stop";
      }
    } catch (const Error&) {
      continue;  // outside the fitted window
    }
  }
  for (const auto& [name, schedule] : signals_) {
    (void)schedule;
    snap.signal_phase[name] = signal_phase(name);
  }

  const int kSteps = static_cast<int>(std::ceil(snap.horizon_max / snap.prediction_dt));
  const int self_lane = static_cast<int>(std::lround(snap.self.d / snap.lane_width));
  for (const auto& u : vehicles_) {
    if (u.id == v.id || !u.active) continue;
    if ((u.state.position() - own.position()).norm() > kActorRadius) continue;
    ActorView a;
    a.id = u.id;
    a.name = u.name;
    a.type = u.actor_type;
    a.length = u.length;
    a.width = u.width;
    a.prediction_dt = snap.prediction_dt;
    for (int k = 0; k <= kSteps; ++k) {
      const CartesianState cu = predict_cartesian(u, t_predict + k * snap.prediction_dt);
      try {
        a.prediction.push_back(to_frenet(cu, frame));
      } catch (const Error&) {
        break;  // prediction leaves this vehicle's frame
      }
    }
    if (a.prediction.empty()) continue;
    a.state = a.prediction.front();
    if (std::fabs(a.state.d) > kActorLateralCut) continue;
    a.relative_lane =
        static_cast<int>(std::lround(a.state.d / snap.lane_width)) - self_lane;
    snap.actors.push_back(std::move(a));
  }
  return snap;
}

struct Simulation::PlanJobResult {
  int id = 0;
  std::optional<ActiveMotion> install;
  Blackboard bb_after;
  bool ticked = false;
  std::optional<Decision> decision;
  int decision_node = -1;
  std::vector<SimEvent> events;
  std::string debug;
  double duration = 0.0;
};

Simulation::PlanJobResult Simulation::plan_vehicle(const VehicleRuntime& v) const {
  const auto t_begin = std::chrono::steady_clock::now();
  PlanJobResult r;
  r.id = v.id;
  r.bb_after = v.bb;
  const double t_install =
      v.motion.valid() ? clock_.sim_time + clock_.plan_dt : clock_.sim_time;

  auto engage_fallback = [&](const std::string& why,
                             const std::shared_ptr<const ReferencePath>& frame,
                             const FrenetState& f) {
    ActiveMotion m;
    m.frame = frame;
    m.stop = StopProfile{t_install, f.s, f.s_dot, f.d, kFallbackDecel};
    r.install = m;
    r.events.push_back(
        {clock_.sim_time, "diagnostic", "vehicle=" + v.name + " fallback=stop reason=" + why});
  };

  std::shared_ptr<const ReferencePath> frame;
  FrenetState self_f;
  try {
    const CartesianState own = predict_cartesian(v, t_install);
    frame = std::make_shared<ReferencePath>(
        fit_reference_path(v.route, own.position(), kPathWindow));
    const TrafficSnapshot snap = build_snapshot(v, t_install, *frame);
    self_f = snap.self;

    const TickResult tr = tick(*v.tree, snap, &r.bb_after);
    r.ticked = true;
    if (tr.decision) {
      r.decision = tr.decision;
      r.decision_node = tr.decision->node_id;
    }

    const bool in_fallback = v.motion.valid() && v.motion.stop.has_value();
    const bool expiring =
        !v.motion.valid() || (v.motion.end_time() - t_install) < 2.0 * clock_.plan_dt;

    // Receding horizon: every cycle with a decision replans from the state
    // predicted at the install instant, so the world is never more than one
    // plan period stale.
    if (r.decision) {
      PlanOutcome out = plan(*r.decision, snap);
      if (debug_candidates) {
        std::ostringstream os;
        write_candidate_dump(os, clock_.sim_time, v.id, r.decision->maneuver, out.ranking);
        r.debug = os.str();
      }
      if (out.trajectory) {
        ActiveMotion m;
        m.frame = frame;
        m.traj = out.trajectory;
        r.install = m;
      } else {
        engage_fallback("no feasible trajectory maneuver=" + r.decision->maneuver, frame,
                        self_f);
      }
    } else if (!r.decision && (expiring || in_fallback)) {
      engage_fallback("no decision from behavior tree", frame, self_f);
    }
  } catch (const Error& e) {
    if (frame) {
      engage_fallback(std::string("planning error: ") + e.what(), frame, self_f);
    } else if (v.motion.valid()) {
      const FrenetState f = v.motion.state_at(t_install);
      engage_fallback(std::string("planning error: ") + e.what(), v.motion.frame, f);
    } else {
      r.events.push_back({clock_.sim_time, "diagnostic",
                          "vehicle=" + v.name + " planning failed: " + e.what()});
    }
  }
  r.duration = now_seconds(t_begin);
  return r;
}

void Simulation::plan_cycle() {
  std::vector<size_t> jobs;
  for (size_t i = 0; i < vehicles_.size(); ++i) {
    const VehicleRuntime& v = vehicles_[i];
    if (v.active && !v.frozen && v.plans()) jobs.push_back(i);
  }

  std::vector<PlanJobResult> results(jobs.size());
  if (planner_threads <= 1 || jobs.size() <= 1) {
    for (size_t j = 0; j < jobs.size(); ++j) results[j] = plan_vehicle(vehicles_[jobs[j]]);
  } else {
    std::vector<std::future<PlanJobResult>> futures;
    futures.reserve(jobs.size());
    for (size_t j = 0; j < jobs.size(); ++j) {
      futures.push_back(std::async(std::launch::async,
                                   [this, &v = vehicles_[jobs[j]]] { return plan_vehicle(v); }));
    }
    for (size_t j = 0; j < jobs.size(); ++j) results[j] = futures[j].get();
  }

  // Results land in vehicle-id order regardless of thread scheduling.
  for (size_t j = 0; j < jobs.size(); ++j) {
    VehicleRuntime& v = vehicles_[jobs[j]];
    PlanJobResult& r = results[j];
    if (r.ticked) {
      v.bb = r.bb_after;
      v.executed_nodes = v.bb.visited;
    }
    if (r.decision_node != v.last_decision_node) {
      v.last_decision_node = r.decision_node;
      if (r.decision) {
        v.last_maneuver = r.decision->maneuver;
        result_.events.push_back({clock_.sim_time, "maneuver",
                                  "vehicle=" + v.name + " maneuver=" + r.decision->maneuver +
                                      " node=" + std::to_string(r.decision_node)});
      } else {
        v.last_maneuver.clear();
      }
    }
    if (r.install) v.pending = std::move(r.install);
    for (auto& e : r.events) result_.events.push_back(std::move(e));
    debug_dump_ += r.debug;
    result_.timing.plan_durations.push_back(r.duration);
  }
  ++result_.plan_cycles;
}

void Simulation::append_row(VehicleRuntime& v) {
  TraceRow r;
  r.sim_time = clock_.sim_time;
  r.vehicle_id = v.id;
  r.x = v.state.x;
  r.y = v.state.y;
  const double speed = v.state.speed();
  r.v = speed;
  r.a = speed > 1e-6
            ? (v.state.x_ddot * v.state.x_dot + v.state.y_ddot * v.state.y_dot) / speed
            : 0.0;
  r.theta = v.state.theta;
  r.s = v.last_s;
  r.d = v.last_d;
  result_.trace.push_back(r);
  v.trace.emplace_back(clock_.sim_time, v.state);
}

void Simulation::detect_collisions() {
  for (size_t i = 0; i < vehicles_.size(); ++i) {
    const VehicleRuntime& a = vehicles_[i];
    if (!a.active) continue;
    Vec2 da[3];
    double ra = 0.0;
    footprint_disks(a.state, a.length, a.width, da, &ra);
    for (size_t j = i + 1; j < vehicles_.size(); ++j) {
      const VehicleRuntime& b = vehicles_[j];
      if (!b.active) continue;
      Vec2 db[3];
      double rb = 0.0;
      footprint_disks(b.state, b.length, b.width, db, &rb);
      bool hit = false;
      for (int p = 0; p < 3 && !hit; ++p)
        for (int q = 0; q < 3 && !hit; ++q)
          if ((da[p] - db[q]).norm() < ra + rb) hit = true;
      const std::pair<int, int> key{a.id, b.id};
      if (hit && !contacts_.count(key)) {
        contacts_.insert(key);
        const double rel = std::hypot(a.state.x_dot - b.state.x_dot,
                                      a.state.y_dot - b.state.y_dot);
        result_.events.push_back({clock_.sim_time, "collision",
                                  "a=" + a.name + " b=" + b.name +
                                      " relative_speed=" + format_fixed(rel)});
        result_.collision = true;
      } else if (!hit) {
        contacts_.erase(key);
      }
    }
  }
}

void Simulation::tick_all() {
  ++tick_index_;
  clock_.sim_time = static_cast<double>(tick_index_) * clock_.tick_dt;
  const double t = clock_.sim_time;

  for (auto& v : vehicles_) {
    if (!v.active) continue;
    if (v.pending && v.pending->start_time() <= t + 1e-9) {
      v.motion = *v.pending;
      v.pending.reset();
    }
    if (v.frozen || v.external) {
      append_row(v);
      continue;
    }
    if (!v.plans()) {
      v.script.advance(t);
      v.state = v.script.state_at(t);
      v.last_s = std::min(v.script.traveled, v.script.total_length());
      v.last_d = 0.0;
      append_row(v);
      continue;
    }
    if (!v.motion.valid()) {
      v.frozen = true;
      result_.events.push_back(
          {t, "diagnostic", "vehicle=" + v.name + " frozen: no active trajectory"});
      append_row(v);
      continue;
    }
    try {
      const FrenetState f = v.motion.state_at(t);
      v.state = v.motion.cartesian_at(t);
      v.last_s = f.s;
      v.last_d = f.d;
    } catch (const Error& e) {
      v.frozen = true;
      result_.events.push_back(
          {t, "diagnostic", "vehicle=" + v.name + " frozen: " + e.what()});
    }
    append_row(v);
  }
  detect_collisions();
  ++result_.ticks;
}

void Simulation::step() {
  if (pre_tick_hook) pre_tick_hook(*this);
  if (tick_index_ % clock_.ticks_per_plan() == 0) plan_cycle();
  const auto t0 = std::chrono::steady_clock::now();
  tick_all();
  result_.timing.tick_durations.push_back(now_seconds(t0));
}

double Simulation::goal_distance(const VehicleRuntime& v) const {
  if (!v.plans()) return 1e18;
  return (v.state.position() - v.route.goal).norm();
}

void Simulation::record_initial_state() {
  for (auto& v : vehicles_)
    if (v.active) append_row(v);
}

std::optional<std::string> Simulation::check_end(const EndConditions& end) const {
  if (end_requested_) return *end_requested_;
  if (end.on_collision && result_.collision) return "collision";
  if (end.goal_vehicle) {
    const VehicleRuntime* v = find_vehicle(*end.goal_vehicle);
    if (v && goal_distance(*v) <= end.goal_margin) return "goal";
  }
  if (clock_.sim_time >= end.timeout - 1e-9) return "timeout";
  return std::nullopt;
}

void Simulation::finish(const std::string& reason) {
  result_.end_reason = reason;
  result_.events.push_back({clock_.sim_time, "end", "reason=" + reason});
}

SimulationResult Simulation::run(const EndConditions& end) {
  record_initial_state();

  const auto wall_start = std::chrono::steady_clock::now();
  std::string reason;
  while (reason.empty()) {
    step();
    if (auto r = check_end(end)) reason = *r;
    if (clock_.realtime && reason.empty()) {
      const auto deadline =
          wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                           std::chrono::duration<double>(tick_index_ * clock_.tick_dt));
      std::this_thread::sleep_until(deadline);
    }
  }
  finish(reason);
  return result_;
}

}  // namespace sdv
