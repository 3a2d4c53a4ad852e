#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "sdv/map.hpp"

using namespace sdv;

#ifndef SDVSIM_FIXTURE_DIR
#error "fixture directory must be defined by the build"
#endif

namespace {

const std::string kFixtures = SDVSIM_FIXTURE_DIR;

LaneSegment lane(int id, std::vector<Vec2> pts, double width = 3.5, double limit = 13.9) {
  LaneSegment s;
  s.id = id;
  s.width = width;
  s.speed_limit = limit;
  s.centerline = std::move(pts);
  return s;
}

// Breadth-first search over the same edge set the router uses; returns the
// hop count from `from` to `to`, or -1 when unreachable. Used as an
// independent oracle for chain lengths.
int bfs_hops(const Map& map, int from, int to) {
  std::map<int, int> dist;
  std::deque<int> q;
  dist[from] = 0;
  q.push_back(from);
  while (!q.empty()) {
    const int cur = q.front();
    q.pop_front();
    if (cur == to) return dist[cur];
    for (int nxt : map.adjacent(cur)) {
      if (!dist.count(nxt)) {
        dist[nxt] = dist[cur] + 1;
        q.push_back(nxt);
      }
    }
  }
  return -1;
}

}  // namespace

TEST_CASE("two-lane fixture loads with its connectivity") {
  const Map map = Map::load(kFixtures + "/maps/straight_two_lane.yaml");
  CHECK(map.segments().size() == 2);
  CHECK(map.has_segment(1));
  CHECK(map.has_segment(2));
  CHECK_FALSE(map.has_segment(3));
  CHECK_THROWS_AS(map.at(99), MapError);

  const LaneSegment& right = map.at(1);
  CHECK(right.width == doctest::Approx(3.5));
  CHECK(right.left == 2);
  CHECK_FALSE(right.right.has_value());
  CHECK(right.length() == doctest::Approx(800.0).epsilon(1e-9));

  const LaneSegment& left = map.at(2);
  CHECK(left.right == 1);
}

TEST_CASE("schema violations name the offending segment") {
  std::vector<LaneSegment> segs;
  segs.push_back(lane(1, {Vec2(0, 0), Vec2(10, 0)}));
  segs.push_back(lane(1, {Vec2(0, 5), Vec2(10, 5)}));
  CHECK_THROWS_AS(Map::from_segments(segs), MapError);  // duplicate id

  std::vector<LaneSegment> dangling;
  dangling.push_back(lane(1, {Vec2(0, 0), Vec2(10, 0)}));
  dangling.back().successors = {7};
  CHECK_THROWS_AS(Map::from_segments(dangling), MapError);

  std::vector<LaneSegment> short_line;
  short_line.push_back(lane(1, {Vec2(0, 0)}));
  CHECK_THROWS_AS(Map::from_segments(short_line), MapError);
}

TEST_CASE("match finds the nearest lane with signed offset") {
  const Map map = Map::load(kFixtures + "/maps/straight_two_lane.yaml");
  // Between the lanes, slightly closer to lane 1 (y = 0).
  const MapMatch m1 = map.match(Vec2(100.0, 1.0));
  CHECK(m1.segment_id == 1);
  CHECK(m1.s == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(m1.d == doctest::Approx(1.0).epsilon(1e-9));  // left of travel
  CHECK(m1.distance() == doctest::Approx(1.0).epsilon(1e-9));

  const MapMatch m2 = map.match(Vec2(50.0, 3.0));
  CHECK(m2.segment_id == 2);  // closer to the left lane at y = 3.5
  CHECK(m2.d == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("relative lane walks the neighbor chain") {
  const Map map = Map::load(kFixtures + "/maps/straight_two_lane.yaml");
  CHECK(map.relative_lane(1, 0) == 1);
  CHECK(map.relative_lane(1, 1) == 2);
  CHECK(map.relative_lane(2, -1) == 1);
  CHECK_FALSE(map.relative_lane(1, -1).has_value());
  CHECK_FALSE(map.relative_lane(1, 2).has_value());
}

TEST_CASE("roundabout routing picks the shortest entry-to-exit chain") {
  const Map map = Map::load(kFixtures + "/maps/roundabout.yaml");
  // Entry 1 approaches from the south (enters ring arc 10); exit 22 leaves
  // to the west after arcs 10 -> 11 -> 12.
  const RoutePlan plan = build_route(map, {Vec2(0.0, -40.0), Vec2(-40.0, 0.0)});
  CHECK(plan.segment_ids == std::vector<int>{1, 10, 11, 12, 22});

  // Independent hop-count oracle over the routing graph.
  const int hops = bfs_hops(map, 1, 22);
  CHECK(hops == static_cast<int>(plan.segment_ids.size()) - 1);
}

TEST_CASE("route length agrees with its polyline") {
  const Map map = Map::load(kFixtures + "/maps/straight_two_lane.yaml");
  const RoutePlan plan = build_route(map, {Vec2(0, 0), Vec2(300, 0)});
  double poly = 0.0;
  for (size_t i = 1; i < plan.global_path.size(); ++i) {
    poly += (plan.global_path[i] - plan.global_path[i - 1]).norm();
  }
  CHECK(plan.length() == doctest::Approx(poly).epsilon(1e-9));
  CHECK(plan.goal.x() == doctest::Approx(300.0).epsilon(1e-6));
}

TEST_CASE("points off the network are rejected with the snap tolerance") {
  const Map map = Map::load(kFixtures + "/maps/straight_two_lane.yaml");
  // 3.5 m snap tolerance: y = 3.4 off lane 1 still snaps via lane 2.
  CHECK_NOTHROW(build_route(map, {Vec2(0, 0), Vec2(300, 5.0)}));
  CHECK_THROWS_AS(build_route(map, {Vec2(0, 0), Vec2(300, 20.0)}), RouteError);
  CHECK_THROWS_AS(build_route(map, {Vec2(0, -10.0), Vec2(300, 0)}), RouteError);
}

TEST_CASE("route serialization round-trips through fixed decimals") {
  const Map map = Map::load(kFixtures + "/maps/straight_two_lane.yaml");
  const RoutePlan plan = build_route(map, {Vec2(0, 0), Vec2(200, 0)});
  const std::string text = plan.serialize();
  CHECK(text.find("segments:") != std::string::npos);
  // Serialization is deterministic.
  CHECK(text == plan.serialize());
}

TEST_CASE("replanning from a mid-route position keeps the remaining chain") {
  const Map map = Map::load(kFixtures + "/maps/roundabout.yaml");
  CartesianState cur;
  cur.x = 0.0;
  cur.y = -30.0;  // on the entry approach
  const RoutePlan plan = replan_route(map, cur, {Vec2(-40.0, 0.0)});
  CHECK(plan.segment_ids.front() == 1);
  CHECK(plan.segment_ids.back() == 22);
}

TEST_CASE("reference path window tracks the route around the ring") {
  const Map map = Map::load(kFixtures + "/maps/roundabout.yaml");
  const RoutePlan plan = build_route(map, {Vec2(0.0, -40.0), Vec2(-40.0, 0.0)});
  const Vec2 probe(14.14, -14.14);  // on ring arc 10
  const ReferencePath path = fit_reference_path(plan, probe, 60.0);
  // The fitted spline smooths the polyline, so its arc length can run a
  // little past the requested window.
  CHECK(path.length() < 63.0);
  CHECK(path.length() > 40.0);
  // The window is centered on the vehicle: its projection sits mid-path.
  const PathProjection proj = path.project(probe);
  CHECK(proj.s > 0.2 * path.length());
  CHECK(proj.s < 0.8 * path.length());
  // origin_s records the window offset on the full route.
  CHECK(path.origin_s() > 0.0);
  CHECK(path.origin_s() < plan.length());

  CHECK_THROWS_AS(fit_reference_path(plan, Vec2(500.0, 500.0), 60.0), TransformError);
}

TEST_CASE("crossroads stop line and signal tags survive loading") {
  const Map map = Map::load(kFixtures + "/maps/crossroads.yaml");
  const LaneSegment& approach = map.at(1);
  REQUIRE(approach.stop_line.has_value());
  CHECK(approach.stop_line->x() == doctest::Approx(-12.0));
  const LaneSegment& south = map.at(4);
  REQUIRE(south.signal.has_value());
  CHECK(*south.signal == "cross_light");
}
