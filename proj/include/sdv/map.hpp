#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdv/reference_path.hpp"
#include "sdv/types.hpp"

namespace sdv {

// One directed lane with a polyline centerline. Connectivity is expressed by
// successor ids (longitudinal) and left/right neighbor ids (lane change).
struct LaneSegment {
  int id = 0;
  double width = 0.0;
  double speed_limit = 0.0;
  std::vector<Vec2> centerline;
  std::vector<int> successors;
  std::optional<int> left;
  std::optional<int> right;
  std::optional<Vec2> stop_line;
  std::optional<std::string> signal;

  double length() const;
};

// Closest-segment query result. s is the arc position along that segment's
// centerline; d is the signed lateral offset, positive left of travel.
struct MapMatch {
  int segment_id = -1;
  double s = 0.0;
  double d = 0.0;
  Vec2 point{0.0, 0.0};

  double distance() const { return std::abs(d); }
};

// Road network: lane segments plus the routing graph over successor and
// lateral-neighbor edges. Immutable once constructed.
class Map {
 public:
  // Parses the YAML map schema (format_version 1). Throws MapError naming
  // the offending segment on any schema or reference violation.
  static Map load(const std::string& file);
  // Builds a map directly from segments, running the same validation.
  static Map from_segments(std::vector<LaneSegment> segments, std::string name = "");

  const std::string& name() const { return name_; }
  const std::vector<LaneSegment>& segments() const { return segments_; }
  bool has_segment(int id) const;
  const LaneSegment& at(int id) const;  // throws MapError when absent

  // Directed routing edges (successors plus lateral neighbors), sorted.
  std::vector<std::pair<int, int>> edges() const;
  const std::vector<int>& adjacent(int id) const;

  // Lane `offset` lanes to the side of `id`: positive counts left neighbors,
  // negative right neighbors. Empty when the chain runs out.
  std::optional<int> relative_lane(int id, int offset) const;

  // Nearest segment by centerline distance; ties go to the lowest id.
  MapMatch match(const Vec2& p) const;

 private:
  Map() = default;
  void validate_and_index();

  std::string name_;
  std::vector<LaneSegment> segments_;       // sorted by id
  std::vector<std::vector<int>> adjacency_; // parallel to segments_
};

// Ordered segment chain with its drivable polyline. goal is the snapped
// image of the last route point on the network.
struct RoutePlan {
  std::vector<int> segment_ids;
  std::vector<Vec2> global_path;
  Vec2 goal{0.0, 0.0};

  double length() const;
  // Deterministic fixed-decimal text form (6 decimals).
  std::string serialize() const;
};

// Shortest segment chain visiting the route points in order. Fewest segments
// wins; ties break on total centerline length, then on the lexicographically
// smallest id sequence. Throws RouteError when a point does not snap to any
// segment (3.5 m tolerance) or no chain connects consecutive points.
RoutePlan build_route(const Map& map, const std::vector<Vec2>& route_points);

// build_route with the current position prepended. A vehicle at or past a
// single remaining goal on the same segment yields a degenerate zero-length
// plan.
RoutePlan replan_route(const Map& map, const CartesianState& current,
                       const std::vector<Vec2>& remaining_points);

// Fits the Frenet reference spline over the part of the global path inside
// `window` meters centered on the projection of `position` (half behind,
// half ahead). origin_s of the result is the global-path arc length at the
// window start. Throws TransformError when position is farther than `window`
// from the path.
ReferencePath fit_reference_path(const RoutePlan& route, const Vec2& position,
                                 double window = 100.0);

}  // namespace sdv
