#include "sdv/map.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace sdv {
namespace {

constexpr double kSnapTolerance = 3.5;  // route points snap within this lateral distance
constexpr double kPointEps = 1e-9;

double polyline_length(const std::vector<Vec2>& pts) {
  double len = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

struct PolyProj {
  double s = 0.0;
  double d = 0.0;  // signed, positive left of travel
  Vec2 point{0.0, 0.0};
};

PolyProj project_polyline(const std::vector<Vec2>& pts, const Vec2& p) {
  PolyProj best;
  best.point = pts.front();
  best.d = (p - pts.front()).norm();
  double best_dist = best.d;
  double cum = 0.0;
  bool first = true;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i];
    const Vec2 b = pts[i + 1];
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 <= kPointEps * kPointEps) continue;
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    const Vec2 q = a + t * ab;
    const double dist = (p - q).norm();
    if (first || dist < best_dist) {
      first = false;
      best_dist = dist;
      const Vec2 dir = ab / std::sqrt(len2);
      best.s = cum + t * std::sqrt(len2);
      best.point = q;
      const Vec2 off = p - q;
      const double side = dir.x() * off.y() - dir.y() * off.x();
      best.d = (side >= 0.0) ? dist : -dist;
    }
    cum += std::sqrt(len2);
  }
  if (first) best.d = (p - pts.front()).norm();  // degenerate polyline
  return best;
}

Vec2 polyline_at(const std::vector<Vec2>& pts, double s) {
  if (s <= 0.0) return pts.front();
  double cum = 0.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const double len = (pts[i + 1] - pts[i]).norm();
    if (cum + len >= s) {
      const double t = (len > 0.0) ? (s - cum) / len : 0.0;
      return pts[i] + t * (pts[i + 1] - pts[i]);
    }
    cum += len;
  }
  return pts.back();
}

Vec2 parse_point(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence() || node.size() != 2) {
    throw MapError(what + " must be a [x, y] pair");
  }
  return {node[0].as<double>(), node[1].as<double>()};
}

}  // namespace

double LaneSegment::length() const { return polyline_length(centerline); }

Map Map::load(const std::string& file) {
  YAML::Node doc;
  try {
    doc = YAML::LoadFile(file);
  } catch (const YAML::Exception& e) {
    throw MapError(file + ": " + e.what());
  }
  try {
    if (!doc["format_version"]) throw MapError(file + ": missing format_version");
    const int version = doc["format_version"].as<int>();
    if (version != 1) {
      throw MapError(file + ": unsupported format_version " + std::to_string(version));
    }
    if (!doc["segments"] || !doc["segments"].IsSequence()) {
      throw MapError(file + ": missing segments list");
    }
    std::vector<LaneSegment> segs;
    for (const YAML::Node& node : doc["segments"]) {
      LaneSegment seg;
      if (!node["id"]) throw MapError(file + ": segment without id");
      seg.id = node["id"].as<int>();
      const std::string where = file + ": segment " + std::to_string(seg.id);
      if (!node["width"]) throw MapError(where + ": missing width");
      seg.width = node["width"].as<double>();
      if (!node["speed_limit"]) throw MapError(where + ": missing speed_limit");
      seg.speed_limit = node["speed_limit"].as<double>();
      if (!node["centerline"] || !node["centerline"].IsSequence()) {
        throw MapError(where + ": missing centerline");
      }
      for (const YAML::Node& pt : node["centerline"]) {
        seg.centerline.push_back(parse_point(pt, where + ": centerline point"));
      }
      if (node["successors"]) {
        for (const YAML::Node& sid : node["successors"]) {
          seg.successors.push_back(sid.as<int>());
        }
      }
      if (node["left"]) seg.left = node["left"].as<int>();
      if (node["right"]) seg.right = node["right"].as<int>();
      if (node["stop_line"]) seg.stop_line = parse_point(node["stop_line"], where + ": stop_line");
      if (node["signal"]) seg.signal = node["signal"].as<std::string>();
      segs.push_back(std::move(seg));
    }
    std::string name = doc["name"] ? doc["name"].as<std::string>() : "";
    Map map = from_segments(std::move(segs), std::move(name));
    return map;
  } catch (const YAML::Exception& e) {
    throw MapError(file + ": " + e.what());
  }
}

Map Map::from_segments(std::vector<LaneSegment> segments, std::string name) {
  Map map;
  map.name_ = std::move(name);
  map.segments_ = std::move(segments);
  map.validate_and_index();
  return map;
}

void Map::validate_and_index() {
  std::sort(segments_.begin(), segments_.end(),
            [](const LaneSegment& a, const LaneSegment& b) { return a.id < b.id; });
  for (size_t i = 1; i < segments_.size(); ++i) {
    if (segments_[i].id == segments_[i - 1].id) {
      throw MapError("duplicate segment id " + std::to_string(segments_[i].id));
    }
  }
  for (const LaneSegment& seg : segments_) {
    const std::string where = "segment " + std::to_string(seg.id);
    if (seg.centerline.size() < 2) {
      throw MapError(where + ": centerline needs at least 2 points");
    }
    for (size_t i = 1; i < seg.centerline.size(); ++i) {
      if ((seg.centerline[i] - seg.centerline[i - 1]).norm() <= kPointEps) {
        throw MapError(where + ": centerline points " + std::to_string(i - 1) + " and " +
                       std::to_string(i) + " coincide");
      }
    }
    if (!(seg.width > 0.0)) throw MapError(where + ": width must be positive");
    auto check_ref = [&](int ref, const char* role) {
      if (!has_segment(ref)) {
        throw MapError(where + ": unknown " + role + " " + std::to_string(ref));
      }
    };
    for (int succ : seg.successors) check_ref(succ, "successor");
    if (seg.left) check_ref(*seg.left, "left neighbor");
    if (seg.right) check_ref(*seg.right, "right neighbor");
  }
  adjacency_.assign(segments_.size(), {});
  for (size_t i = 0; i < segments_.size(); ++i) {
    const LaneSegment& seg = segments_[i];
    adjacency_[i] = seg.successors;
    if (seg.left) adjacency_[i].push_back(*seg.left);
    if (seg.right) adjacency_[i].push_back(*seg.right);
  }
}

bool Map::has_segment(int id) const {
  auto it = std::lower_bound(segments_.begin(), segments_.end(), id,
                             [](const LaneSegment& s, int v) { return s.id < v; });
  return it != segments_.end() && it->id == id;
}

const LaneSegment& Map::at(int id) const {
  auto it = std::lower_bound(segments_.begin(), segments_.end(), id,
                             [](const LaneSegment& s, int v) { return s.id < v; });
  if (it == segments_.end() || it->id != id) {
    throw MapError("unknown segment id " + std::to_string(id));
  }
  return *it;
}

std::vector<std::pair<int, int>> Map::edges() const {
  std::vector<std::pair<int, int>> out;
  for (size_t i = 0; i < segments_.size(); ++i) {
    for (int to : adjacency_[i]) out.emplace_back(segments_[i].id, to);
  }
  std::sort(out.begin(), out.end());
  return out;
}

const std::vector<int>& Map::adjacent(int id) const {
  auto it = std::lower_bound(segments_.begin(), segments_.end(), id,
                             [](const LaneSegment& s, int v) { return s.id < v; });
  if (it == segments_.end() || it->id != id) {
    throw MapError("unknown segment id " + std::to_string(id));
  }
  return adjacency_[it - segments_.begin()];
}

std::optional<int> Map::relative_lane(int id, int offset) const {
  int cur = id;
  while (offset != 0) {
    const LaneSegment& seg = at(cur);
    const std::optional<int> next = (offset > 0) ? seg.left : seg.right;
    if (!next) return std::nullopt;
    cur = *next;
    offset += (offset > 0) ? -1 : 1;
  }
  return cur;
}

MapMatch Map::match(const Vec2& p) const {
  MapMatch best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const LaneSegment& seg : segments_) {
    const PolyProj proj = project_polyline(seg.centerline, p);
    if (std::abs(proj.d) < best_dist) {
      best_dist = std::abs(proj.d);
      best.segment_id = seg.id;
      best.s = proj.s;
      best.d = proj.d;
      best.point = proj.point;
    }
  }
  return best;
}

namespace {

// Path label ordered by (segment count, total centerline length, id sequence).
struct Label {
  int count = std::numeric_limits<int>::max();
  double length = 0.0;
  std::vector<int> path;

  bool valid() const { return count != std::numeric_limits<int>::max(); }
};

bool label_less(const Label& a, const Label& b) {
  if (a.count != b.count) return a.count < b.count;
  if (a.length != b.length) return a.length < b.length;
  return a.path < b.path;
}

// Label-correcting search over the routing graph. Seeds are complete labels;
// relaxation extends them edge by edge until the order stabilizes. Graphs are
// small (tens of segments), so carrying the id sequence in the label is fine.
std::vector<Label> route_search(const Map& map, const std::vector<Label>& seeds) {
  std::vector<int> ids;
  for (const LaneSegment& seg : map.segments()) ids.push_back(seg.id);
  auto index_of = [&](int id) {
    return static_cast<size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  std::vector<Label> best(ids.size());
  for (const Label& seed : seeds) {
    Label& slot = best[index_of(seed.path.back())];
    if (label_less(seed, slot)) slot = seed;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < ids.size(); ++i) {
      if (!best[i].valid()) continue;
      for (int to : map.adjacent(ids[i])) {
        Label cand = best[i];
        cand.count += 1;
        cand.length += map.at(to).length();
        cand.path.push_back(to);
        Label& slot = best[index_of(to)];
        if (label_less(cand, slot)) {
          slot = std::move(cand);
          changed = true;
        }
      }
    }
  }
  return best;
}

// Best chain from one segment to another. A backward target on the same
// segment forces a loop through the graph and back.
std::optional<std::vector<int>> find_chain(const Map& map, int from, int to, bool allow_trivial) {
  if (from == to && allow_trivial) return std::vector<int>{from};
  std::vector<Label> seeds;
  if (from == to) {
    for (int next : map.adjacent(from)) {
      if (next == from) continue;
      seeds.push_back({2, map.at(from).length() + map.at(next).length(), {from, next}});
    }
  } else {
    seeds.push_back({1, map.at(from).length(), {from}});
  }
  if (seeds.empty()) return std::nullopt;
  std::vector<Label> best = route_search(map, seeds);
  for (size_t i = 0; i < map.segments().size(); ++i) {
    if (map.segments()[i].id == to) {
      if (!best[i].valid()) return std::nullopt;
      return best[i].path;
    }
  }
  return std::nullopt;
}

void push_point(std::vector<Vec2>* path, const Vec2& p) {
  if (path->empty() || (p - path->back()).norm() > kPointEps) path->push_back(p);
}

// Appends centerline vertices with arc position strictly inside (s_from, s_to).
void append_between(std::vector<Vec2>* path, const std::vector<Vec2>& pts, double s_from,
                    double s_to) {
  double cum = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (i > 0) cum += (pts[i] - pts[i - 1]).norm();
    if (cum > s_from + kPointEps && cum < s_to - kPointEps) push_point(path, pts[i]);
  }
}

bool is_successor(const LaneSegment& seg, int next) {
  return std::find(seg.successors.begin(), seg.successors.end(), next) != seg.successors.end();
}

}  // namespace

double RoutePlan::length() const { return polyline_length(global_path); }

std::string RoutePlan::serialize() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  os << "segments:";
  for (int id : segment_ids) os << ' ' << id;
  os << '\n';
  os << "goal: " << goal.x() << ' ' << goal.y() << '\n';
  os << "path:\n";
  for (const Vec2& p : global_path) os << p.x() << ' ' << p.y() << '\n';
  return os.str();
}

RoutePlan build_route(const Map& map, const std::vector<Vec2>& route_points) {
  if (route_points.empty()) throw RouteError("route needs at least one point");
  if (map.segments().empty()) throw RouteError("map has no segments");

  // Every segment within the snap tolerance is a candidate; overlapping or
  // parallel lanes (opposite directions of a two-way road) make the nearest
  // match ambiguous, so connectivity picks among candidates below.
  const size_t n = route_points.size();
  std::vector<std::vector<MapMatch>> cand_sets(n);
  for (size_t k = 0; k < n; ++k) {
    for (const LaneSegment& seg : map.segments()) {
      const PolyProj pp = project_polyline(seg.centerline, route_points[k]);
      if (std::abs(pp.d) > kSnapTolerance) continue;
      MapMatch m;
      m.segment_id = seg.id;
      m.s = pp.s;
      m.d = pp.d;
      m.point = pp.point;
      cand_sets[k].push_back(m);
    }
    if (cand_sets[k].empty()) {
      const MapMatch nearest = map.match(route_points[k]);
      std::ostringstream os;
      os << std::fixed << std::setprecision(2);
      os << "no route: point " << k << " (" << route_points[k].x() << ", "
         << route_points[k].y() << ") is not on any lane segment";
      if (nearest.segment_id >= 0)
        os << " (nearest centerline " << nearest.distance() << " m away)";
      throw RouteError(os.str());
    }
    std::sort(cand_sets[k].begin(), cand_sets[k].end(), [](const MapMatch& a, const MapMatch& b) {
      if (a.distance() != b.distance()) return a.distance() < b.distance();
      return a.segment_id < b.segment_id;
    });
  }

  // Depth-first over candidate choices in distance order; the first complete
  // assignment wins, which keeps the result deterministic.
  std::vector<MapMatch> chosen(n);
  std::vector<std::vector<int>> parts(n);
  size_t deepest = 0;
  auto pick = [&](auto&& self, size_t k) -> bool {
    if (k == n) return true;
    deepest = std::max(deepest, k);
    for (const MapMatch& m : cand_sets[k]) {
      if (k > 0) {
        const MapMatch& prev = chosen[k - 1];
        const bool trivial_ok =
            m.segment_id != prev.segment_id || m.s >= prev.s - 1e-9;
        auto part = find_chain(map, prev.segment_id, m.segment_id, trivial_ok);
        if (!part) continue;
        parts[k] = *part;
      }
      chosen[k] = m;
      if (self(self, k + 1)) return true;
    }
    return false;
  };
  if (!pick(pick, 0)) {
    const size_t k = std::max<size_t>(deepest, 1);
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "no route: point " << k << " (" << route_points[k].x() << ", "
       << route_points[k].y() << ") is unreachable from the previous route point";
    throw RouteError(os.str());
  }
  const std::vector<MapMatch>& snaps = chosen;

  std::vector<int> chain = {snaps[0].segment_id};
  for (size_t k = 1; k < n; ++k) {
    for (size_t j = 0; j < parts[k].size(); ++j) {
      if (j == 0 && parts[k][j] == chain.back()) continue;
      chain.push_back(parts[k][j]);
    }
  }

  RoutePlan plan;
  plan.segment_ids = chain;
  plan.goal = snaps.back().point;

  // Walk the chain keeping an arc-position cursor. Successor edges continue
  // the centerline; lateral edges re-project onto the neighbor and continue
  // there, so the polyline never doubles back.
  int cur = chain[0];
  double cur_s = snaps[0].s;
  push_point(&plan.global_path, snaps[0].point);
  const double inf = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < chain.size(); ++i) {
    const LaneSegment& seg = map.at(cur);
    const int next = chain[i];
    if (is_successor(seg, next)) {
      append_between(&plan.global_path, seg.centerline, cur_s, inf);
      push_point(&plan.global_path, seg.centerline.back());
      cur = next;
      cur_s = 0.0;
      push_point(&plan.global_path, map.at(cur).centerline.front());
    } else {
      const PolyProj proj = project_polyline(map.at(next).centerline, plan.global_path.back());
      cur = next;
      cur_s = proj.s;
    }
  }
  append_between(&plan.global_path, map.at(cur).centerline, cur_s, snaps.back().s);
  push_point(&plan.global_path, snaps.back().point);
  return plan;
}

RoutePlan replan_route(const Map& map, const CartesianState& current,
                       const std::vector<Vec2>& remaining_points) {
  if (remaining_points.size() == 1) {
    const MapMatch here = map.match(current.position());
    const MapMatch goal = map.match(remaining_points[0]);
    if (here.segment_id >= 0 && here.segment_id == goal.segment_id &&
        here.distance() <= kSnapTolerance && goal.distance() <= kSnapTolerance &&
        here.s >= goal.s - 1e-9) {
      RoutePlan plan;
      plan.segment_ids = {goal.segment_id};
      plan.global_path = {goal.point};
      plan.goal = goal.point;
      return plan;
    }
  }
  std::vector<Vec2> points;
  points.push_back(current.position());
  points.insert(points.end(), remaining_points.begin(), remaining_points.end());
  return build_route(map, points);
}

ReferencePath fit_reference_path(const RoutePlan& route, const Vec2& position, double window) {
  if (route.global_path.size() < 2) {
    throw TransformError("route has no drivable extent to fit a reference path");
  }
  const PolyProj proj = project_polyline(route.global_path, position);
  if (std::abs(proj.d) > window) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "position (" << position.x() << ", " << position.y() << ") is "
       << std::abs(proj.d) << " m from the route (window " << window << " m)";
    throw TransformError(os.str());
  }
  const double total = polyline_length(route.global_path);
  const double lo = std::clamp(proj.s - 0.5 * window, 0.0, total);
  const double hi = std::clamp(proj.s + 0.5 * window, 0.0, total);
  std::vector<Vec2> pts;
  push_point(&pts, polyline_at(route.global_path, lo));
  append_between(&pts, route.global_path, lo, hi);
  push_point(&pts, polyline_at(route.global_path, hi));
  return ReferencePath(pts, lo);
}

}  // namespace sdv
