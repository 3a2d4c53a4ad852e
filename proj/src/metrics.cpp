#include "sdv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace sdv {
namespace {

constexpr double kDefaultVehicleLength = 4.8;

double quantile(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Arc-length position of the closest point to p on a polyline.
double project_arc(const std::vector<Vec2>& line, const Vec2& p) {
  double best_arc = 0.0;
  double best_dist = std::numeric_limits<double>::max();
  double arc = 0.0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec2 a = line[i];
    const Vec2 ab = line[i + 1] - a;
    const double len2 = ab.squaredNorm();
    const double u = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 q = a + u * ab;
    const double dist = (p - q).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best_arc = arc + u * std::sqrt(len2);
    }
    arc += std::sqrt(len2);
  }
  return best_arc;
}

}  // namespace

Vec2 Trace::position_at(double t) const {
  const auto it = std::lower_bound(samples.begin(), samples.end(), t,
                                   [](const TraceSample& s, double tt) { return s.t < tt; });
  if (it == samples.begin()) return {it->x, it->y};
  if (it == samples.end()) return {samples.back().x, samples.back().y};
  const TraceSample& b = *it;
  const TraceSample& a = *(it - 1);
  const double span = b.t - a.t;
  const double u = span > 0.0 ? (t - a.t) / span : 0.0;
  return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)};
}

Trace trace_of(const std::vector<TraceRow>& rows, int vehicle_id) {
  Trace out;
  out.actor_id = vehicle_id;
  for (const TraceRow& r : rows)
    if (r.vehicle_id == vehicle_id) out.samples.push_back({r.sim_time, r.x, r.y, r.v});
  return out;
}

std::vector<int> trace_actor_ids(const std::vector<TraceRow>& rows) {
  std::vector<int> ids;
  for (const TraceRow& r : rows)
    if (std::find(ids.begin(), ids.end(), r.vehicle_id) == ids.end())
      ids.push_back(r.vehicle_id);
  return ids;
}

double sted(const Trace& a, const Trace& b) {
  if (a.samples.empty() || b.samples.empty())
    throw DomainError("sted: empty trace");
  const double lo = std::max(a.t_begin(), b.t_begin());
  const double hi = std::min(a.t_end(), b.t_end());
  if (hi - lo <= 0.0)
    throw DomainError("sted: traces do not overlap in time");

  std::vector<double> grid;
  grid.push_back(lo);
  for (const TraceSample& s : a.samples)
    if (s.t > lo && s.t < hi) grid.push_back(s.t);
  for (const TraceSample& s : b.samples)
    if (s.t > lo && s.t < hi) grid.push_back(s.t);
  grid.push_back(hi);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double x, double y) { return std::abs(x - y) < 1e-12; }),
             grid.end());

  double integral = 0.0;
  double prev_t = grid.front();
  double prev_dist = (a.position_at(prev_t) - b.position_at(prev_t)).norm();
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double t = grid[i];
    const double dist = (a.position_at(t) - b.position_at(t)).norm();
    integral += 0.5 * (prev_dist + dist) * (t - prev_t);
    prev_t = t;
    prev_dist = dist;
  }
  return integral / (hi - lo);
}

DriverStyleConfig extract_style(const Trace& empirical, const Map& map, const Trace* lead,
                                const PhaseSchedule* signal) {
  if (empirical.samples.size() < 2)
    throw DomainError("extract_style: trace needs at least two samples");

  // Match every sample onto the lane network, building the traversed segment
  // chain and a global arc coordinate along it.
  struct ChainEntry {
    int segment_id;
    double offset;  // global s of the segment start
  };
  std::vector<ChainEntry> chain;
  std::vector<double> global_s(empirical.samples.size());
  std::vector<double> lateral(empirical.samples.size());
  for (std::size_t i = 0; i < empirical.samples.size(); ++i) {
    const Vec2 p{empirical.samples[i].x, empirical.samples[i].y};
    const MapMatch m = map.match(p);
    if (m.segment_id < 0)
      throw MapError("extract_style: trace is off the mapped network");
    const LaneSegment& seg = map.at(m.segment_id);
    if (std::abs(m.d) > 0.5 * seg.width + 2.0)
      throw MapError("extract_style: trace leaves mapped lanes at t=" +
                     num(empirical.samples[i].t));
    if (chain.empty()) {
      chain.push_back({m.segment_id, 0.0});
    } else if (chain.back().segment_id != m.segment_id) {
      const double prev_len = map.at(chain.back().segment_id).length();
      chain.push_back({m.segment_id, chain.back().offset + prev_len});
    }
    global_s[i] = chain.back().offset + m.s;
    lateral[i] = m.d;
  }

  DriverStyleConfig style;
  double v_sum = 0.0;
  double d_sum = 0.0;
  for (std::size_t i = 0; i < empirical.samples.size(); ++i) {
    style.max_speed = std::max(style.max_speed, empirical.samples[i].v);
    v_sum += empirical.samples[i].v;
    d_sum += lateral[i];
  }
  const double n = static_cast<double>(empirical.samples.size());
  style.avg_speed = v_sum / n;
  style.lateral_offset = d_sum / n;

  // First standstill and the nearest stop line at or ahead of it.
  std::optional<std::size_t> stop_idx;
  for (std::size_t i = 0; i < empirical.samples.size(); ++i) {
    if (empirical.samples[i].v < 0.1) {
      stop_idx = i;
      break;
    }
  }
  if (stop_idx) {
    const double stop_s = global_s[*stop_idx];
    std::size_t entry = 0;
    while (entry + 1 < chain.size() && chain[entry + 1].offset <= stop_s) ++entry;
    for (std::size_t e = entry; e < chain.size(); ++e) {
      const LaneSegment& seg = map.at(chain[e].segment_id);
      if (!seg.stop_line) continue;
      const double line_s = chain[e].offset + project_arc(seg.centerline, *seg.stop_line);
      if (line_s >= stop_s - 2.0) {
        style.stop_distance_to_line = line_s - stop_s;
        break;
      }
    }
  }

  // Resume delay: first green at or after the standstill until speed recovers.
  if (stop_idx && signal) {
    const double t_stop = empirical.samples[*stop_idx].t;
    std::optional<double> t_green;
    for (const auto& [t, phase] : *signal) {
      if (t >= t_stop && phase == "green") {
        t_green = t;
        break;
      }
    }
    if (t_green) {
      for (std::size_t i = *stop_idx; i < empirical.samples.size(); ++i) {
        if (empirical.samples[i].t >= *t_green && empirical.samples[i].v > 0.5) {
          style.resume_delay = empirical.samples[i].t - *t_green;
          break;
        }
      }
    }
  }

  // Instantaneous time gaps against the lead, when one is given.
  if (lead && !lead->samples.empty()) {
    std::vector<double> gaps;
    for (std::size_t i = 0; i < empirical.samples.size(); ++i) {
      const TraceSample& s = empirical.samples[i];
      if (s.v <= 0.5) continue;
      if (s.t < lead->t_begin() || s.t > lead->t_end()) continue;
      const Vec2 p{s.x, s.y};
      const Vec2 lp = lead->position_at(s.t);
      const std::size_t j = i + 1 < empirical.samples.size() ? i + 1 : i - 1;
      Vec2 dir{empirical.samples[j].x - s.x, empirical.samples[j].y - s.y};
      if (j < i) dir = -dir;
      if (dir.norm() < 1e-9 || dir.dot(lp - p) <= 0.0) continue;  // lead must be ahead
      const double gap = (lp - p).norm() - kDefaultVehicleLength;
      if (gap <= 0.0 || gap > 150.0) continue;
      gaps.push_back(gap / s.v);
    }
    if (gaps.size() >= 5) {
      std::sort(gaps.begin(), gaps.end());
      style.time_gap = Range{quantile(gaps, 0.10), quantile(gaps, 0.90)};
      style.time_gap_observed = true;
    }
  }
  return style;
}

std::vector<ManeuverConfig> apply_style(const DriverStyleConfig& style,
                                        std::vector<ManeuverConfig> base) {
  for (ManeuverConfig& c : base) {
    if (c.maneuver != "reverse") {
      const double half = 0.5 * c.target_speed.span();
      const double center = style.avg_speed;
      double hi = center + half;
      if (style.max_speed > center) hi = std::min(hi, style.max_speed);
      const double lo = std::max(0.0, std::min(center - half, hi));
      c.target_speed = Range{lo, hi};
    }
    const double off_half = 0.5 * c.lateral_offset.span();
    c.lateral_offset = Range{style.lateral_offset - off_half, style.lateral_offset + off_half};
    c.time_gap = style.time_gap;
    if (style.stop_distance_to_line) c.stop_margin = *style.stop_distance_to_line;
    if (style.resume_delay) c.resume_delay = style.resume_delay;
  }
  return base;
}

std::map<std::string, std::string> style_overrides(const DriverStyleConfig& style,
                                                   const ManeuverConfig& base) {
  std::vector<ManeuverConfig> applied = apply_style(style, {base});
  const ManeuverConfig& c = applied.front();
  std::map<std::string, std::string> out;
  out["target_speed"] = c.target_speed.is_point()
                            ? num(c.target_speed.lo)
                            : "(" + num(c.target_speed.lo) + ", " + num(c.target_speed.hi) + ")";
  out["lateral_offset"] = c.lateral_offset.is_point()
                              ? num(c.lateral_offset.lo)
                              : "(" + num(c.lateral_offset.lo) + ", " +
                                    num(c.lateral_offset.hi) + ")";
  out["time_gap"] = "(" + num(c.time_gap.lo) + ", " + num(c.time_gap.hi) + ")";
  if (style.stop_distance_to_line) out["margin"] = num(c.stop_margin);
  if (style.resume_delay) out["t"] = num(*c.resume_delay);
  return out;
}

MetricsReport report(const std::vector<RunSummary>& runs) {
  MetricsReport rep;
  if (runs.empty()) return rep;

  std::ostringstream text;

  std::vector<std::string> types;
  for (const RunSummary& r : runs)
    if (std::find(types.begin(), types.end(), r.scenario_type) == types.end())
      types.push_back(r.scenario_type);

  for (const std::string& type : types) {
    std::vector<double> steds;
    int count = 0;
    for (const RunSummary& r : runs) {
      if (r.scenario_type != type) continue;
      ++count;
      if (r.sted) steds.push_back(*r.sted);
    }
    text << "scenario_type=" << type << " runs=" << count;
    if (!steds.empty()) {
      const double mean = std::accumulate(steds.begin(), steds.end(), 0.0) /
                          static_cast<double>(steds.size());
      text << " sted_mean=" << num(mean) << " sted_median=" << num(median(steds));
      rep.columns["sted_mean"].push_back(mean);
      rep.columns["sted_median"].push_back(median(steds));
    }
    text << "\n";
  }

  std::vector<double> reuse;
  for (const RunSummary& r : runs)
    if (r.reuse_level) reuse.push_back(*r.reuse_level);
  if (!reuse.empty()) {
    const double mean =
        std::accumulate(reuse.begin(), reuse.end(), 0.0) / static_cast<double>(reuse.size());
    text << "reuse_level mean=" << num(mean) << "\n";
    rep.columns["reuse_level"] = reuse;
  }

  for (const RunSummary& r : runs) {
    if (!r.rates.applicable) continue;
    text << "compliance vehicles=" << r.vehicles << " trc=" << num(r.rates.trc_pct)
         << "% max_tick=" << num(r.rates.max_tick_s) << " tprc=" << num(r.rates.tprc_pct)
         << "% max_plan=" << num(r.rates.max_plan_s) << "\n";
    rep.columns["vehicles"].push_back(r.vehicles);
    rep.columns["trc_pct"].push_back(r.rates.trc_pct);
    rep.columns["max_tick_s"].push_back(r.rates.max_tick_s);
    rep.columns["tprc_pct"].push_back(r.rates.tprc_pct);
    rep.columns["max_plan_s"].push_back(r.rates.max_plan_s);
  }

  rep.text = text.str();
  return rep;
}

}  // namespace sdv
