#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdv/map.hpp"
#include "sdv/planner.hpp"
#include "sdv/trace.hpp"
#include "sdv/types.hpp"

namespace sdv {

// One recorded drive: fixed-rate position and speed samples for a single actor.
struct TraceSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
};

struct Trace {
  int actor_id = 0;
  std::vector<TraceSample> samples;

  double t_begin() const { return samples.front().t; }
  double t_end() const { return samples.back().t; }
  Vec2 position_at(double t) const;  // linear interpolation inside [t_begin, t_end]
};

// Extracts one actor's rows from an engine trace.
Trace trace_of(const std::vector<TraceRow>& rows, int vehicle_id);
std::vector<int> trace_actor_ids(const std::vector<TraceRow>& rows);

// Time-averaged Euclidean distance between two drives over their common time
// interval, trapezoidal on the union of both sample grids. Throws DomainError
// when the traces do not overlap in time.
double sted(const Trace& a, const Trace& b);

// Driving-style parameters read off an empirical trajectory. Optional fields
// stay empty when the trace never exhibits the feature; time_gap falls back to
// the nominal [1.8, 2.2] s band when no lead was present.
struct DriverStyleConfig {
  double max_speed = 0.0;
  double avg_speed = 0.0;
  double lateral_offset = 0.0;
  std::optional<double> stop_distance_to_line;
  std::optional<double> resume_delay;
  Range time_gap{1.8, 2.2};
  bool time_gap_observed = false;
};

// Phase schedule of the signal governing the trace, as (switch time, phase).
using PhaseSchedule = std::vector<std::pair<double, std::string>>;

// Rule-based style extraction. The trace must stay on mapped lanes; otherwise
// MapError. The lead trace and signal schedule are optional context.
DriverStyleConfig extract_style(const Trace& empirical, const Map& map,
                                const Trace* lead = nullptr,
                                const PhaseSchedule* signal = nullptr);

// Re-centers maneuver parameter ranges on the extracted style: target speeds,
// lateral offset, stop margin, time gap, and the resume-delay hold. Everything
// else passes through untouched.
std::vector<ManeuverConfig> apply_style(const DriverStyleConfig& style,
                                        std::vector<ManeuverConfig> base);

// Renders calibrated maneuver parameters as behavior-tree parameter overrides
// (DSL value text keyed by parameter name), ready for scenario agent overrides.
std::map<std::string, std::string> style_overrides(const DriverStyleConfig& style,
                                                   const ManeuverConfig& base);

// One simulation run reduced to reportable numbers.
struct RunSummary {
  std::string scenario_type;
  int vehicles = 0;
  std::optional<double> sted;
  std::optional<double> reuse_level;
  RateCompliance rates;
};

struct MetricsReport {
  std::string text;  // line-oriented summary
  std::map<std::string, std::vector<double>> columns;  // plot-ready series
};

MetricsReport report(const std::vector<RunSummary>& runs);

}  // namespace sdv
