#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sdv/planner.hpp"

namespace sdv {

// One vehicle state sample, as written to trace files.
struct TraceRow {
  double sim_time = 0.0;
  int vehicle_id = 0;
  double x = 0.0, y = 0.0;
  double v = 0.0, a = 0.0;
  double theta = 0.0;
  double s = 0.0, d = 0.0;
};

struct SimEvent {
  double sim_time = 0.0;
  std::string kind;    // collision | maneuver | trigger | diagnostic | end
  std::string detail;  // key=value pairs, space separated
};

struct TimingLog {
  bool realtime = false;
  std::vector<double> tick_durations;  // wall seconds per tick, all vehicles
  std::vector<double> plan_durations;  // wall seconds per plan call
};

struct RateCompliance {
  bool applicable = false;  // false for lockstep logs
  double trc_pct = 0.0;     // ticks within tick_dt
  double max_tick_s = 0.0;
  double tprc_pct = 0.0;  // plans within plan_dt
  double max_plan_s = 0.0;
};

RateCompliance compute_rate_compliance(const TimingLog& log, double tick_dt, double plan_dt);

// Fixed 6-decimal formatting keeps reruns byte-comparable.
std::string format_fixed(double value);

void write_trace(std::ostream& os, const std::vector<TraceRow>& rows);
void write_events(std::ostream& os, const std::vector<SimEvent>& events);
void write_timing(std::ostream& os, const TimingLog& log, double tick_dt, double plan_dt);

// One record per candidate with its cost breakdown, for offline inspection.
void write_candidate_dump(std::ostream& os, double sim_time, int vehicle_id,
                          const std::string& maneuver, const RankingResult& ranking);

void write_file(const std::string& path, const std::string& contents);

std::vector<TraceRow> read_trace(const std::string& path);

}  // namespace sdv
