#include "sdv/trace.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "sdv/types.hpp"

namespace sdv {

RateCompliance compute_rate_compliance(const TimingLog& log, double tick_dt, double plan_dt) {
  RateCompliance rc;
  rc.applicable = log.realtime;
  if (!rc.applicable) return rc;
  size_t tick_ok = 0;
  for (double t : log.tick_durations) {
    if (t <= tick_dt) ++tick_ok;
    rc.max_tick_s = std::max(rc.max_tick_s, t);
  }
  size_t plan_ok = 0;
  for (double t : log.plan_durations) {
    if (t <= plan_dt) ++plan_ok;
    rc.max_plan_s = std::max(rc.max_plan_s, t);
  }
  rc.trc_pct = log.tick_durations.empty()
                   ? 100.0
                   : 100.0 * static_cast<double>(tick_ok) / log.tick_durations.size();
  rc.tprc_pct = log.plan_durations.empty()
                    ? 100.0
                    : 100.0 * static_cast<double>(plan_ok) / log.plan_durations.size();
  return rc;
}

std::string format_fixed(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

void write_trace(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << "sim_time id x y v a theta s d\n";
  for (const TraceRow& r : rows) {
    os << format_fixed(r.sim_time) << ' ' << r.vehicle_id << ' ' << format_fixed(r.x) << ' '
       << format_fixed(r.y) << ' ' << format_fixed(r.v) << ' ' << format_fixed(r.a) << ' '
       << format_fixed(r.theta) << ' ' << format_fixed(r.s) << ' ' << format_fixed(r.d)
       << '\n';
  }
}

void write_events(std::ostream& os, const std::vector<SimEvent>& events) {
  for (const SimEvent& e : events) {
    os << format_fixed(e.sim_time) << ' ' << e.kind;
    if (!e.detail.empty()) os << ' ' << e.detail;
    os << '\n';
  }
}

void write_timing(std::ostream& os, const TimingLog& log, double tick_dt, double plan_dt) {
  const RateCompliance rc = compute_rate_compliance(log, tick_dt, plan_dt);
  os << "mode: " << (log.realtime ? "realtime" : "lockstep") << '\n';
  if (!rc.applicable) {
    os << "rate_compliance: not applicable\n";
    return;
  }
  os << "ticks: " << log.tick_durations.size() << '\n';
  os << "tick_rate_compliance_pct: " << format_fixed(rc.trc_pct) << '\n';
  os << "max_tick_s: " << format_fixed(rc.max_tick_s) << '\n';
  os << "plans: " << log.plan_durations.size() << '\n';
  os << "plan_rate_compliance_pct: " << format_fixed(rc.tprc_pct) << '\n';
  os << "max_plan_s: " << format_fixed(rc.max_plan_s) << '\n';
}

void write_candidate_dump(std::ostream& os, double sim_time, int vehicle_id,
                          const std::string& maneuver, const RankingResult& ranking) {
  os << "plan sim_time=" << format_fixed(sim_time) << " vehicle=" << vehicle_id
     << " maneuver=" << maneuver << " candidates=" << ranking.ranking.size()
     << " best=" << ranking.best_index << '\n';
  for (const RankedCandidate& rc : ranking.ranking) {
    os << "  candidate " << rc.index << " T=" << format_fixed(rc.trajectory.duration)
       << " feasible=" << (rc.feasible ? 1 : 0) << " cost=" << format_fixed(rc.cost)
       << " time=" << format_fixed(rc.breakdown.time)
       << " efficiency=" << format_fixed(rc.breakdown.efficiency)
       << " lane_offset=" << format_fixed(rc.breakdown.lane_offset)
       << " jerk=" << format_fixed(rc.breakdown.jerk)
       << " accel=" << format_fixed(rc.breakdown.accel)
       << " proximity=" << format_fixed(rc.breakdown.proximity);
    if (rc.violation) {
      os << " violation=\"" << rc.violation->reason;
      if (!rc.violation->actor.empty()) os << " with " << rc.violation->actor;
      os << " at " << format_fixed(rc.violation->at_time) << "s\"";
    }
    os << '\n';
  }
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw Error("write to '" + path + "' failed");
}

std::vector<TraceRow> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file '" + path + "'");
  std::vector<TraceRow> rows;
  std::string line;
  bool first = true;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("sim_time", 0) == 0) continue;  // header
    }
    std::istringstream ls(line);
    TraceRow r;
    if (!(ls >> r.sim_time >> r.vehicle_id >> r.x >> r.y >> r.v >> r.a >> r.theta >> r.s >>
          r.d)) {
      throw Error(path + ": line " + std::to_string(lineno) + ": malformed trace row");
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace sdv
