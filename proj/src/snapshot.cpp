#include "sdv/snapshot.hpp"

#include <algorithm>
#include <cmath>

namespace sdv {

FrenetState ActorView::predicted(double dt) const {
  if (prediction.empty()) {
    FrenetState f = state;
    f.s += f.s_dot * dt;
    f.d += f.d_dot * dt;
    return f;
  }
  if (dt <= 0.0) return prediction.front();
  const double idx = dt / prediction_dt;
  const size_t lo = static_cast<size_t>(idx);
  if (lo + 1 >= prediction.size()) {
    FrenetState f = prediction.back();
    const double extra = dt - prediction_dt * (prediction.size() - 1);
    if (extra > 0.0) {
      f.s += f.s_dot * extra;
      f.d += f.d_dot * extra;
    }
    return f;
  }
  const double w = idx - lo;
  const FrenetState& a = prediction[lo];
  const FrenetState& b = prediction[lo + 1];
  FrenetState f;
  f.s = a.s + w * (b.s - a.s);
  f.s_dot = a.s_dot + w * (b.s_dot - a.s_dot);
  f.s_ddot = a.s_ddot + w * (b.s_ddot - a.s_ddot);
  f.d = a.d + w * (b.d - a.d);
  f.d_dot = a.d_dot + w * (b.d_dot - a.d_dot);
  f.d_ddot = a.d_ddot + w * (b.d_ddot - a.d_ddot);
  return f;
}

const ActorView* TrafficSnapshot::find_actor(const std::string& name) const {
  for (const ActorView& a : actors) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const ActorView* TrafficSnapshot::find_lead(double max_distance, double lane_tol) const {
  if (lane_tol < 0.0) lane_tol = 0.5 * lane_width;
  const ActorView* best = nullptr;
  double best_gap = max_distance;
  for (const ActorView& a : actors) {
    if (a.type == ActorType::Pedestrian || a.type == ActorType::Static) continue;
    if (std::abs(a.state.d - self.d) > lane_tol) continue;
    if (a.state.s <= self.s) continue;
    const double gap = front_gap(a);
    if (gap <= best_gap) {
      best_gap = gap;
      best = &a;
    }
  }
  return best;
}

double TrafficSnapshot::front_gap(const ActorView& a) const {
  return (a.state.s - 0.5 * a.length) - (self.s + 0.5 * self_length);
}

double TrafficSnapshot::rear_gap(const ActorView& a) const {
  return (self.s - 0.5 * self_length) - (a.state.s + 0.5 * a.length);
}

}  // namespace sdv
