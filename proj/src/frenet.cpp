#include "sdv/frenet.hpp"

#include <cmath>
#include <string>

namespace sdv {

namespace {
constexpr double kStandstill = 1e-3;  // below this speed heading is held
}

FrenetState to_frenet(const CartesianState& state, const ReferencePath& path) {
  const PathProjection proj = path.project(state.position());
  const double s = proj.s;
  const double d = proj.d;
  const Vec2 t = path.tangent(s);
  const Vec2 n = path.normal(s);
  const double kappa = path.curvature(s);
  const double kappa_s = path.curvature_deriv(s);
  const double one_minus = 1.0 - kappa * d;

  FrenetState f;
  f.s = s;
  f.d = d;
  const Vec2 v = state.velocity();
  const Vec2 a = state.acceleration();
  f.s_dot = v.dot(t) / one_minus;
  f.d_dot = v.dot(n);
  f.s_ddot = (a.dot(t) + kappa_s * f.s_dot * f.s_dot * d + 2.0 * kappa * f.s_dot * f.d_dot) /
             one_minus;
  f.d_ddot = a.dot(n) - kappa * f.s_dot * f.s_dot * one_minus;
  return f;
}

CartesianState to_cartesian(const FrenetState& state, const ReferencePath& path) {
  constexpr double kEps = 1e-9;
  if (state.s < -kEps || state.s > path.length() + kEps) {
    throw TransformError("arc length " + std::to_string(state.s) +
                         " outside reference path [0, " + std::to_string(path.length()) + "]");
  }
  const double s = state.s;
  const double d = state.d;
  const Vec2 c = path.position(s);
  const Vec2 t = path.tangent(s);
  const Vec2 n = path.normal(s);
  const double kappa = path.curvature(s);
  const double kappa_s = path.curvature_deriv(s);
  const double one_minus = 1.0 - kappa * d;
  if (one_minus <= 0.0) {
    throw TransformError("state outside valid tube of reference path (curvature * d >= 1)");
  }

  const double vt = state.s_dot * one_minus;
  const double vn = state.d_dot;
  const double at = state.s_ddot * one_minus -
                    kappa_s * state.s_dot * state.s_dot * d -
                    2.0 * kappa * state.s_dot * state.d_dot;
  const double an = state.d_ddot + kappa * state.s_dot * state.s_dot * one_minus;

  CartesianState out;
  const Vec2 pos = c + d * n;
  const Vec2 vel = vt * t + vn * n;
  const Vec2 acc = at * t + an * n;
  out.x = pos.x();
  out.y = pos.y();
  out.x_dot = vel.x();
  out.y_dot = vel.y();
  out.x_ddot = acc.x();
  out.y_ddot = acc.y();
  const double speed = vel.norm();
  out.theta = (speed < kStandstill) ? path.heading(s)
                                    : wrap_angle(path.heading(s) + std::atan2(vn, vt));
  return out;
}

}  // namespace sdv
