#include "sdv/quintic.hpp"

#include <algorithm>
#include <cmath>

namespace sdv {

double QuinticPoly::value(double t) const {
  double r = 0.0;
  for (int i = 5; i >= 0; --i) r = r * t + c_[i];
  return r;
}

double QuinticPoly::first(double t) const {
  double r = 0.0;
  for (int i = 5; i >= 1; --i) r = r * t + i * c_[i];
  return r;
}

double QuinticPoly::second(double t) const {
  double r = 0.0;
  for (int i = 5; i >= 2; --i) r = r * t + i * (i - 1) * c_[i];
  return r;
}

double QuinticPoly::third(double t) const {
  return 6.0 * c_[3] + 24.0 * c_[4] * t + 60.0 * c_[5] * t * t;
}

QuinticPoly solve_quintic(const BoundaryState& start, const BoundaryState& end, double T) {
  if (!(T > 0.0)) throw DomainError("solve_quintic: duration must be positive");

  // Residuals of the end conditions after removing the start Taylor part,
  // expressed in tau = t/T so the 3x3 block is constant and well
  // conditioned for any T.
  const double u1 = end.p - (start.p + start.v * T + 0.5 * start.a * T * T);
  const double u2 = end.v - (start.v + start.a * T);
  const double u3 = end.a - start.a;

  const double T2 = T * T;
  const double T3 = T2 * T;

  QuinticPoly::Coeffs c;
  c[0] = start.p;
  c[1] = start.v;
  c[2] = 0.5 * start.a;
  c[3] = (20.0 * u1 - 8.0 * u2 * T + u3 * T2) / (2.0 * T3);
  c[4] = (-30.0 * u1 + 14.0 * u2 * T - 2.0 * u3 * T2) / (2.0 * T3 * T);
  c[5] = (12.0 * u1 - 6.0 * u2 * T + u3 * T2) / (2.0 * T3 * T2);
  return QuinticPoly(c);
}

double jerk_cost(const QuinticPoly& poly, double T) {
  if (!(T > 0.0)) throw DomainError("jerk_cost: duration must be positive");
  const double c3 = poly[3], c4 = poly[4], c5 = poly[5];
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
  return 36.0 * c3 * c3 * T + 144.0 * c3 * c4 * T2 + (192.0 * c4 * c4 + 240.0 * c3 * c5) * T3 +
         720.0 * c4 * c5 * T4 + 720.0 * c5 * c5 * T5;
}

double accel_integral(const QuinticPoly& poly, double T) {
  if (!(T > 0.0)) throw DomainError("accel_integral: duration must be positive");
  // p''(t) = a0 + a1 t + a2 t^2 + a3 t^3 with:
  const double a0 = 2.0 * poly[2];
  const double a1 = 6.0 * poly[3];
  const double a2 = 12.0 * poly[4];
  const double a3 = 20.0 * poly[5];
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T;
  const double T5 = T4 * T, T6 = T5 * T, T7 = T6 * T;
  return a0 * a0 * T + a0 * a1 * T2 + (a1 * a1 / 3.0 + 2.0 * a0 * a2 / 3.0) * T3 +
         (a0 * a3 / 2.0 + a1 * a2 / 2.0) * T4 + (a2 * a2 / 5.0 + 2.0 * a1 * a3 / 5.0) * T5 +
         a2 * a3 / 3.0 * T6 + a3 * a3 / 7.0 * T7;
}

FrenetState eval_trajectory(const FrenetTrajectory& traj, double t) {
  const double u = t - traj.t0;
  // Small slack so plan-boundary evaluations at T survive rounding.
  constexpr double kEps = 1e-9;
  if (u < -kEps || u > traj.duration + kEps)
    throw DomainError("eval_trajectory: time outside trajectory window");
  const double tc = std::clamp(u, 0.0, traj.duration);
  FrenetState out;
  out.s = traj.s_poly.value(tc);
  out.s_dot = traj.s_poly.first(tc);
  out.s_ddot = traj.s_poly.second(tc);
  out.d = traj.d_poly.value(tc);
  out.d_dot = traj.d_poly.first(tc);
  out.d_ddot = traj.d_poly.second(tc);
  return out;
}

}  // namespace sdv
