#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace sdv {

using Vec2 = Eigen::Vector2d;

// Error hierarchy. One base so the CLI can map categories to exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MapError : Error {
  using Error::Error;
};
struct RouteError : Error {
  using Error::Error;
};
struct TransformError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct LinkError : Error {
  using Error::Error;
};
struct PlanError : Error {
  using Error::Error;
};
struct ScenarioError : Error {
  using Error::Error;
};
struct ProtocolError : Error {
  using Error::Error;
};

// Syntax error with a source location, printed as file:line:col: message.
struct ParseError : Error {
  ParseError(const std::string& file, int line, int col, const std::string& msg)
      : Error(file + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  int line;
  int col;
};

// Pose and its first two derivatives for one actor at an instant.
// theta is kept in (-pi, pi].
struct CartesianState {
  double x = 0.0;
  double x_dot = 0.0;
  double x_ddot = 0.0;
  double y = 0.0;
  double y_dot = 0.0;
  double y_ddot = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 velocity() const { return {x_dot, y_dot}; }
  Vec2 acceleration() const { return {x_ddot, y_ddot}; }
  double speed() const { return std::hypot(x_dot, y_dot); }
};

// Longitudinal/lateral state relative to a reference path.
struct FrenetState {
  double s = 0.0;
  double s_dot = 0.0;
  double s_ddot = 0.0;
  double d = 0.0;
  double d_dot = 0.0;
  double d_ddot = 0.0;
};

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

// Closed interval used for ranged maneuver parameters. A point value is a
// degenerate interval.
struct Range {
  double lo = 0.0;
  double hi = 0.0;

  Range() = default;
  Range(double lo, double hi) : lo(lo), hi(hi) {}
  static Range point(double v) { return {v, v}; }
  static Range pct(double center, double pct) {
    const double h = std::abs(center) * pct / 100.0;
    return {center - h, center + h};
  }
  bool is_point() const { return lo == hi; }
  double mid() const { return 0.5 * (lo + hi); }
  double span() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

}  // namespace sdv
