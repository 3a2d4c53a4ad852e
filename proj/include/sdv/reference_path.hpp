#pragma once

#include <vector>

#include "sdv/types.hpp"

namespace sdv {

// Result of projecting a point onto a path: arc length of the foot point and
// the signed lateral offset (positive left of the tangent).
struct PathProjection {
  double s = 0.0;
  double d = 0.0;
};

// Planar C^2 curve through a point sequence, parameterized by arc length.
//
// Internally a natural cubic spline pair x(u), y(u) on the cumulative chord
// parameter u, re-parameterized via an arc-length table sampled every 10 cm
// with Gauss-Legendre quadrature per step. The tangent is normalized on
// evaluation, so it is unit by construction; the table keeps the
// s <-> u inversion error well under the 1 cm parameterization budget.
class ReferencePath {
 public:
  // Fits the spline through `points` (near-duplicate points are dropped).
  // origin_s records where this path's s = 0 sits on a larger parent path.
  // Throws DomainError when fewer than 2 distinct points remain.
  explicit ReferencePath(const std::vector<Vec2>& points, double origin_s = 0.0);

  double length() const { return length_; }
  double origin_s() const { return origin_s_; }

  Vec2 position(double s) const;
  Vec2 tangent(double s) const;  // unit norm
  Vec2 normal(double s) const;   // left of tangent
  double heading(double s) const;
  double curvature(double s) const;        // signed, left turn positive
  double curvature_deriv(double s) const;  // d(kappa)/ds, central difference

  // Arc length and signed offset of the closest point. Coarse scan over the
  // sample table followed by Newton refinement on the orthogonality residual.
  // Throws TransformError when |d| > max_offset or when the projection is
  // ambiguous (curvature * |d| >= 1).
  PathProjection project(const Vec2& p, double max_offset = 1e9) const;

 private:
  struct Spline1d {
    // Natural cubic spline: on [u_i, u_i+1], value is
    // a + b*h + c*h^2 + d*h^3 with h = u - u_i.
    std::vector<double> a, b, c, d;
    double value(int i, double h) const;
    double deriv(int i, double h) const;
    double deriv2(int i, double h) const;
  };

  int segment_index(double u) const;
  double u_at(double s) const;
  void derivatives(double u, Vec2* r1, Vec2* r2) const;

  std::vector<double> knots_;  // chord parameter at the fitted points
  Spline1d sx_, sy_;
  double length_ = 0.0;
  double origin_s_ = 0.0;

  // Arc-length table at ~10 cm spacing: table_u_[j] is the chord parameter
  // whose arc length from the start is table_s_[j]; table_p_ caches positions
  // for the projection coarse scan.
  std::vector<double> table_u_;
  std::vector<double> table_s_;
  std::vector<Vec2> table_p_;
};

}  // namespace sdv
