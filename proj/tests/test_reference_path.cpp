#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "sdv/reference_path.hpp"

using namespace sdv;

namespace {

std::vector<Vec2> straight_points(double x0, double x1, double step) {
  std::vector<Vec2> pts;
  for (double x = x0; x <= x1 + 1e-9; x += step) pts.emplace_back(x, 0.0);
  return pts;
}

// Quarter circle of radius r centered at the origin, from (r, 0) to (0, r).
std::vector<Vec2> quarter_circle_points(double r, int n) {
  std::vector<Vec2> pts;
  for (int i = 0; i <= n; ++i) {
    const double a = 0.5 * std::numbers::pi * i / n;
    pts.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  return pts;
}

}  // namespace

TEST_CASE("straight path has trivial geometry") {
  const ReferencePath path(straight_points(0.0, 100.0, 10.0));
  CHECK(path.length() == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(path.origin_s() == 0.0);
  for (double s : {0.0, 13.7, 50.0, 99.0}) {
    const Vec2 p = path.position(s);
    CHECK(p.x() == doctest::Approx(s).epsilon(1e-9));
    CHECK(std::fabs(p.y()) < 1e-9);
    CHECK(path.tangent(s).x() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(path.normal(s).y() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(path.heading(s)) < 1e-9);
    CHECK(std::fabs(path.curvature(s)) < 1e-9);
  }
}

TEST_CASE("quarter circle arc length and curvature match the analytic circle") {
  const double r = 20.0;
  const ReferencePath path(quarter_circle_points(r, 16));
  // Analytic arc length: pi * r / 2 = 31.4159...
  CHECK(path.length() == doctest::Approx(0.5 * std::numbers::pi * r).epsilon(1e-4));
  for (double frac : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    const double s = frac * path.length();
    // Signed curvature is +1/r for a counter-clockwise arc.
    CHECK(path.curvature(s) == doctest::Approx(1.0 / r).epsilon(0.02));
    const Vec2 p = path.position(s);
    CHECK(p.norm() == doctest::Approx(r).epsilon(1e-3));
    // Tangent is perpendicular to the radius vector.
    CHECK(std::fabs(p.dot(path.tangent(s))) / r < 1e-2);
  }
}

TEST_CASE("tangent is unit and matches heading") {
  const ReferencePath path(quarter_circle_points(15.0, 12));
  for (double s = 0.5; s < path.length(); s += 1.7) {
    const Vec2 t = path.tangent(s);
    CHECK(t.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::atan2(t.y(), t.x()) == doctest::Approx(path.heading(s)).epsilon(1e-12));
    const Vec2 n = path.normal(s);
    // Left normal: rotate tangent by +90 degrees.
    CHECK(n.x() == doctest::Approx(-t.y()).epsilon(1e-12));
    CHECK(n.y() == doctest::Approx(t.x()).epsilon(1e-12));
  }
}

TEST_CASE("arc-length parameterization stays within the 1 cm budget") {
  // Compare spline arc positions against the analytic circle point at the
  // same arc length.
  const double r = 20.0;
  const ReferencePath path(quarter_circle_points(r, 24));
  for (double s = 0.0; s <= path.length(); s += 0.37) {
    const double a = s / r;
    const Vec2 exact(r * std::cos(a), r * std::sin(a));
    CHECK((path.position(s) - exact).norm() < 0.01);
  }
}

TEST_CASE("projection recovers arc length and signed offset") {
  const ReferencePath path(straight_points(0.0, 200.0, 20.0));
  const PathProjection on = path.project(Vec2(42.0, 0.0));
  CHECK(on.s == doctest::Approx(42.0).epsilon(1e-6));
  CHECK(std::fabs(on.d) < 1e-9);

  const PathProjection left = path.project(Vec2(60.0, 2.5));
  CHECK(left.s == doctest::Approx(60.0).epsilon(1e-6));
  CHECK(left.d == doctest::Approx(2.5).epsilon(1e-9));

  const PathProjection right = path.project(Vec2(60.0, -1.25));
  CHECK(right.d == doctest::Approx(-1.25).epsilon(1e-9));
}

TEST_CASE("projection on a curve points at the nearest foot point") {
  const double r = 20.0;
  const ReferencePath path(quarter_circle_points(r, 24));
  std::mt19937 rng(33);
  std::uniform_real_distribution<double> ang(0.05, 0.45);
  std::uniform_real_distribution<double> off(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double a = ang(rng) * std::numbers::pi;
    const double d = off(rng);
    // Point offset radially: inside the circle is left of the tangent.
    const Vec2 p((r - d) * std::cos(a), (r - d) * std::sin(a));
    const PathProjection proj = path.project(p);
    CHECK(proj.s == doctest::Approx(r * a).epsilon(2e-3));
    CHECK(proj.d == doctest::Approx(d).epsilon(2e-3));
  }
}

TEST_CASE("projection beyond the ends clamps to the end points") {
  const ReferencePath path(straight_points(0.0, 50.0, 10.0));
  const PathProjection before = path.project(Vec2(-5.0, 1.0));
  CHECK(before.s == doctest::Approx(0.0));
  const PathProjection after = path.project(Vec2(60.0, -1.0));
  CHECK(after.s == doctest::Approx(50.0).epsilon(1e-6));
}

TEST_CASE("far-away points are rejected by the offset budget") {
  const ReferencePath straight(straight_points(0.0, 100.0, 10.0));
  CHECK_THROWS_AS(straight.project(Vec2(50.0, 40.0), 10.0), TransformError);
  CHECK_NOTHROW(straight.project(Vec2(50.0, 40.0), 50.0));
}

TEST_CASE("degenerate inputs are rejected, duplicates are dropped") {
  CHECK_THROWS_AS(ReferencePath({Vec2(1.0, 1.0)}), DomainError);
  CHECK_THROWS_AS(ReferencePath({Vec2(1.0, 1.0), Vec2(1.0, 1.0)}), DomainError);
  // Duplicates inside an otherwise fine sequence are tolerated.
  const ReferencePath path({Vec2(0, 0), Vec2(0, 0), Vec2(10, 0), Vec2(20, 0)});
  CHECK(path.length() == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("origin_s is carried as metadata and does not shift coordinates") {
  const ReferencePath path(straight_points(0.0, 100.0, 10.0), 250.0);
  CHECK(path.origin_s() == 250.0);
  // s remains local to this path regardless of origin.
  CHECK(path.position(10.0).x() == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(path.project(Vec2(30.0, 0.0)).s == doctest::Approx(30.0).epsilon(1e-6));
}

TEST_CASE("curvature derivative approximates the analytic clothoid-like change") {
  // On a circle the curvature is constant, so its derivative vanishes.
  const ReferencePath arc(quarter_circle_points(20.0, 24));
  CHECK(std::fabs(arc.curvature_deriv(0.5 * arc.length())) < 5e-3);
}
