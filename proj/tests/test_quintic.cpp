#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "sdv/quintic.hpp"

using namespace sdv;

namespace {

// Independent coefficient oracle: solve the 6x6 boundary system directly
// instead of using the closed-form expressions under test.
QuinticPoly oracle_solve(const BoundaryState& s, const BoundaryState& e, double T) {
  Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> b;
  // Rows: p(0), p'(0), p''(0), p(T), p'(T), p''(T).
  A(0, 0) = 1.0;
  A(1, 1) = 1.0;
  A(2, 2) = 2.0;
  for (int k = 0; k < 6; ++k) {
    A(3, k) = std::pow(T, k);
    if (k >= 1) A(4, k) = k * std::pow(T, k - 1);
    if (k >= 2) A(5, k) = k * (k - 1) * std::pow(T, k - 2);
  }
  b << s.p, s.v, s.a, e.p, e.v, e.a;
  Eigen::Matrix<double, 6, 1> c = A.fullPivLu().solve(b);
  return QuinticPoly(c);
}

// Adaptive Simpson quadrature, split recursively until the local error
// estimate is below eps.
template <typename F>
double adaptive_simpson(F f, double a, double b, double eps, int depth = 24) {
  const double m = 0.5 * (a + b);
  auto simpson = [&f](double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi));
  };
  const double whole = simpson(a, b);
  const double left = simpson(a, m);
  const double right = simpson(m, b);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * eps) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(f, a, m, 0.5 * eps, depth - 1) +
         adaptive_simpson(f, m, b, 0.5 * eps, depth - 1);
}

}  // namespace

TEST_CASE("quintic hits boundary conditions exactly") {
  std::mt19937 rng(20240817);
  std::uniform_real_distribution<double> pos(-100.0, 100.0);
  std::uniform_real_distribution<double> vel(-30.0, 30.0);
  std::uniform_real_distribution<double> acc(-8.0, 8.0);
  std::uniform_real_distribution<double> dur(0.5, 12.0);
  for (int i = 0; i < 1000; ++i) {
    const BoundaryState s{pos(rng), vel(rng), acc(rng)};
    const BoundaryState e{pos(rng), vel(rng), acc(rng)};
    const double T = dur(rng);
    const QuinticPoly q = solve_quintic(s, e, T);
    CHECK(std::fabs(q.value(0.0) - s.p) < 1e-9);
    CHECK(std::fabs(q.first(0.0) - s.v) < 1e-9);
    CHECK(std::fabs(q.second(0.0) - s.a) < 1e-9);
    CHECK(std::fabs(q.value(T) - e.p) < 1e-9);
    CHECK(std::fabs(q.first(T) - e.v) < 1e-9);
    CHECK(std::fabs(q.second(T) - e.a) < 1e-9);
  }
}

TEST_CASE("quintic matches a direct linear-system solve") {
  std::mt19937 rng(91);
  std::uniform_real_distribution<double> pos(-50.0, 50.0);
  std::uniform_real_distribution<double> vel(-20.0, 20.0);
  std::uniform_real_distribution<double> acc(-6.0, 6.0);
  std::uniform_real_distribution<double> dur(0.8, 10.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const BoundaryState s{pos(rng), vel(rng), acc(rng)};
    const BoundaryState e{pos(rng), vel(rng), acc(rng)};
    const double T = dur(rng);
    const QuinticPoly q = solve_quintic(s, e, T);
    const QuinticPoly ref = oracle_solve(s, e, T);
    for (int j = 0; j < 8; ++j) {
      const double t = frac(rng) * T;
      CHECK(q.value(t) == doctest::Approx(ref.value(t)).epsilon(1e-9));
      CHECK(q.first(t) == doctest::Approx(ref.first(t)).epsilon(1e-9));
    }
  }
}

TEST_CASE("rest-to-rest profile is the normalized smoothstep quintic") {
  // Starting and ending at rest, the interpolant reduces to
  // p0 + dp * (10 u^3 - 15 u^4 + 6 u^5) with u = t / T.
  const double p0 = 3.0, p1 = 42.5, T = 4.0;
  const QuinticPoly q = solve_quintic({p0, 0.0, 0.0}, {p1, 0.0, 0.0}, T);
  for (int i = 0; i <= 40; ++i) {
    const double t = T * i / 40.0;
    const double u = t / T;
    const double expected = p0 + (p1 - p0) * (10.0 * u * u * u - 15.0 * u * u * u * u +
                                              6.0 * u * u * u * u * u);
    CHECK(q.value(t) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("jerk cost equals quadrature of squared third derivative") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> pos(-60.0, 60.0);
  std::uniform_real_distribution<double> vel(-25.0, 25.0);
  std::uniform_real_distribution<double> acc(-5.0, 5.0);
  std::uniform_real_distribution<double> dur(0.5, 9.0);
  for (int i = 0; i < 200; ++i) {
    const BoundaryState s{pos(rng), vel(rng), acc(rng)};
    const BoundaryState e{pos(rng), vel(rng), acc(rng)};
    const double T = dur(rng);
    const QuinticPoly q = solve_quintic(s, e, T);
    const double closed = jerk_cost(q, T);
    const double numeric = adaptive_simpson(
        [&](double t) {
          const double j = q.third(t);
          return j * j;
        },
        0.0, T, 1e-12 * std::max(1.0, closed));
    CHECK(closed == doctest::Approx(numeric).epsilon(1e-9));
  }
}

TEST_CASE("acceleration integral equals quadrature of squared second derivative") {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> pos(-60.0, 60.0);
  std::uniform_real_distribution<double> vel(-25.0, 25.0);
  std::uniform_real_distribution<double> acc(-5.0, 5.0);
  std::uniform_real_distribution<double> dur(0.5, 9.0);
  for (int i = 0; i < 100; ++i) {
    const BoundaryState s{pos(rng), vel(rng), acc(rng)};
    const BoundaryState e{pos(rng), vel(rng), acc(rng)};
    const double T = dur(rng);
    const QuinticPoly q = solve_quintic(s, e, T);
    const double closed = accel_integral(q, T);
    const double numeric = adaptive_simpson(
        [&](double t) {
          const double a = q.second(t);
          return a * a;
        },
        0.0, T, 1e-12 * std::max(1.0, closed));
    CHECK(closed == doctest::Approx(numeric).epsilon(1e-9));
  }
}

TEST_CASE("jerk cost scales as 1/T^5 for a pure position change") {
  // For rest-to-rest moves the cost is 720 dp^2 / T^5; doubling T divides
  // the cost by 32.
  const QuinticPoly a = solve_quintic({0, 0, 0}, {10, 0, 0}, 2.0);
  const QuinticPoly b = solve_quintic({0, 0, 0}, {10, 0, 0}, 4.0);
  CHECK(jerk_cost(a, 2.0) == doctest::Approx(32.0 * jerk_cost(b, 4.0)).epsilon(1e-9));
  CHECK(jerk_cost(a, 2.0) == doctest::Approx(720.0 * 100.0 / 32.0).epsilon(1e-9));
}

TEST_CASE("non-positive duration is rejected") {
  CHECK_THROWS_AS(solve_quintic({0, 0, 0}, {1, 0, 0}, 0.0), DomainError);
  CHECK_THROWS_AS(solve_quintic({0, 0, 0}, {1, 0, 0}, -1.0), DomainError);
}

TEST_CASE("trajectory evaluation is clamped to its time window") {
  FrenetTrajectory tr;
  tr.s_poly = solve_quintic({0, 10, 0}, {50, 10, 0}, 5.0);
  tr.d_poly = solve_quintic({0, 0, 0}, {1, 0, 0}, 5.0);
  tr.duration = 5.0;
  tr.t0 = 2.0;
  CHECK(tr.end_time() == doctest::Approx(7.0));

  const FrenetState at_start = eval_trajectory(tr, 2.0);
  CHECK(at_start.s == doctest::Approx(0.0));
  CHECK(at_start.s_dot == doctest::Approx(10.0));
  const FrenetState mid = eval_trajectory(tr, 4.5);
  CHECK(mid.s == doctest::Approx(tr.s_poly.value(2.5)));
  CHECK(mid.d == doctest::Approx(tr.d_poly.value(2.5)));
  const FrenetState at_end = eval_trajectory(tr, 7.0);
  CHECK(at_end.s == doctest::Approx(50.0));

  // A hair outside either end is tolerated; clearly outside is an error.
  CHECK_NOTHROW(eval_trajectory(tr, 2.0 - 0.5e-9));
  CHECK_NOTHROW(eval_trajectory(tr, 7.0 + 0.5e-9));
  CHECK_THROWS_AS(eval_trajectory(tr, 1.9), DomainError);
  CHECK_THROWS_AS(eval_trajectory(tr, 7.1), DomainError);
}
