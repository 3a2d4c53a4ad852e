#pragma once

#include <Eigen/Dense>

#include "sdv/types.hpp"

namespace sdv {

// One-dimensional boundary tuple (value, first and second derivative).
struct BoundaryState {
  double p = 0.0;
  double v = 0.0;
  double a = 0.0;
};

// Degree-5 polynomial p(t) = c0 + c1 t + ... + c5 t^5.
class QuinticPoly {
 public:
  using Coeffs = Eigen::Matrix<double, 6, 1>;

  QuinticPoly() : c_(Coeffs::Zero()) {}
  explicit QuinticPoly(const Coeffs& c) : c_(c) {}

  const Coeffs& coeffs() const { return c_; }
  double& operator[](int i) { return c_[i]; }
  double operator[](int i) const { return c_[i]; }

  double value(double t) const;
  double first(double t) const;
  double second(double t) const;
  double third(double t) const;

 private:
  Coeffs c_;
};

// Jerk-minimal connection between two boundary tuples over duration T.
// The quintic is the unique C^2 interpolant minimizing the integral of
// squared jerk; coefficients come from the closed-form solution of the
// boundary system with time scaled by T for conditioning.
// Throws DomainError if T <= 0.
QuinticPoly solve_quintic(const BoundaryState& start, const BoundaryState& end, double T);

// Closed-form integral of squared jerk over [0, T].
double jerk_cost(const QuinticPoly& poly, double T);

// Closed-form integral of squared acceleration over [0, T].
double accel_integral(const QuinticPoly& poly, double T);

// A motion segment as a pair of quintics over the same duration, anchored
// at absolute time t0. Evaluation is only defined for t0 <= t <= t0 + T.
struct FrenetTrajectory {
  QuinticPoly s_poly;
  QuinticPoly d_poly;
  double duration = 0.0;
  double t0 = 0.0;

  double end_time() const { return t0 + duration; }
};

// State at absolute time t by analytic differentiation of both polynomials.
// Throws DomainError when t is outside [t0, t0 + T].
FrenetState eval_trajectory(const FrenetTrajectory& traj, double t);

}  // namespace sdv
