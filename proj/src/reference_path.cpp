#include "sdv/reference_path.hpp"

#include <algorithm>
#include <cmath>

namespace sdv {
namespace {

constexpr double kTableStep = 0.1;    // target arc-length table spacing
constexpr double kMinPointGap = 1e-6; // points closer than this are merged

// 4-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGaussX[4] = {-0.8611363115940526, -0.3399810435848563,
                               0.3399810435848563, 0.8611363115940526};
constexpr double kGaussW[4] = {0.3478548451374538, 0.6521451548625461,
                               0.6521451548625461, 0.3478548451374538};

// Natural cubic spline through (u_i, y_i): solves the tridiagonal system for
// interior second derivatives (zero at both ends) with the Thomas algorithm.
void fit_natural(const std::vector<double>& u, const std::vector<double>& y,
                 std::vector<double>* a, std::vector<double>* b,
                 std::vector<double>* c, std::vector<double>* d) {
  const int n = static_cast<int>(u.size());
  std::vector<double> m(n, 0.0);
  if (n > 2) {
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) {
      const double h0 = u[i] - u[i - 1];
      const double h1 = u[i + 1] - u[i];
      diag[i] = 2.0 * (h0 + h1);
      upper[i] = h1;
      rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    for (int i = 2; i + 1 < n; ++i) {
      const double w = (u[i] - u[i - 1]) / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    for (int i = n - 2; i >= 1; --i) {
      m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
  }
  const int k = n - 1;
  a->resize(k);
  b->resize(k);
  c->resize(k);
  d->resize(k);
  for (int i = 0; i < k; ++i) {
    const double h = u[i + 1] - u[i];
    (*a)[i] = y[i];
    (*b)[i] = (y[i + 1] - y[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0;
    (*c)[i] = m[i] / 2.0;
    (*d)[i] = (m[i + 1] - m[i]) / (6.0 * h);
  }
}

}  // namespace

double ReferencePath::Spline1d::value(int i, double h) const {
  return a[i] + h * (b[i] + h * (c[i] + h * d[i]));
}

double ReferencePath::Spline1d::deriv(int i, double h) const {
  return b[i] + h * (2.0 * c[i] + h * 3.0 * d[i]);
}

double ReferencePath::Spline1d::deriv2(int i, double h) const {
  return 2.0 * c[i] + h * 6.0 * d[i];
}

ReferencePath::ReferencePath(const std::vector<Vec2>& points, double origin_s)
    : origin_s_(origin_s) {
  std::vector<Vec2> pts;
  pts.reserve(points.size());
  for (const Vec2& p : points) {
    if (pts.empty() || (p - pts.back()).norm() > kMinPointGap) pts.push_back(p);
  }
  if (pts.size() < 2) {
    throw DomainError("reference path needs at least 2 distinct points");
  }

  const int n = static_cast<int>(pts.size());
  knots_.resize(n);
  std::vector<double> xs(n), ys(n);
  knots_[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    xs[i] = pts[i].x();
    ys[i] = pts[i].y();
    if (i > 0) knots_[i] = knots_[i - 1] + (pts[i] - pts[i - 1]).norm();
  }
  fit_natural(knots_, xs, &sx_.a, &sx_.b, &sx_.c, &sx_.d);
  fit_natural(knots_, ys, &sy_.a, &sy_.b, &sy_.c, &sy_.d);

  const double total_u = knots_.back();
  const int steps = std::max(1, static_cast<int>(std::ceil(total_u / kTableStep)));
  const double du = total_u / steps;
  table_u_.resize(steps + 1);
  table_s_.resize(steps + 1);
  table_p_.resize(steps + 1);
  table_u_[0] = 0.0;
  table_s_[0] = 0.0;
  auto speed_at = [this](double u) {
    Vec2 r1;
    derivatives(u, &r1, nullptr);
    return r1.norm();
  };
  for (int j = 1; j <= steps; ++j) {
    const double ua = table_u_[j - 1];
    const double ub = (j == steps) ? total_u : ua + du;
    const double half = 0.5 * (ub - ua);
    const double midp = 0.5 * (ua + ub);
    double len = 0.0;
    for (int g = 0; g < 4; ++g) len += kGaussW[g] * speed_at(midp + half * kGaussX[g]);
    table_u_[j] = ub;
    table_s_[j] = table_s_[j - 1] + len * half;
  }
  length_ = table_s_.back();
  for (int j = 0; j <= steps; ++j) {
    const int i = segment_index(table_u_[j]);
    const double h = table_u_[j] - knots_[i];
    table_p_[j] = Vec2(sx_.value(i, h), sy_.value(i, h));
  }
}

int ReferencePath::segment_index(double u) const {
  const int n = static_cast<int>(knots_.size());
  auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
  int i = static_cast<int>(it - knots_.begin()) - 1;
  return std::clamp(i, 0, n - 2);
}

void ReferencePath::derivatives(double u, Vec2* r1, Vec2* r2) const {
  const int i = segment_index(u);
  const double h = u - knots_[i];
  if (r1) *r1 = Vec2(sx_.deriv(i, h), sy_.deriv(i, h));
  if (r2) *r2 = Vec2(sx_.deriv2(i, h), sy_.deriv2(i, h));
}

double ReferencePath::u_at(double s) const {
  s = std::clamp(s, 0.0, length_);
  auto it = std::upper_bound(table_s_.begin(), table_s_.end(), s);
  int j = static_cast<int>(it - table_s_.begin()) - 1;
  j = std::clamp(j, 0, static_cast<int>(table_s_.size()) - 2);
  const double s0 = table_s_[j];
  const double s1 = table_s_[j + 1];
  const double u0 = table_u_[j];
  const double u1 = table_u_[j + 1];
  double u = (s1 > s0) ? u0 + (s - s0) / (s1 - s0) * (u1 - u0) : u0;

  // One local Newton correction; the residual integral runs from the table
  // anchor so its quadrature error over <= one step is negligible.
  for (int it_n = 0; it_n < 2; ++it_n) {
    const double half = 0.5 * (u - u0);
    const double midp = 0.5 * (u + u0);
    double len = 0.0;
    for (int g = 0; g < 4; ++g) {
      Vec2 r1;
      derivatives(midp + half * kGaussX[g], &r1, nullptr);
      len += kGaussW[g] * r1.norm();
    }
    const double resid = s0 + len * half - s;
    Vec2 r1;
    derivatives(u, &r1, nullptr);
    const double sp = r1.norm();
    if (sp <= 0.0) break;
    u -= resid / sp;
    u = std::clamp(u, u0, knots_.back());
  }
  return u;
}

Vec2 ReferencePath::position(double s) const {
  const double u = u_at(s);
  const int i = segment_index(u);
  const double h = u - knots_[i];
  return {sx_.value(i, h), sy_.value(i, h)};
}

Vec2 ReferencePath::tangent(double s) const {
  Vec2 r1;
  derivatives(u_at(s), &r1, nullptr);
  return r1.normalized();
}

Vec2 ReferencePath::normal(double s) const {
  const Vec2 t = tangent(s);
  return {-t.y(), t.x()};
}

double ReferencePath::heading(double s) const {
  Vec2 r1;
  derivatives(u_at(s), &r1, nullptr);
  return std::atan2(r1.y(), r1.x());
}

double ReferencePath::curvature(double s) const {
  Vec2 r1, r2;
  derivatives(u_at(s), &r1, &r2);
  const double n = r1.norm();
  return (r1.x() * r2.y() - r1.y() * r2.x()) / (n * n * n);
}

double ReferencePath::curvature_deriv(double s) const {
  const double h = 0.1;
  const double s1 = std::min(length_, s + h);
  const double s0 = std::max(0.0, s - h);
  if (s1 - s0 < 1e-9) return 0.0;
  return (curvature(s1) - curvature(s0)) / (s1 - s0);
}

PathProjection ReferencePath::project(const Vec2& p, double max_offset) const {
  int best = 0;
  double best_d2 = (p - table_p_[0]).squaredNorm();
  for (int j = 1; j < static_cast<int>(table_p_.size()); ++j) {
    const double d2 = (p - table_p_[j]).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = j;
    }
  }

  // Newton on the orthogonality residual g(s) = (p - r(s)) . t(s); its slope
  // is -(1 - kappa d), positive-definite inside the valid tube around the path.
  double s = table_s_[best];
  for (int it = 0; it < 25; ++it) {
    const Vec2 r = position(s);
    const Vec2 t = tangent(s);
    const Vec2 nrm(-t.y(), t.x());
    const double g = (p - r).dot(t);
    const double dd = (p - r).dot(nrm);
    const double slope = -(1.0 - curvature(s) * dd);
    if (std::abs(g) < 1e-10) break;
    double step = (slope < -1e-6) ? g / (-slope) : g;  // fall back to unit slope
    s += step;
    if (s <= 0.0) {
      s = 0.0;
      if (g < 0.0) break;  // pulled outward past the start
    } else if (s >= length_) {
      s = length_;
      if (g > 0.0) break;  // pulled outward past the end
    }
    if (std::abs(step) < 1e-11) break;
  }

  const Vec2 r = position(s);
  const Vec2 t = tangent(s);
  const Vec2 nrm(-t.y(), t.x());
  PathProjection proj;
  proj.s = s;
  proj.d = (p - r).dot(nrm);
  if (std::abs(proj.d) > max_offset) {
    throw TransformError("point too far from reference path (|d| = " +
                         std::to_string(std::abs(proj.d)) + " m)");
  }
  if (std::abs(curvature(s) * proj.d) >= 1.0) {
    throw TransformError("projection onto reference path is ambiguous (curvature * offset >= 1)");
  }
  return proj;
}

}  // namespace sdv
