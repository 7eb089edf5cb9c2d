// Shared helpers for the test suites: standard charts/metrics, the analytic
// great-circle oracle for the stereographic sphere chart, and an independent
// finite-difference Hessian oracle.
#pragma once

#include <cmath>
#include <random>

#include "finsler/metric.hpp"

namespace finsler::testing {

inline Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

inline Box box2(double lo, double hi) {
  return Box(vec2(lo, lo), vec2(hi, hi));
}

inline Chart chart2(double lo = -2.0, double hi = 2.0) {
  return Chart(box2(lo, hi));
}

inline FinslerMetric euclidean2(double lo = -2.0, double hi = 2.0) {
  return FinslerMetric::euclidean(chart2(lo, hi));
}

inline FinslerMetric randers_b(double bx, double by, double lo = -4.0,
                               double hi = 4.0,
                               DiffBackend backend = DiffBackend::Analytic) {
  auto a = std::make_shared<ConstantMatrixField>(Mat::Identity(2, 2));
  auto b = std::make_shared<ConstantOneFormField>(vec2(bx, by));
  return FinslerMetric::randers(chart2(lo, hi), a, b, backend);
}

inline FinslerMetric sphere_chart_metric(double lo = -1.5, double hi = 1.5) {
  auto field = std::make_shared<StereographicSphereField>(2, 1.0);
  return FinslerMetric::riemannian(Chart(box2(lo, hi)), field);
}

// ---- unit-sphere oracle in stereographic coordinates --------------------
// The chart metric 4/(1+|x|^2)^2 |dx|^2 is the pullback of the round unit
// sphere under X(x) = (2x, 1-|x|^2)/(1+|x|^2); geodesics are great circles.

inline Eigen::Vector3d sphere_from_chart(const Vec& x) {
  double s = 1.0 + x.squaredNorm();
  return {2.0 * x[0] / s, 2.0 * x[1] / s, (1.0 - x.squaredNorm()) / s};
}

inline Vec chart_from_sphere(const Eigen::Vector3d& X) {
  return vec2(X[0] / (1.0 + X[2]), X[1] / (1.0 + X[2]));
}

inline Eigen::Vector3d sphere_tangent(const Vec& x, const Vec& v) {
  double s = 1.0 + x.squaredNorm();
  double ds = 2.0 * x.dot(v);
  Eigen::Vector3d X = sphere_from_chart(x);
  Eigen::Vector3d dX;
  dX[0] = 2.0 * v[0] / s - 2.0 * x[0] * ds / (s * s);
  dX[1] = 2.0 * v[1] / s - 2.0 * x[1] * ds / (s * s);
  dX[2] = -ds / s - (1.0 - x.squaredNorm()) * ds / (s * s);
  return dX;
}

// Position at arclength t of the unit-speed great circle with initial chart
// data (x0, v0); v0 need not be unit, only its direction is used.
inline Vec great_circle_chart(const Vec& x0, const Vec& v0, double t) {
  Eigen::Vector3d X = sphere_from_chart(x0);
  Eigen::Vector3d T = sphere_tangent(x0, v0);
  T -= T.dot(X) * X;
  T.normalize();
  Eigen::Vector3d Xt = std::cos(t) * X + std::sin(t) * T;
  return chart_from_sphere(Xt);
}

// ---- independent half-Hessian oracle -------------------------------------

inline Mat fd_half_hessian_sq(const FinslerMetric& metric, const Vec& p,
                              const Vec& v, double h = 1e-5) {
  int n = static_cast<int>(v.size());
  auto half_sq = [&](const Vec& w) {
    double f = metric.evaluate(p, w);
    return 0.5 * f * f;
  };
  Mat out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Vec a = v, b = v, c = v, d = v;
      a[i] += h; a[j] += h;
      b[i] += h; b[j] -= h;
      c[i] -= h; c[j] += h;
      d[i] -= h; d[j] -= h;
      out(i, j) = (half_sq(a) - half_sq(b) - half_sq(c) + half_sq(d)) /
                  (4.0 * h * h);
    }
  }
  return out;
}

inline std::mt19937_64 test_rng(std::uint64_t seed = 42) {
  return std::mt19937_64(seed);
}

inline Vec random_unit2(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  double t = angle(rng);
  return vec2(std::cos(t), std::sin(t));
}

}  // namespace finsler::testing
