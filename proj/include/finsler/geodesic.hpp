// Geodesics as solutions of the Euler-Lagrange equations of the energy
// functional: adaptive RK45 shooting with dense output, the exponential map
// and its finite-difference differential, curve length/energy, and a local
// two-point solver.
#pragma once

#include <functional>
#include <vector>

#include "finsler/metric.hpp"

namespace finsler {

// Piecewise-linear curve given by ordered time samples.
class Curve {
 public:
  Curve(std::vector<double> times, std::vector<Vec> points);

  static Curve straight(const Vec& p, const Vec& q, int segments,
                        double t0 = 0.0, double t1 = 1.0);

  double t_start() const { return times_.front(); }
  double t_end() const { return times_.back(); }
  int segments() const { return static_cast<int>(times_.size()) - 1; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Vec>& points() const { return points_; }
  Vec position(double t) const;

 private:
  std::vector<double> times_;
  std::vector<Vec> points_;
};

struct ShootOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  double initial_step = 0.0;   // 0 = automatic
  double max_step = 0.0;       // 0 = span / 4
  long max_steps = 500000;
  double domain_exit_tol = 1e-10;  // bisection width in t for the exit time
};

enum class Termination { ReachedFinalTime, LeftChartDomain };

// Integrated geodesic with cubic Hermite dense output between accepted steps.
class GeodesicPath {
 public:
  struct Node {
    double t;
    Vec x;
    Vec v;
    Vec ax;  // dx/dt at the node (= v)
    Vec av;  // dv/dt at the node
  };

  double t_end() const { return nodes_.back().t; }
  Termination termination() const { return termination_; }
  bool left_domain() const {
    return termination_ == Termination::LeftChartDomain;
  }
  double t_exit() const { return t_exit_; }

  Vec position(double t) const;
  Vec velocity(double t) const;

  const Vec& initial_point() const { return nodes_.front().x; }
  const Vec& initial_velocity() const { return nodes_.front().v; }
  const std::vector<Node>& nodes() const { return nodes_; }
  double initial_speed() const { return initial_speed_; }
  double max_error_estimate() const { return max_error_estimate_; }

  Curve to_curve(int samples) const;

 private:
  friend GeodesicPath shoot(const FinslerMetric&, const Vec&, const Vec&,
                            double, const ShootOptions&);
  std::vector<Node> nodes_;
  Termination termination_ = Termination::ReachedFinalTime;
  double t_exit_ = 0.0;
  double initial_speed_ = 0.0;
  double max_error_estimate_ = 0.0;
};

// Acceleration of the energy Euler-Lagrange system at (x, v):
//   2 g_v a = d(F^2)/dx - [d^2(F^2)/dv dx] v.
Vec geodesic_acceleration(const FinslerMetric& metric, const Vec& x,
                          const Vec& v, bool check_domain = true);

GeodesicPath shoot(const FinslerMetric& metric, const Vec& p0, const Vec& v0,
                   double t_max, const ShootOptions& opts = {});

// gamma_v(1). Throws HorizonError with the exit time if the geodesic leaves
// the chart before t = 1.
Vec exp_map(const FinslerMetric& metric, const Vec& p, const Vec& v,
            const ShootOptions& opts = {});

// Central finite difference of exp along a curve s -> (p(s), v(s)) in a
// caller-supplied parametrization; returns d/ds exp(p(s), v(s)) at s = 0.
Vec d_exp(const FinslerMetric& metric,
          const std::function<TangentVector(double)>& variation,
          double delta = 1e-5, const ShootOptions& opts = {});

// Fixed-base fiber variation v + s w.
Vec d_exp(const FinslerMetric& metric, const Vec& p, const Vec& v,
          const Vec& w, double delta = 1e-5, const ShootOptions& opts = {});

// Composite Gauss-Legendre quadrature of F (resp. F^2) along the curve.
double length(const FinslerMetric& metric, const Curve& curve);
double energy(const FinslerMetric& metric, const Curve& curve);

struct BvpOptions {
  int max_iterations = 40;
  double tolerance = 1e-10;  // endpoint residual, relative to |q - p|
  ShootOptions shoot;
};

struct BvpResult {
  Vec initial_velocity;  // exp(p, v) = q
  double endpoint_error = 0.0;
  int iterations = 0;
};

// Damped Newton on v -> exp_p(v) - q. Intended for short, locally unique
// connections; throws BvpError when it cannot converge.
BvpResult solve_bvp(const FinslerMetric& metric, const Vec& p, const Vec& q,
                    const BvpOptions& opts = {});

}  // namespace finsler
