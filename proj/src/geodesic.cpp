#include "finsler/geodesic.hpp"

#include <algorithm>
#include <cmath>

namespace finsler {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187,
                 A53 = 64448.0 / 6561, A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                 B5 = -2187.0 / 6784, B6 = 11.0 / 84;
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;
// Fourth-order dense-output weights; the deviation of the cubic Hermite
// interpolant from this extension bounds the interpolation error per step.
constexpr double D1 = -12715105075.0 / 11282082432.0,
                 D3 = 87487479700.0 / 32700410799.0,
                 D4 = -10690763975.0 / 1880347072.0,
                 D5 = 701980252875.0 / 199316789632.0,
                 D6 = -1453857185.0 / 822651844.0,
                 D7 = 69997945.0 / 29380423.0;

struct State {
  Vec x, v;
};

State axpy(const State& y, double h, const State& d) {
  return {y.x + h * d.x, y.v + h * d.v};
}

Vec hermite(double t, double t0, double t1, const Vec& y0, const Vec& y1,
            const Vec& d0, const Vec& d1) {
  double h = t1 - t0;
  double s = (t - t0) / h;
  double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 +
         (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
}

// 4-point Gauss-Legendre nodes/weights on [0, 1].
constexpr double GL_X[4] = {0.06943184420297371, 0.33000947820757187,
                            0.66999052179242813, 0.93056815579702623};
constexpr double GL_W[4] = {0.17392742256872692, 0.32607257743127305,
                            0.32607257743127305, 0.17392742256872692};

double curve_quadrature(const FinslerMetric& metric, const Curve& curve,
                        bool squared) {
  const auto& times = curve.times();
  const auto& pts = curve.points();
  double total = 0.0;
  for (size_t k = 0; k + 1 < pts.size(); ++k) {
    double dt = times[k + 1] - times[k];
    Vec vel = (pts[k + 1] - pts[k]) / dt;
    double seg = 0.0;
    for (int q = 0; q < 4; ++q) {
      Vec pos = pts[k] + GL_X[q] * (pts[k + 1] - pts[k]);
      double f = metric.evaluate(pos, vel);
      seg += GL_W[q] * (squared ? f * f : f);
    }
    total += seg * dt;
  }
  return total;
}

}  // namespace

Curve::Curve(std::vector<double> times, std::vector<Vec> points)
    : times_(std::move(times)), points_(std::move(points)) {
  if (times_.size() != points_.size() || times_.size() < 2)
    throw DomainError("curve needs at least 2 samples with matching times");
  for (size_t i = 0; i + 1 < times_.size(); ++i)
    if (!(times_[i] < times_[i + 1]))
      throw DomainError("curve times must be strictly increasing");
}

Curve Curve::straight(const Vec& p, const Vec& q, int segments, double t0,
                      double t1) {
  std::vector<double> times;
  std::vector<Vec> pts;
  for (int i = 0; i <= segments; ++i) {
    double s = static_cast<double>(i) / segments;
    times.push_back(t0 + s * (t1 - t0));
    pts.push_back(p + s * (q - p));
  }
  return Curve(std::move(times), std::move(pts));
}

Vec Curve::position(double t) const {
  if (t <= times_.front()) return points_.front();
  if (t >= times_.back()) return points_.back();
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  size_t k = static_cast<size_t>(it - times_.begin()) - 1;
  double s = (t - times_[k]) / (times_[k + 1] - times_[k]);
  return points_[k] + s * (points_[k + 1] - points_[k]);
}

Vec geodesic_acceleration(const FinslerMetric& metric, const Vec& x,
                          const Vec& v, bool check_domain) {
  MetricDerivatives d = metric.derivatives(x, v, check_domain);
  Vec rhs = d.position_gradient - d.mixed * v;
  Eigen::LLT<Mat> llt(2.0 * d.tensor);
  if (llt.info() != Eigen::Success)
    throw NonConvexMetricError(
        "fundamental tensor not invertible along the geodesic");
  return llt.solve(rhs);
}

GeodesicPath shoot(const FinslerMetric& metric, const Vec& p0, const Vec& v0,
                   double t_max, const ShootOptions& opts) {
  metric.chart().require_point(p0);
  metric.chart().require_vector_dim(v0);
  if (v0.norm() < metric.chart().zero_threshold())
    throw DegenerateVectorError("shoot requires a nonzero initial velocity");
  if (!(t_max > 0.0)) throw DomainError("shoot requires t_max > 0");

  auto rhs = [&](const State& y) -> State {
    return {y.v, geodesic_acceleration(metric, y.x, y.v, false)};
  };

  GeodesicPath path;
  path.initial_speed_ = metric.evaluate(p0, v0);

  State y{p0, v0};
  State f = rhs(y);
  path.nodes_.push_back({0.0, y.x, y.v, f.x, f.v});

  double max_step = opts.max_step > 0 ? opts.max_step : t_max / 4.0;
  double h = opts.initial_step > 0 ? opts.initial_step : t_max * 1e-3;
  h = std::min(h, max_step);
  double t = 0.0;
  long steps = 0;

  auto scaled_error = [&](const State& err, const State& y0,
                          const State& y1) {
    double acc = 0.0;
    int n = static_cast<int>(err.x.size());
    for (int i = 0; i < n; ++i) {
      double sx = opts.abs_tol +
                  opts.rel_tol * std::max(std::abs(y0.x[i]), std::abs(y1.x[i]));
      double sv = opts.abs_tol +
                  opts.rel_tol * std::max(std::abs(y0.v[i]), std::abs(y1.v[i]));
      acc += (err.x[i] / sx) * (err.x[i] / sx);
      acc += (err.v[i] / sv) * (err.v[i] / sv);
    }
    return std::sqrt(acc / (2 * n));
  };

  while (t < t_max) {
    if (++steps > opts.max_steps)
      throw Error("geodesic integrator exceeded the step budget");
    h = std::min(h, t_max - t);

    State k1 = f;
    State k2 = rhs(axpy(y, h * A21, k1));
    State k3 = rhs(axpy(axpy(y, h * A31, k1), h * A32, k2));
    State k4 = rhs(axpy(axpy(axpy(y, h * A41, k1), h * A42, k2), h * A43, k3));
    State k5 = rhs(axpy(
        axpy(axpy(axpy(y, h * A51, k1), h * A52, k2), h * A53, k3), h * A54,
        k4));
    State k6 = rhs(axpy(
        axpy(axpy(axpy(axpy(y, h * A61, k1), h * A62, k2), h * A63, k3),
             h * A64, k4),
        h * A65, k5));
    State y1{
        y.x + h * (B1 * k1.x + B3 * k3.x + B4 * k4.x + B5 * k5.x + B6 * k6.x),
        y.v + h * (B1 * k1.v + B3 * k3.v + B4 * k4.v + B5 * k5.v + B6 * k6.v)};
    State k7 = rhs(y1);
    State err{h * (E1 * k1.x + E3 * k3.x + E4 * k4.x + E5 * k5.x + E6 * k6.x +
                   E7 * k7.x),
              h * (E1 * k1.v + E3 * k3.v + E4 * k4.v + E5 * k5.v + E6 * k6.v +
                   E7 * k7.v)};
    double enorm = scaled_error(err, y, y1);
    // Hermite-vs-dense deviation peaks at mid-step with weight 1/16.
    State interp_err{
        (h / 16.0) * (D1 * k1.x + D3 * k3.x + D4 * k4.x + D5 * k5.x +
                      D6 * k6.x + D7 * k7.x),
        (h / 16.0) * (D1 * k1.v + D3 * k3.v + D4 * k4.v + D5 * k5.v +
                      D6 * k6.v + D7 * k7.v)};
    double inorm = scaled_error(interp_err, y, y1);

    if (enorm <= 1.0 && inorm <= 1.0) {
      double t_new = t + h;
      path.max_error_estimate_ = std::max(
          path.max_error_estimate_, std::max(err.x.norm(), err.v.norm()));
      if (!metric.chart().contains(y1.x)) {
        // Bisect the dense output for the boundary crossing time.
        const auto& prev = path.nodes_.back();
        double lo = t, hi = t_new;
        while (hi - lo > opts.domain_exit_tol) {
          double mid = 0.5 * (lo + hi);
          Vec xm = hermite(mid, t, t_new, prev.x, y1.x, prev.ax, k7.x);
          if (metric.chart().contains(xm))
            lo = mid;
          else
            hi = mid;
        }
        double te = lo;
        Vec xe = hermite(te, t, t_new, prev.x, y1.x, prev.ax, k7.x);
        Vec ve = hermite(te, t, t_new, prev.v, y1.v, prev.av, k7.v);
        State fe = rhs({xe, ve});
        path.nodes_.push_back({te, xe, ve, fe.x, fe.v});
        path.termination_ = Termination::LeftChartDomain;
        path.t_exit_ = te;
        return path;
      }
      path.nodes_.push_back({t_new, y1.x, y1.v, k7.x, k7.v});
      t = t_new;
      y = y1;
      f = k7;  // FSAL
      double f5 = enorm > 1e-12 ? 0.9 * std::pow(enorm, -0.2) : 5.0;
      double f4 = inorm > 1e-12 ? 0.9 * std::pow(inorm, -0.25) : 5.0;
      h = std::min(h * std::min(std::min(f5, f4), 5.0), max_step);
    } else {
      double worse = std::max(enorm, inorm);
      double factor = std::max(0.9 * std::pow(worse, -0.2), 0.2);
      h *= factor;
      if (h < 1e-15 * std::max(1.0, t_max))
        throw Error("geodesic integrator step underflow");
    }
  }
  path.termination_ = Termination::ReachedFinalTime;
  path.t_exit_ = t_max;
  return path;
}

namespace {

const GeodesicPath::Node* bracket_node(const std::vector<GeodesicPath::Node>& nodes,
                                       double t) {
  // Returns the node starting the Hermite segment containing t.
  if (t <= nodes.front().t) return &nodes.front();
  for (size_t i = 0; i + 1 < nodes.size(); ++i)
    if (t <= nodes[i + 1].t) return &nodes[i];
  return &nodes[nodes.size() - 2];
}

}  // namespace

Vec GeodesicPath::position(double t) const {
  if (nodes_.size() == 1 || t <= nodes_.front().t) return nodes_.front().x;
  if (t >= nodes_.back().t) return nodes_.back().x;
  const Node* a = bracket_node(nodes_, t);
  const Node* b = a + 1;
  return hermite(t, a->t, b->t, a->x, b->x, a->ax, b->ax);
}

Vec GeodesicPath::velocity(double t) const {
  if (nodes_.size() == 1 || t <= nodes_.front().t) return nodes_.front().v;
  if (t >= nodes_.back().t) return nodes_.back().v;
  const Node* a = bracket_node(nodes_, t);
  const Node* b = a + 1;
  return hermite(t, a->t, b->t, a->v, b->v, a->av, b->av);
}

Curve GeodesicPath::to_curve(int samples) const {
  std::vector<double> times;
  std::vector<Vec> pts;
  double t1 = t_end();
  for (int i = 0; i <= samples; ++i) {
    double t = t1 * i / samples;
    times.push_back(t);
    pts.push_back(position(t));
  }
  return Curve(std::move(times), std::move(pts));
}

Vec exp_map(const FinslerMetric& metric, const Vec& p, const Vec& v,
            const ShootOptions& opts) {
  GeodesicPath path = shoot(metric, p, v, 1.0, opts);
  if (path.left_domain())
    throw HorizonError("geodesic left the chart before t = 1 (t_exit = " +
                           format_double(path.t_exit()) + ")",
                       path.t_exit());
  return path.position(1.0);
}

Vec d_exp(const FinslerMetric& metric,
          const std::function<TangentVector(double)>& variation, double delta,
          const ShootOptions& opts) {
  TangentVector plus = variation(delta);
  TangentVector minus = variation(-delta);
  Vec ep = exp_map(metric, plus.point, plus.components, opts);
  Vec em = exp_map(metric, minus.point, minus.components, opts);
  return (ep - em) / (2.0 * delta);
}

Vec d_exp(const FinslerMetric& metric, const Vec& p, const Vec& v,
          const Vec& w, double delta, const ShootOptions& opts) {
  return d_exp(
      metric,
      [&](double s) {
        return TangentVector{p, v + s * w};
      },
      delta, opts);
}

double length(const FinslerMetric& metric, const Curve& curve) {
  return curve_quadrature(metric, curve, false);
}

double energy(const FinslerMetric& metric, const Curve& curve) {
  return curve_quadrature(metric, curve, true);
}

BvpResult solve_bvp(const FinslerMetric& metric, const Vec& p, const Vec& q,
                    const BvpOptions& opts) {
  metric.chart().require_point(p);
  metric.chart().require_point(q);
  int n = metric.chart().dim();
  double scale = std::max((q - p).norm(), 1e-12);

  Vec v = q - p;
  auto residual = [&](const Vec& vel) -> Vec {
    return exp_map(metric, p, vel, opts.shoot) - q;
  };

  Vec r = residual(v);
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (r.norm() <= opts.tolerance * scale)
      return {v, r.norm(), it};
    // Finite-difference Jacobian of the endpoint w.r.t. the velocity.
    Mat J(n, n);
    double h = 1e-6 * std::max(1.0, v.norm());
    for (int i = 0; i < n; ++i) {
      Vec vp = v, vm = v;
      vp[i] += h;
      vm[i] -= h;
      J.col(i) = (residual(vp) - residual(vm)) / (2.0 * h);
    }
    Vec step = J.fullPivLu().solve(-r);
    double damping = 1.0;
    bool improved = false;
    for (int half = 0; half < 25; ++half) {
      Vec v_trial = v + damping * step;
      try {
        Vec r_trial = residual(v_trial);
        if (r_trial.norm() < r.norm()) {
          v = v_trial;
          r = r_trial;
          improved = true;
          break;
        }
      } catch (const HorizonError&) {
        // trial left the chart; shrink
      }
      damping *= 0.5;
    }
    if (!improved)
      throw BvpError("two-point geodesic solve stalled at residual " +
                     format_double(r.norm()));
  }
  if (r.norm() <= opts.tolerance * scale)
    return {v, r.norm(), opts.max_iterations};
  throw BvpError("two-point geodesic solve did not converge (residual " +
                 format_double(r.norm()) + ")");
}

}  // namespace finsler
