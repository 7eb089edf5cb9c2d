#include "finsler/normal_geometry.hpp"

#include <cmath>

namespace finsler {

namespace {

// Deterministic sign: first component of magnitude above a relative cutoff
// is made positive.
void canonical_sign(Vec& v) {
  double scale = v.cwiseAbs().maxCoeff();
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-8 * scale) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

double orthogonality_residual(const FinslerMetric& metric, const Vec& p,
                              const Vec& v, const std::vector<Vec>& tangents) {
  if (tangents.empty()) return 0.0;
  Vec ell = metric.legendre_components(p, v);  // g_v(v, .)
  double f = metric.evaluate(p, v);
  double worst = 0.0;
  for (const Vec& w : tangents)
    worst = std::max(worst, std::abs(ell.dot(w)) / (f * w.norm()));
  return worst;
}

// Directions of the unit sphere S^{m-1} at an angular resolution; m = 1
// yields the two points, m = 2 a circle sweep, higher m a lat-long product.
std::vector<Vec> sphere_directions(int m, int resolution) {
  std::vector<Vec> dirs;
  if (m == 1) {
    Vec plus(1), minus(1);
    plus << 1.0;
    minus << -1.0;
    dirs.push_back(plus);
    dirs.push_back(minus);
    return dirs;
  }
  if (m == 2) {
    for (int i = 0; i < resolution; ++i) {
      double t = 2.0 * M_PI * i / resolution;
      Vec d(2);
      d << std::cos(t), std::sin(t);
      dirs.push_back(d);
    }
    return dirs;
  }
  // Recursive lat-long: d = (cos(phi) * lower_sphere, sin(phi)).
  int lat = std::max(2, resolution / 2);
  for (int j = 1; j < lat; ++j) {
    double phi = M_PI * j / lat - M_PI / 2;
    for (const Vec& lower : sphere_directions(m - 1, resolution)) {
      Vec d(m);
      d.head(m - 1) = std::cos(phi) * lower;
      d[m - 1] = std::sin(phi);
      dirs.push_back(d);
    }
  }
  Vec north = Vec::Zero(m), south = Vec::Zero(m);
  north[m - 1] = 1.0;
  south[m - 1] = -1.0;
  dirs.push_back(north);
  dirs.push_back(south);
  return dirs;
}

// n x m matrix with orthonormal columns spanning the annihilator at u.
Mat annihilator_frame(const Submanifold& sub, const Vec& u) {
  int n = sub.ambient_dim();
  int k = sub.param_dim();
  int m = n - k;
  if (k == 0) return Mat::Identity(n, n);
  Mat t = sub.tangent_matrix(u);  // k x n
  Eigen::JacobiSVD<Mat> svd(t, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(m);
}

}  // namespace

Covector legendre(const FinslerMetric& metric, const Vec& p, const Vec& v) {
  return {p, metric.legendre_components(p, v)};
}

Vec legendre_inverse(const FinslerMetric& metric, const Vec& p, const Vec& xi,
                     const LegendreInverseOptions& opts) {
  metric.chart().require_point(p);
  double xi_norm = xi.norm();
  if (xi_norm < metric.chart().zero_threshold())
    throw DegenerateVectorError("legendre_inverse requires a nonzero covector");

  Vec vhat = xi / xi_norm;
  Mat g0 = metric.fundamental_tensor(p, vhat);
  Vec v = g0.llt().solve(xi);

  Vec r = metric.legendre_components(p, v) - xi;
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (r.norm() <= opts.tolerance * xi_norm) return v;
    Mat g = metric.fundamental_tensor(p, v);
    Vec step = g.llt().solve(-r);
    double damping = 1.0;
    bool improved = false;
    for (int half = 0; half < 30; ++half) {
      Vec v_trial = v + damping * step;
      if (v_trial.norm() >= metric.chart().zero_threshold()) {
        Vec r_trial = metric.legendre_components(p, v_trial) - xi;
        if (r_trial.norm() < r.norm()) {
          v = v_trial;
          r = r_trial;
          improved = true;
          break;
        }
      }
      damping *= 0.5;
    }
    if (!improved) break;
  }
  if (r.norm() <= opts.tolerance * xi_norm) return v;
  throw InversionFailureError(
      "legendre inversion did not converge (residual " +
          format_double(r.norm()) + "); metric may be non-convex or badly conditioned",
      xi);
}

std::vector<Covector> annihilator_basis(const Submanifold& sub, const Vec& u) {
  Vec p = sub.immerse(u);
  Mat frame = annihilator_frame(sub, u);
  std::vector<Covector> basis;
  for (int j = 0; j < frame.cols(); ++j) {
    Vec xi = frame.col(j);
    canonical_sign(xi);
    basis.push_back({p, xi});
  }
  return basis;
}

std::vector<NormalVector> unit_normal_cone(const FinslerMetric& metric,
                                           const Submanifold& sub,
                                           const Vec& u, int resolution) {
  Vec p = sub.immerse(u);
  auto tangents = sub.tangent_basis(u);
  int n = sub.ambient_dim();
  int m = n - sub.param_dim();

  Mat frame = annihilator_frame(sub, u);
  // Fixed orientation covector for the +/- labels of a hypersurface.
  Vec orientation = frame.col(0);
  canonical_sign(orientation);

  std::vector<NormalVector> cone;
  for (const Vec& dir : sphere_directions(m, resolution)) {
    Vec xi = frame * dir;
    try {
      Vec y = legendre_inverse(metric, p, xi);
      double f = metric.evaluate(p, y);
      NormalVector normal;
      normal.base = p;
      normal.components = y / f;
      normal.foot_param = u;
      normal.side = m == 1 ? (xi.dot(orientation) > 0 ? +1 : -1) : 0;
      normal.orthogonality_residual =
          orthogonality_residual(metric, p, normal.components, tangents);
      cone.push_back(std::move(normal));
    } catch (const InversionFailureError&) {
      throw InversionFailureError(
          "unit_normal_cone: legendre inversion failed for an annihilator direction",
          xi);
    }
  }
  return cone;
}

std::vector<Vec> build_orthogonal_frame(const FinslerMetric& metric,
                                        const Vec& p, const Vec& v,
                                        const std::vector<Vec>& seeds) {
  int n = metric.chart().dim();
  if (static_cast<int>(seeds.size()) != n)
    throw ConditioningError("need exactly n seed vectors");
  Mat g = metric.fundamental_tensor(p, v);
  auto inner = [&](const Vec& a, const Vec& b) { return a.dot(g * b); };

  std::vector<Vec> frame;
  frame.push_back(v);  // E_1 = v, kept unnormalized
  for (int i = 1; i < n; ++i) {
    Vec e = seeds[i];
    double scale = std::sqrt(std::max(inner(e, e), 0.0));
    for (const Vec& prev : frame) e -= (inner(prev, e) / inner(prev, prev)) * prev;
    double norm = std::sqrt(std::max(inner(e, e), 0.0));
    if (norm <= 1e-10 * std::max(scale, 1e-30))
      throw ConditioningError(
          "seed basis nearly dependent during Gram-Schmidt");
    frame.push_back(e / norm);
  }
  return frame;
}

Vec exp_submanifold(const FinslerMetric& metric, const Submanifold& sub,
                    const Vec& u, const NormalVector& normal, double t,
                    const ShootOptions& opts) {
  if (!(t > 0)) throw DomainError("exp_submanifold requires t > 0");
  Vec p = sub.immerse(u);
  if ((p - normal.base).norm() > 1e-9 * std::max(1.0, p.norm()))
    throw DomainError("normal foot point does not match the parameter");
  GeodesicPath path = shoot(metric, p, normal.components, t, opts);
  if (path.left_domain())
    throw HorizonError("orthogonal geodesic left the chart (t_exit = " +
                           format_double(path.t_exit()) + ")",
                       path.t_exit());
  return path.position(t);
}

NormalConeChart::NormalConeChart(const FinslerMetric& metric,
                                 const Submanifold& sub,
                                 const NormalVector& base)
    : metric_(metric), sub_(sub), base_(base) {
  int n = sub.ambient_dim();
  foot_dim_ = sub.param_dim();
  sphere_dim_ = n - foot_dim_ - 1;
  base_frame_ = annihilator_frame(sub, base.foot_param);
  Vec xi0 = metric.legendre_components(base.base, base.components);
  base_coords_ = base_frame_.transpose() * xi0;
  base_coords_.normalize();
  int m = n - foot_dim_;
  // Orthonormal completion of base_coords_ inside R^m.
  Mat completion = Mat::Zero(m, std::max(0, m - 1));
  int col = 0;
  for (int i = 0; i < m && col < m - 1; ++i) {
    Vec cand = Vec::Unit(m, i);
    cand -= base_coords_.dot(cand) * base_coords_;
    for (int j = 0; j < col; ++j)
      cand -= completion.col(j).dot(cand) * completion.col(j);
    if (cand.norm() > 1e-6) {
      completion.col(col++) = cand.normalized();
    }
  }
  sphere_tangents_ = completion;
}

NormalVector NormalConeChart::at(const Vec& params) const {
  if (params.size() != dim())
    throw DomainError("cone chart parameter dimension mismatch");
  Vec u = base_.foot_param;
  for (int i = 0; i < foot_dim_; ++i) u[i] += params[i];
  Vec p = sub_.immerse(u);
  auto tangents = sub_.tangent_basis(u);

  // Align the annihilator frame at u to the base frame (polar factor of the
  // overlap) so nearby covectors vary continuously.
  Mat frame = annihilator_frame(sub_, u);
  Mat overlap = frame.transpose() * base_frame_;
  Eigen::JacobiSVD<Mat> svd(overlap,
                            Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat rotation = svd.matrixU() * svd.matrixV().transpose();
  Mat aligned = frame * rotation;

  Vec coords = base_coords_;
  for (int j = 0; j < sphere_dim_; ++j)
    coords += params[foot_dim_ + j] * sphere_tangents_.col(j);
  coords.normalize();

  Vec xi = aligned * coords;
  Vec y = legendre_inverse(metric_, p, xi);
  double f = metric_.evaluate(p, y);
  NormalVector normal;
  normal.base = p;
  normal.components = y / f;
  normal.foot_param = u;
  normal.side = base_.side;
  normal.orthogonality_residual =
      orthogonality_residual(metric_, p, normal.components, tangents);
  return normal;
}

}  // namespace finsler
