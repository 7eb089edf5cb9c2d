#include "finsler/cut_locus.hpp"

#include <cmath>

namespace finsler {

namespace {

// Least-squares line a + b t through the tail of the baseline samples.
struct BaselineFit {
  double a = 0.0, b = 0.0;
  bool valid = false;
  double predict(double t) const { return valid ? a + b * t : 0.0; }
};

BaselineFit fit_line(const std::vector<std::pair<double, double>>& pts) {
  BaselineFit fit;
  size_t m = pts.size();
  if (m == 0) return fit;
  if (m == 1) {
    fit.a = pts[0].second;
    fit.b = 0.0;
    fit.valid = true;
    return fit;
  }
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (auto& [t, y] : pts) {
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  double denom = m * stt - st * st;
  if (std::abs(denom) < 1e-300) {
    fit.a = sy / m;
    fit.b = 0.0;
  } else {
    fit.b = (m * sty - st * sy) / denom;
    fit.a = (sy - fit.b * st) / m;
  }
  fit.valid = true;
  return fit;
}

}  // namespace

std::vector<Vec> sample_parameters(const Submanifold& sub, const Box& box,
                                   int resolution) {
  int k = sub.param_dim();
  if (k == 0) return {Vec(0)};
  std::vector<int> counts(k, resolution);
  std::vector<Vec> params;
  std::vector<int> idx(k, 0);
  for (;;) {
    Vec u(k);
    for (int i = 0; i < k; ++i) {
      double denom = sub.periodic(i) ? counts[i] : counts[i] - 1;
      u[i] = box.lower[i] + box.width(i) * idx[i] / denom;
    }
    params.push_back(u);
    int axis = k - 1;
    while (axis >= 0) {
      if (++idx[axis] < counts[axis]) break;
      idx[axis] = 0;
      --axis;
    }
    if (axis < 0) break;
  }
  return params;
}

CutResult cut_value(const FinslerMetric& metric, const Submanifold& sub,
                    const DistanceField& field, const NormalVector& normal,
                    double horizon, double tol, const CutOptions& opts) {
  (void)sub;
  if (!(horizon > 0)) throw DomainError("cut_value requires horizon > 0");
  if (!(tol > 0)) throw DomainError("cut_value requires tol > 0");

  CutResult result;
  GeodesicPath path =
      shoot(metric, normal.base, normal.components, horizon, opts.shoot);
  double search_end = path.t_end();
  result.truncated = path.left_domain();

  // The oracle only answers inside its region; clip the search there.
  auto inside = [&](double t) { return field.contains(path.position(t)); };
  if (!inside(search_end)) {
    double lo = 0.0, hi = search_end;
    while (hi - lo > 1e-10 * std::max(1.0, horizon)) {
      double mid = 0.5 * (lo + hi);
      (inside(mid) ? lo : hi) = mid;
    }
    search_end = lo;
    result.truncated = true;
  }

  auto deficit_at = [&](double t) {
    double d = field.distance(path.position(t));
    return std::make_pair(t - d, field.error_bound(d));
  };

  int coarse = std::max(8, opts.coarse_samples);
  double dt = search_end / coarse;

  // The foot point itself pins the baseline: d(P, gamma(0)) = 0.
  std::vector<std::pair<double, double>> baseline_pts{{0.0, 0.0}};
  auto baseline_tail = [&]() {
    size_t m = baseline_pts.size();
    size_t take = std::min<size_t>(4, m);
    return std::vector<std::pair<double, double>>(baseline_pts.end() - take,
                                                  baseline_pts.end());
  };

  BaselineFit fit = fit_line(baseline_tail());
  auto excess_at = [&](double t) {
    auto [deficit, err] = deficit_at(t);
    return std::make_pair(deficit - fit.predict(t), err);
  };

  double prev_ok_t = 0.0;
  double first_violation_t = -1.0;
  int consecutive = 0;
  for (int i = 1; i <= coarse; ++i) {
    double t = i * dt;
    auto [excess, err] = excess_at(t);
    if (excess > 3.0 * err) {
      if (++consecutive >= 2) break;
      if (first_violation_t < 0) first_violation_t = t;
    } else {
      consecutive = 0;
      first_violation_t = -1.0;
      prev_ok_t = t;
      if (excess <= err) {
        auto [deficit, e2] = deficit_at(t);
        (void)e2;
        baseline_pts.push_back({t, deficit});
        fit = fit_line(baseline_tail());
      }
    }
  }

  if (consecutive < 2) {
    result.finite = false;
    result.value = search_end;
    return result;
  }

  // Bisect the threshold crossing, then remove the threshold bias by
  // back-extrapolating the post-cut excess growth to zero.
  double lo = prev_ok_t, hi = first_violation_t;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    auto [excess, err] = excess_at(mid);
    (excess > 3.0 * err ? hi : lo) = mid;
  }
  result.bracket_lo = lo;
  result.bracket_hi = hi;
  result.bracket_width = hi - lo;

  std::vector<std::pair<double, double>> post;
  double window_end = std::min(search_end, hi + 3.0 * dt);
  int k = std::max(3, opts.refine_points);
  for (int j = 0; j < k; ++j) {
    double t = hi + (window_end - hi) * j / (k - 1);
    post.push_back({t, excess_at(t).first});
  }
  BaselineFit growth = fit_line(post);
  double estimate = 0.5 * (lo + hi);
  if (growth.valid && growth.b > 1e-12) {
    double root = -growth.a / growth.b;
    if (root >= lo - 3.0 * dt && root <= hi) estimate = root;
  }
  result.finite = true;
  result.value = std::max(estimate, 0.0);
  result.cut_point = path.position(result.value);
  return result;
}

std::vector<CutSample> sample_cut_locus(const FinslerMetric& metric,
                                        const Submanifold& sub,
                                        const DistanceField& field,
                                        int foot_resolution,
                                        int cone_resolution, double horizon,
                                        double tol, int threads,
                                        const CutOptions& opts) {
  std::vector<NormalVector> normals;
  for (const Vec& u : sample_parameters(sub, sub.param_box(), foot_resolution))
    for (auto& nv : unit_normal_cone(metric, sub, u, cone_resolution))
      normals.push_back(std::move(nv));

  std::vector<CutSample> out(normals.size());
  parallel_for(static_cast<int>(normals.size()), threads, [&](int i) {
    out[i].normal = normals[i];
    try {
      out[i].result = cut_value(metric, sub, field, normals[i], horizon, tol,
                                opts);
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

}  // namespace finsler
