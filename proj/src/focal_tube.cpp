#include "finsler/focal_tube.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <unordered_map>

namespace finsler {

VariationMap::VariationMap(const FinslerMetric& metric, const Submanifold& sub,
                           const NormalVector& normal, double horizon,
                           const FocalOptions& opts) {
  ambient_ = sub.ambient_dim();
  NormalConeChart chart(metric, sub, normal);
  int dims = chart.dim();
  search_end_ = horizon;
  for (int j = 0; j < dims; ++j) {
    bool sphere = j >= chart.foot_dim();
    double step = opts.delta;
    if (!sphere) step = opts.delta * std::max(1.0, sub.param_box().width(j));
    Vec params = Vec::Zero(dims);
    params[j] = step;
    NormalVector wp = chart.at(params);
    params[j] = -step;
    NormalVector wm = chart.at(params);
    plus_.push_back(shoot(metric, wp.base, wp.components, horizon, opts.shoot));
    minus_.push_back(
        shoot(metric, wm.base, wm.components, horizon, opts.shoot));
    steps_.push_back(step);
    sphere_like_.push_back(sphere);
    if (plus_.back().left_domain() || minus_.back().left_domain()) {
      search_end_ = std::min(
          search_end_, std::min(plus_.back().t_end(), minus_.back().t_end()));
      truncated_ = true;
    }
  }
  scales_.assign(dims, 1.0);
}

Vec VariationMap::column(int j, double t) const {
  Vec raw =
      (plus_[j].position(t) - minus_[j].position(t)) / (2.0 * steps_[j]);
  if (sphere_like_[j] && t > 0) raw /= t;
  return raw;
}

void VariationMap::freeze_scales(const std::vector<double>& probe_times) {
  for (int j = 0; j < columns(); ++j) {
    double scale = 0.0;
    for (double t : probe_times)
      if (t <= search_end_) scale = std::max(scale, column(j, t).norm());
    scales_[j] = std::max(scale, 1e-30);
  }
}

Mat VariationMap::matrix(double t) const {
  Mat m(ambient_, columns());
  for (int j = 0; j < columns(); ++j) m.col(j) = column(j, t);
  return m;
}

double VariationMap::normalized_sigma_min(double t) const {
  Mat m(ambient_, columns());
  for (int j = 0; j < columns(); ++j) m.col(j) = column(j, t) / scales_[j];
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().minCoeff();
}

FocalResult focal_instant(const FinslerMetric& metric, const Submanifold& sub,
                          const NormalVector& normal, double horizon,
                          double tol, const FocalOptions& opts) {
  if (!(horizon > 0)) throw DomainError("focal_instant requires horizon > 0");
  if (!(tol > 0)) throw DomainError("focal_instant requires tol > 0");

  VariationMap variation(metric, sub, normal, horizon, opts);
  FocalResult result;
  result.truncated = variation.truncated();
  double end = variation.search_end();

  int coarse = std::max(8, opts.coarse_samples);
  std::vector<double> ts;
  for (int i = 1; i <= coarse; ++i) ts.push_back(end * i / coarse);
  variation.freeze_scales(ts);

  double prev_t = ts.front();
  double crossing_lo = -1.0, crossing_hi = -1.0;
  for (double t : ts) {
    double sigma = variation.normalized_sigma_min(t);
    result.sigma_profile.push_back({t, sigma});
    if (sigma < opts.sigma_threshold && crossing_lo < 0) {
      crossing_lo = prev_t;
      crossing_hi = t;
    }
    prev_t = t;
  }
  if (crossing_lo < 0) {
    result.finite = false;
    result.value = end;
    return result;
  }
  double lo = crossing_lo, hi = crossing_hi;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    (variation.normalized_sigma_min(mid) < opts.sigma_threshold ? hi : lo) =
        mid;
  }
  result.finite = true;
  result.value = 0.5 * (lo + hi);
  result.bracket_width = hi - lo;
  return result;
}

namespace {

std::vector<NormalVector> sample_unit_cone(const FinslerMetric& metric,
                                           const Submanifold& sub,
                                           const Box& region_q,
                                           const TubeSampling& sampling) {
  if (sub.param_dim() > 0) {
    if (region_q.dim() != sub.param_dim())
      throw DomainError("Q dimension does not match the parameter box");
    for (int i = 0; i < region_q.dim(); ++i) {
      bool inside = sub.periodic(i)
                        ? sub.param_box().lower[i] <= region_q.lower[i] &&
                              region_q.upper[i] <= sub.param_box().upper[i]
                        : sub.param_box().lower[i] < region_q.lower[i] &&
                              region_q.upper[i] < sub.param_box().upper[i];
      // Q must be precompact inside the parameter box; a periodic axis has
      // no boundary, so the full range is allowed there.
      if (!inside)
        throw DomainError(
            "Q must be strictly inside the parameter box on non-periodic axes");
    }
  }
  std::vector<NormalVector> normals;
  for (const Vec& u :
       sample_parameters(sub, sub.param_dim() ? region_q : Box{},
                         sampling.foot_resolution))
    for (auto& nv :
         unit_normal_cone(metric, sub, u, sampling.cone_resolution))
      normals.push_back(std::move(nv));
  return normals;
}

}  // namespace

TubeReport estimate_tube_radius(const FinslerMetric& metric,
                                const Submanifold& sub, const Box& region_q,
                                const TubeSampling& sampling,
                                const DistanceField& field, double horizon,
                                double tol, int threads,
                                const CutOptions& cut_opts,
                                const FocalOptions& focal_opts) {
  auto normals = sample_unit_cone(metric, sub, region_q, sampling);
  TubeReport report;
  report.region_q = region_q;
  report.samples.resize(normals.size());

  parallel_for(static_cast<int>(normals.size()), threads, [&](int i) {
    TubeSampleRow& row = report.samples[i];
    row.normal = normals[i];
    try {
      GeodesicPath path = shoot(metric, normals[i].base,
                                normals[i].components, horizon,
                                cut_opts.shoot);
      row.domain_exit = path.t_end();
      row.domain_limited = path.left_domain();
      row.cut = cut_value(metric, sub, field, normals[i], horizon, tol,
                          cut_opts);
      row.focal = focal_instant(metric, sub, normals[i], horizon, tol,
                                focal_opts);
    } catch (const Error& e) {
      row.error = e.what();
    }
  });

  double eps_cut = std::numeric_limits<double>::infinity();
  double eps_focal = std::numeric_limits<double>::infinity();
  double eps_domain = std::numeric_limits<double>::infinity();
  int ok = 0;
  for (const auto& row : report.samples) {
    if (!row.error.empty()) {
      ++report.failures;
      continue;
    }
    ++ok;
    eps_cut = std::min(eps_cut, row.cut.value);
    eps_focal = std::min(eps_focal, row.focal.value);
    eps_domain = std::min(eps_domain, row.domain_exit);
  }
  if (ok == 0) throw Error("estimate_tube_radius: every sample failed");
  report.partial =
      report.failures > 0 &&
      static_cast<double>(report.failures) > 0.01 * report.samples.size();
  report.epsilon_cut = eps_cut;
  report.epsilon_focal = eps_focal;
  report.epsilon_domain = eps_domain;
  report.epsilon =
      report.safety_factor * std::min({eps_cut, eps_focal, eps_domain});
  return report;
}

namespace {

// Locally minimizes |gamma_a(t) - gamma_b(s)| by alternating golden-section
// line searches; used to confirm or dismiss hash collision candidates.
double confirm_coincidence(const GeodesicPath& a, const GeodesicPath& b,
                           double t0, double s0, double t_min, double t_max,
                           double window, double* t_at = nullptr,
                           double* s_at = nullptr) {
  double t = t0, s = s0;
  auto dist = [&](double tt, double ss) {
    return (a.position(tt) - b.position(ss)).norm();
  };
  for (int round = 0; round < 6; ++round) {
    double lo = std::max(t_min, t - window);
    double hi = std::min(std::min(t_max, a.t_end()), t + window);
    if (hi > lo)
      t = golden_section_max(
          [&](double tt) { return -dist(tt, s); }, lo, hi, 1e-10);
    lo = std::max(t_min, s - window);
    hi = std::min(std::min(t_max, b.t_end()), s + window);
    if (hi > lo)
      s = golden_section_max(
          [&](double ss) { return -dist(t, ss); }, lo, hi, 1e-10);
  }
  if (t_at) *t_at = t;
  if (s_at) *s_at = s;
  return dist(t, s);
}

struct HashKey {
  long cell = 0;
  bool operator==(const HashKey& o) const { return cell == o.cell; }
};

}  // namespace

TubeVerification verify_tube(const FinslerMetric& metric,
                             const Submanifold& sub, const Box& region_q,
                             double epsilon, const TubeSampling& sampling,
                             const DistanceField& field, int threads,
                             const FocalOptions& focal_opts) {
  if (!(epsilon > 0)) throw DomainError("verify_tube requires epsilon > 0");
  auto normals = sample_unit_cone(metric, sub, region_q, sampling);
  int n = sub.ambient_dim();

  TubeVerification out;
  out.collision_threshold = 10.0 * field.grid_step();
  const double tau = out.collision_threshold;

  // One dense geodesic per normal, reused by every check.
  std::vector<GeodesicPath> paths(normals.size());
  std::vector<std::string> path_errors(normals.size());
  parallel_for(static_cast<int>(normals.size()), threads, [&](int i) {
    try {
      paths[i] = shoot(metric, normals[i].base, normals[i].components,
                       epsilon, focal_opts.shoot);
    } catch (const Error& e) {
      path_errors[i] = e.what();
    }
  });

  // Sample grid along each geodesic. The first collision threshold around P
  // is excluded: opposite-side samples legitimately crowd there.
  double t_min = std::min(std::max(tau, 0.02 * epsilon), 0.45 * epsilon);
  std::vector<double> ts;
  for (int j = 0; j < sampling.t_samples; ++j)
    ts.push_back(t_min +
                 (epsilon * (1 - 1e-12) - t_min) * j /
                     std::max(1, sampling.t_samples - 1));

  struct Sample {
    int normal;
    double t;
    Vec x;
  };
  std::vector<Sample> samples;
  for (size_t i = 0; i < normals.size(); ++i) {
    if (!path_errors[i].empty()) {
      // exp is not even defined up to epsilon here; report as a regularity
      // failure with the exit time.
      out.regularity_failures.push_back(
          {static_cast<int>(i), paths[i].t_end(), -1.0});
      continue;
    }
    if (paths[i].left_domain()) {
      out.regularity_failures.push_back(
          {static_cast<int>(i), paths[i].t_exit(), -1.0});
      continue;
    }
    for (double t : ts)
      samples.push_back({static_cast<int>(i), t, paths[i].position(t)});
  }
  out.samples_scanned = static_cast<int>(samples.size());

  // --- (a) injectivity -----------------------------------------------
  // Spatial hash of the samples at the collision threshold, then a
  // continuous confirmation per candidate pair of distinct geodesics.
  Vec lo = samples.empty() ? Vec::Zero(n) : samples[0].x;
  Vec hi = lo;
  for (const auto& s : samples) {
    lo = lo.cwiseMin(s.x);
    hi = hi.cwiseMax(s.x);
  }
  double cell = std::max(tau, 1e-12);
  std::vector<long> dims(n, 1);
  long total_cells = 1;
  for (int i = 0; i < n; ++i) {
    dims[i] = std::max<long>(1, static_cast<long>((hi[i] - lo[i]) / cell) + 1);
    total_cells *= dims[i];
  }
  auto cell_of = [&](const Vec& x) {
    long flat = 0;
    for (int i = 0; i < n; ++i) {
      long c = static_cast<long>((x[i] - lo[i]) / cell);
      c = std::min(std::max<long>(c, 0), dims[i] - 1);
      flat = flat * dims[i] + c;
    }
    return flat;
  };
  std::unordered_map<long, std::vector<int>> buckets;
  for (size_t s = 0; s < samples.size(); ++s)
    buckets[cell_of(samples[s].x)].push_back(static_cast<int>(s));

  double t_grid_gap =
      ts.size() > 1 ? ts[1] - ts[0] : epsilon;
  std::map<std::pair<int, int>, std::pair<int, int>> candidate_pairs;
  std::vector<long> neighbor_offsets;
  {
    std::vector<long> strides(n, 1);
    for (int i = n - 2; i >= 0; --i) strides[i] = strides[i + 1] * dims[i + 1];
    std::vector<int> offset(n, -1);
    for (;;) {
      long flat = 0;
      for (int i = 0; i < n; ++i) flat += offset[i] * strides[i];
      neighbor_offsets.push_back(flat);
      int axis = n - 1;
      while (axis >= 0) {
        if (++offset[axis] <= 1) break;
        offset[axis] = -1;
        --axis;
      }
      if (axis < 0) break;
    }
  }
  for (const auto& [cell_id, members] : buckets) {
    for (long off : neighbor_offsets) {
      long other = cell_id + off;
      auto it = buckets.find(other);
      if (it == buckets.end()) continue;
      for (int sa : members) {
        for (int sb : it->second) {
          if (sa >= sb && other == cell_id) continue;
          const Sample& A = samples[sa];
          const Sample& B = samples[sb];
          if (A.normal == B.normal &&
              std::abs(A.t - B.t) <= 3.0 * t_grid_gap + 1e-15)
            continue;  // same geodesic, neighboring times
          if ((A.x - B.x).norm() >= tau) continue;
          auto pk = std::make_pair(std::min(A.normal, B.normal),
                                   std::max(A.normal, B.normal));
          auto found = candidate_pairs.find(pk);
          if (found == candidate_pairs.end() ||
              (samples[found->second.first].x - samples[found->second.second].x)
                      .norm() > (A.x - B.x).norm())
            candidate_pairs[pk] = {sa, sb};
        }
      }
    }
  }

  // Distinct geodesics of a valid tube stay apart; a true overlap drives
  // the continuous minimum to zero. The floor keeps same-foot opposite-side
  // pairs (which meet only at P itself) out of the scan.
  double coincidence_tol = std::max(1e-4 * tau, 1e-9);
  double t_floor = 0.5 * tau;
  for (const auto& [pk, pair_samples] : candidate_pairs) {
    const Sample& A = samples[pair_samples.first];
    const Sample& B = samples[pair_samples.second];
    double t_at = A.t, s_at = B.t;
    // A self-intersection candidate keeps disjoint search windows so the
    // two parameters cannot slide onto each other.
    double window = A.normal == B.normal ? 0.4 * std::abs(A.t - B.t)
                                         : 0.5 * epsilon;
    double d = confirm_coincidence(paths[A.normal], paths[B.normal], A.t, B.t,
                                   t_floor, epsilon, window, &t_at, &s_at);
    if (d < coincidence_tol) {
      CollisionWitness w;
      w.normal_a = A.normal;
      w.normal_b = B.normal;
      w.t_a = t_at;
      w.t_b = s_at;
      w.distance = d;
      w.point = paths[A.normal].position(t_at);
      out.collisions.push_back(w);
    }
  }
  out.injectivity_pass = out.collisions.empty();

  // --- (b) regularity --------------------------------------------------
  std::vector<std::vector<RegularityWitness>> reg(normals.size());
  parallel_for(static_cast<int>(normals.size()), threads, [&](int i) {
    if (!path_errors[i].empty() || paths[i].left_domain()) return;
    VariationMap variation(metric, sub, normals[i], epsilon, focal_opts);
    std::vector<double> probe;
    for (double t : ts)
      if (t <= variation.search_end()) probe.push_back(t);
    if (probe.empty()) return;
    variation.freeze_scales(probe);
    for (double t : probe) {
      double sigma = variation.normalized_sigma_min(t);
      if (sigma < focal_opts.sigma_threshold)
        reg[i].push_back({i, t, sigma});
    }
  });
  for (auto& r : reg)
    out.regularity_failures.insert(out.regularity_failures.end(), r.begin(),
                                   r.end());
  out.regularity_pass = out.regularity_failures.empty();

  // --- (c) minimization -------------------------------------------------
  for (const auto& s : samples) {
    if (!field.contains(s.x)) continue;
    double d = field.distance(s.x);
    double bound = field.error_bound(d);
    double deviation = std::abs(d - s.t);
    if (deviation > bound)
      out.minimization_failures.push_back({s.normal, s.t, d, deviation, bound});
  }
  out.minimization_pass = out.minimization_failures.empty();
  return out;
}

SmoothDistanceOutcome verify_smooth_distance(const FinslerMetric& metric,
                                             const Submanifold& sub,
                                             const Box& region_q,
                                             double epsilon,
                                             const TubeSampling& sampling,
                                             const DistanceField& field,
                                             int threads) {
  if (!(epsilon > 0))
    throw DomainError("verify_smooth_distance requires epsilon > 0");
  auto normals = sample_unit_cone(metric, sub, region_q, sampling);

  std::vector<GeodesicPath> paths(normals.size());
  parallel_for(static_cast<int>(normals.size()), threads, [&](int i) {
    paths[i] = shoot(metric, normals[i].base, normals[i].components,
                     0.9 * epsilon, {});
  });

  SmoothDistanceOutcome out;
  double h = field.grid_step();
  int n = sub.ambient_dim();
  int nt = std::max(2, sampling.t_samples);
  std::vector<double> ts;
  for (int j = 0; j < nt; ++j)
    ts.push_back(0.1 * epsilon + (0.8 * epsilon) * j / (nt - 1));

  auto gradient_at = [&](const Vec& x) -> std::optional<Vec> {
    Vec g(n);
    for (int i = 0; i < n; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      if (!field.contains(xp) || !field.contains(xm)) return std::nullopt;
      g[i] = (field.distance(xp) - field.distance(xm)) / (2.0 * h);
    }
    return g;
  };

  // Index samples by (normal, t): gradients compare against the neighbor in
  // t and the neighbor in the normal index.
  int rows = static_cast<int>(normals.size());
  std::vector<std::vector<SmoothDistanceSampleRow>> table(
      rows, std::vector<SmoothDistanceSampleRow>(nt));
  out.radial_pass = true;
  for (int i = 0; i < rows; ++i) {
    if (paths[i].left_domain()) continue;
    for (int j = 0; j < nt; ++j) {
      SmoothDistanceSampleRow row;
      row.normal = i;
      row.t = ts[j];
      Vec x = paths[i].position(ts[j]);
      if (!field.contains(x)) continue;
      row.distance_value = field.distance(x);
      row.deviation = std::abs(row.distance_value - row.t);
      double bound = field.error_bound(row.distance_value);
      if (row.deviation > out.worst_deviation) {
        out.worst_deviation = row.deviation;
        out.worst_deviation_bound = bound;
        out.worst_sample = row;
      }
      if (row.deviation > bound) out.radial_pass = false;
      if (auto g = gradient_at(x)) row.gradient = *g;
      table[i][j] = row;
      out.samples.push_back(row);
    }
  }

  // Continuity of the oracle gradient between neighboring tube samples.
  out.gradient_pass = true;
  auto pair_check = [&](const SmoothDistanceSampleRow& a,
                        const SmoothDistanceSampleRow& b) {
    if (a.gradient.size() == 0 || b.gradient.size() == 0) return;
    Vec xa = paths[a.normal].position(a.t);
    Vec xb = paths[b.normal].position(b.t);
    double dx = (xa - xb).norm();
    double margin =
        std::min(std::min(a.t, b.t), epsilon - std::max(a.t, b.t));
    double local_bound =
        10.0 * (0.5 * dx / (std::max(margin, 1e-12) + dx) + 0.02);
    double jump = (a.gradient - b.gradient).norm();
    if (jump > out.worst_gradient_jump) {
      out.worst_gradient_jump = jump;
      out.worst_gradient_bound = local_bound;
    }
    if (jump > local_bound) out.gradient_pass = false;
  };
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j + 1 < nt; ++j) pair_check(table[i][j], table[i][j + 1]);
  for (int i = 0; i + 1 < rows; ++i)
    for (int j = 0; j < nt; ++j) pair_check(table[i][j], table[i + 1][j]);
  return out;
}

}  // namespace finsler
