// P-Jacobi machinery by finite-difference variations of the exponential,
// focal-instant detection through singular-value collapse, tubular-radius
// estimation (cut, focal and domain bounds), tube verification and the
// smooth-distance check.
#pragma once

#include "finsler/cut_locus.hpp"

namespace finsler {

struct FocalOptions {
  double delta = 1e-5;            // variation parameter step
  double sigma_threshold = 1e-4;  // collapse threshold after column scaling
  int coarse_samples = 64;
  ShootOptions shoot;
};

struct FocalResult {
  bool finite = false;
  double value = 0.0;  // focal instant when finite, searched horizon otherwise
  double bracket_width = 0.0;
  bool truncated = false;
  // (t, normalized smallest singular value) over the coarse grid.
  std::vector<std::pair<double, double>> sigma_profile;
};

// Variation of the orthogonal-geodesic family around one unit normal:
// one central-difference column per cone-chart direction, evaluated from
// dense geodesic paths so any t costs only interpolation. Sphere-direction
// columns vanish linearly at t = 0 and are rescaled by 1/t.
class VariationMap {
 public:
  VariationMap(const FinslerMetric& metric, const Submanifold& sub,
               const NormalVector& normal, double horizon,
               const FocalOptions& opts);

  int columns() const { return static_cast<int>(plus_.size()); }
  double search_end() const { return search_end_; }
  bool truncated() const { return truncated_; }

  Mat matrix(double t) const;              // raw columns
  double normalized_sigma_min(double t) const;
  void freeze_scales(const std::vector<double>& probe_times);

 private:
  Vec column(int j, double t) const;
  std::vector<GeodesicPath> plus_, minus_;
  std::vector<double> steps_;
  std::vector<bool> sphere_like_;
  std::vector<double> scales_;
  double search_end_ = 0.0;
  bool truncated_ = false;
  int ambient_ = 0;
};

FocalResult focal_instant(const FinslerMetric& metric, const Submanifold& sub,
                          const NormalVector& normal, double horizon,
                          double tol, const FocalOptions& opts = {});

struct TubeSampling {
  int foot_resolution = 32;
  int cone_resolution = 8;
  int t_samples = 24;
};

struct TubeSampleRow {
  NormalVector normal;
  CutResult cut;
  FocalResult focal;
  double domain_exit = 0.0;  // chart exit time, or the horizon when inside
  bool domain_limited = false;
  std::string error;
};

struct TubeReport {
  Box region_q;  // parameter sub-box (full box for periodic axes)
  double epsilon_cut = 0.0;
  double epsilon_focal = 0.0;
  double epsilon_domain = 0.0;
  double epsilon = 0.0;  // 0.9 * min of the three
  double safety_factor = 0.9;
  bool partial = false;  // more than 1% of the samples failed
  int failures = 0;
  std::vector<TubeSampleRow> samples;
};

TubeReport estimate_tube_radius(const FinslerMetric& metric,
                                const Submanifold& sub, const Box& region_q,
                                const TubeSampling& sampling,
                                const DistanceField& field, double horizon,
                                double tol, int threads = 1,
                                const CutOptions& cut_opts = {},
                                const FocalOptions& focal_opts = {});

struct CollisionWitness {
  int normal_a = 0, normal_b = 0;
  double t_a = 0.0, t_b = 0.0;
  double distance = 0.0;  // confirmed minimum distance of the two geodesics
  Vec point;
};

struct RegularityWitness {
  int normal = 0;
  double t = 0.0;
  double sigma = 0.0;
};

struct MinimizationWitness {
  int normal = 0;
  double t = 0.0;
  double distance_value = 0.0;
  double deviation = 0.0;
  double bound = 0.0;
};

struct TubeVerification {
  bool injectivity_pass = false;
  bool regularity_pass = false;
  bool minimization_pass = false;
  bool pass() const {
    return injectivity_pass && regularity_pass && minimization_pass;
  }
  double collision_threshold = 0.0;  // 10 x grid step
  int samples_scanned = 0;
  std::vector<CollisionWitness> collisions;
  std::vector<RegularityWitness> regularity_failures;
  std::vector<MinimizationWitness> minimization_failures;
};

// Three checks over a dense sample of {t v : v in nu^1(Q), 0 < t < eps}:
// injectivity by spatial-hash candidate pairs confirmed against the
// continuous minimum distance of the two geodesics, regularity by the
// variation map's smallest singular value, and minimization against the
// oracle. All three run to completion.
TubeVerification verify_tube(const FinslerMetric& metric,
                             const Submanifold& sub, const Box& region_q,
                             double epsilon, const TubeSampling& sampling,
                             const DistanceField& field, int threads = 1,
                             const FocalOptions& focal_opts = {});

struct SmoothDistanceSampleRow {
  int normal = 0;
  double t = 0.0;
  double distance_value = 0.0;
  double deviation = 0.0;
  Vec gradient;
};

struct SmoothDistanceOutcome {
  bool radial_pass = false;    // d(P, exp(t v)) = t within the oracle bound
  bool gradient_pass = false;  // finite-difference gradients vary continuously
  bool pass() const { return radial_pass && gradient_pass; }
  double worst_deviation = 0.0;
  double worst_deviation_bound = 0.0;
  double worst_gradient_jump = 0.0;
  double worst_gradient_bound = 0.0;
  SmoothDistanceSampleRow worst_sample;
  std::vector<SmoothDistanceSampleRow> samples;
};

// Checks d_F(P, exp(t v)) = t for t in [0.1 eps, 0.9 eps] and the
// continuity of finite-difference oracle gradients between neighboring
// tube samples. The band near P is excluded on purpose.
SmoothDistanceOutcome verify_smooth_distance(const FinslerMetric& metric,
                                             const Submanifold& sub,
                                             const Box& region_q,
                                             double epsilon,
                                             const TubeSampling& sampling,
                                             const DistanceField& field,
                                             int threads = 1);

}  // namespace finsler
