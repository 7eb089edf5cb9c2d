// Orthogonality to submanifolds: the Legendre transform and its Newton
// inverse, the annihilator of TP, the unit orthogonal cone built through
// covector space, Gram-Schmidt frames under g_v, and the submanifold
// exponential.
#pragma once

#include "finsler/geodesic.hpp"
#include "finsler/submanifold.hpp"

namespace finsler {

struct Covector {
  Vec base;
  Vec components;
};

struct NormalVector {
  Vec base;         // foot point p(u)
  Vec components;   // unit vector, F = 1
  Vec foot_param;   // parameter u on P
  int side = 0;     // +1 / -1 for hypersurfaces, 0 otherwise
  double orthogonality_residual = 0.0;
};

Covector legendre(const FinslerMetric& metric, const Vec& p, const Vec& v);

struct LegendreInverseOptions {
  int max_iterations = 50;
  double tolerance = 1e-10;  // residual relative to |xi|
};

// Solves g_v(v, .) = xi by damped Newton with Jacobian g_v; the initial
// guess solves g_vhat v = xi at the Euclidean unit direction of xi.
Vec legendre_inverse(const FinslerMetric& metric, const Vec& p, const Vec& xi,
                     const LegendreInverseOptions& opts = {});

// Euclidean-orthonormal basis of the annihilator of T_p P at parameter u
// (n - k covectors), with a deterministic sign convention.
std::vector<Covector> annihilator_basis(const Submanifold& sub, const Vec& u);

// Samples the unit sphere of the annihilator at the given angular resolution
// and maps it through the Legendre inverse, rescaling by 1/F. For
// codimension 1 the sphere is two points and the result is {N_+, N_-}.
std::vector<NormalVector> unit_normal_cone(const FinslerMetric& metric,
                                           const Submanifold& sub,
                                           const Vec& u, int resolution);

// Gram-Schmidt under g_v. The first seed is replaced by v, which is kept
// unnormalized; the remaining vectors come out g_v-orthonormal and
// g_v-orthogonal to v.
std::vector<Vec> build_orthogonal_frame(const FinslerMetric& metric,
                                        const Vec& p, const Vec& v,
                                        const std::vector<Vec>& seeds);

// gamma_N(t) from the foot point of the normal.
Vec exp_submanifold(const FinslerMetric& metric, const Submanifold& sub,
                    const Vec& u, const NormalVector& normal, double t,
                    const ShootOptions& opts = {});

// Local (n-1)-parameter chart of nu^1(P) around a base normal: k foot-point
// directions and n-1-k annihilator-sphere directions (the radial direction
// is excluded). Annihilator frames at nearby feet are aligned to the base
// frame so the chart is continuous.
class NormalConeChart {
 public:
  NormalConeChart(const FinslerMetric& metric, const Submanifold& sub,
                  const NormalVector& base);

  int dim() const { return static_cast<int>(foot_dim_ + sphere_dim_); }
  int foot_dim() const { return foot_dim_; }
  int sphere_dim() const { return sphere_dim_; }

  // params: first foot_dim() entries are parameter offsets on P, the rest
  // are angular offsets on the annihilator sphere.
  NormalVector at(const Vec& params) const;
  const NormalVector& base() const { return base_; }

 private:
  const FinslerMetric& metric_;
  const Submanifold& sub_;
  NormalVector base_;
  int foot_dim_ = 0;
  int sphere_dim_ = 0;
  Mat base_frame_;       // n x m, orthonormal columns spanning the annihilator
  Vec base_coords_;      // coordinates of xi_0 in base_frame_
  Mat sphere_tangents_;  // m x (m-1), orthonormal, orthogonal to base_coords_
};

}  // namespace finsler
