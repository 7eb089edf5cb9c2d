#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "finsler/distance_field.hpp"
#include "finsler/normal_geometry.hpp"
#include "test_support.hpp"

using namespace finsler;
using namespace finsler::testing;

namespace {

// Brute-force oracle for unit normals of a line in a 2-d metric: sweep the
// direction circle for sign changes of g_v(v, tangent) and bisect.
std::vector<Vec> brute_force_unit_normals(const FinslerMetric& m, const Vec& p,
                                          const Vec& tangent) {
  auto residual = [&](double theta) {
    Vec v = vec2(std::cos(theta), std::sin(theta));
    return m.legendre_components(p, v).dot(tangent);
  };
  std::vector<Vec> found;
  const int sweep = 4096;
  double prev = residual(0.0);
  for (int i = 1; i <= sweep; ++i) {
    double t1 = 2.0 * M_PI * i / sweep;
    double cur = residual(t1);
    if (prev == 0.0 || prev * cur < 0) {
      double lo = 2.0 * M_PI * (i - 1) / sweep, hi = t1;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (residual(lo) * residual(mid) <= 0 ? hi : lo) = mid;
      }
      double theta = 0.5 * (lo + hi);
      Vec dir = vec2(std::cos(theta), std::sin(theta));
      found.push_back(dir / m.evaluate(p, dir));
    }
    prev = cur;
  }
  return found;
}

double match_distance(const std::vector<NormalVector>& cone, const Vec& target) {
  double best = 1e300;
  for (const auto& nv : cone)
    best = std::min(best, (nv.components - target).norm());
  return best;
}

}  // namespace

TEST_CASE("legendre transform") {
  auto e = euclidean2();
  Covector xi = legendre(e, vec2(0, 0), vec2(1, 0));
  CHECK((xi.components - vec2(1, 0)).norm() <= 1e-14);

  auto m = randers_b(0.5, 0.0);
  Covector xr = legendre(m, vec2(0, 0), vec2(1, 0));
  CHECK((xr.components - vec2(2.25, 0)).norm() <= 1e-10);
  // cross-check against the independent fd gradient of F^2/2
  Mat oracle = fd_half_hessian_sq(m, vec2(0, 0), vec2(1, 0));
  (void)oracle;
  double h = 1e-6;
  auto half_sq = [&](const Vec& v) {
    double f = m.evaluate(vec2(0, 0), v);
    return 0.5 * f * f;
  };
  Vec grad(2);
  for (int i = 0; i < 2; ++i) {
    Vec vp = vec2(1, 0), vm = vec2(1, 0);
    vp[i] += h;
    vm[i] -= h;
    grad[i] = (half_sq(vp) - half_sq(vm)) / (2 * h);
  }
  CHECK((xr.components - grad).norm() <= 1e-8);

  // 1-homogeneity
  auto rng = test_rng(37);
  for (int i = 0; i < 30; ++i) {
    Vec v = random_unit2(rng) * 0.8;
    Vec a = legendre(m, vec2(0, 0), 2 * v).components;
    Vec b = 2 * legendre(m, vec2(0, 0), v).components;
    CHECK((a - b).norm() <= 1e-9 * b.norm());
  }
}

TEST_CASE("legendre inverse") {
  auto e = euclidean2();
  CHECK((legendre_inverse(e, vec2(0, 0), vec2(0, 1)) - vec2(0, 1)).norm() <=
        1e-12);

  auto m = randers_b(0.5, 0.0);
  CHECK((legendre_inverse(m, vec2(0, 0), vec2(2.25, 0)) - vec2(1, 0)).norm() <=
        1e-8);

  auto rng = test_rng(41);
  for (const auto& metric : {e, m}) {
    for (int i = 0; i < 100; ++i) {
      Vec v = random_unit2(rng) *
              std::uniform_real_distribution<double>(0.3, 2.5)(rng);
      Vec xi = legendre(metric, vec2(0, 0), v).components;
      Vec back = legendre_inverse(metric, vec2(0, 0), xi);
      CHECK((back - v).norm() <= 1e-8 * v.norm());
    }
  }

  // hard but valid case: |b| close to 1
  auto hard = randers_b(0.0, 0.999);
  Vec v = vec2(0.3, -0.95);
  Vec xi = legendre(hard, vec2(0, 0), v).components;
  CHECK((legendre_inverse(hard, vec2(0, 0), xi) - v).norm() <= 1e-8);
}

TEST_CASE("annihilator basis") {
  auto x_axis = Submanifold::line(vec2(0, 0), vec2(1, 0), 1.5);
  Vec u1(1);
  u1 << 0.3;
  auto basis = annihilator_basis(x_axis, u1);
  REQUIRE(basis.size() == 1);
  CHECK(std::abs(std::abs(basis[0].components[1]) - 1.0) <= 1e-12);
  CHECK(std::abs(basis[0].components[0]) <= 1e-12);

  auto pt = Submanifold::point(vec2(0.5, 0.5));
  auto full = annihilator_basis(pt, Vec(0));
  CHECK(full.size() == 2);

  auto circ = Submanifold::circle(vec2(0, 0), 1.0);
  auto rng = test_rng(43);
  for (int i = 0; i < 16; ++i) {
    Vec u(1);
    u << std::uniform_real_distribution<double>(0, 2 * M_PI)(rng);
    auto ann = annihilator_basis(circ, u);
    REQUIRE(ann.size() == 1);
    Vec radial = vec2(std::cos(u[0]), std::sin(u[0]));
    double align = std::abs(ann[0].components.dot(radial));
    CHECK(std::abs(align - 1.0) <= 1e-10);
    // definition check: annihilates the tangent
    Vec tangent = vec2(-std::sin(u[0]), std::cos(u[0]));
    CHECK(std::abs(ann[0].components.dot(tangent)) <= 1e-10);
  }
}

TEST_CASE("unit normal cone, euclidean line") {
  auto e = euclidean2();
  auto x_axis = Submanifold::line(vec2(0, 0), vec2(1, 0), 1.5);
  Vec u(1);
  u << -0.4;
  auto cone = unit_normal_cone(e, x_axis, u, 8);
  REQUIRE(cone.size() == 2);
  CHECK(match_distance(cone, vec2(0, 1)) <= 1e-10);
  CHECK(match_distance(cone, vec2(0, -1)) <= 1e-10);
  CHECK(cone[0].side * cone[1].side == -1);
}

TEST_CASE("unit normal cone, randers y-axis") {
  auto m = randers_b(0.5, 0.0);
  auto y_axis = Submanifold::line(vec2(0, 0), vec2(0, 1), 1.5);
  Vec u(1);
  u << 0.2;
  auto cone = unit_normal_cone(m, y_axis, u, 8);
  REQUIRE(cone.size() == 2);
  CHECK(match_distance(cone, vec2(2.0 / 3.0, 0)) <= 1e-8);
  CHECK(match_distance(cone, vec2(-2.0, 0)) <= 1e-8);
  for (const auto& nv : cone) CHECK(nv.orthogonality_residual <= 1e-8);

  // brute-force sweep oracle agrees
  auto oracle = brute_force_unit_normals(m, vec2(0, 0.2), vec2(0, 1));
  REQUIRE(oracle.size() == 2);
  for (const auto& nv : cone) {
    double best = 1e300;
    for (const auto& o : oracle) best = std::min(best, (o - nv.components).norm());
    CHECK(best <= 1e-8);
  }

  // non-symmetry witness: the two normals are not antipodal
  CHECK((cone[0].components + cone[1].components).norm() > 0.1);
}

TEST_CASE("unit normal cone, randers x-axis tilts against b") {
  auto m = randers_b(0.5, 0.0);
  auto x_axis = Submanifold::line(vec2(0, 0), vec2(1, 0), 1.5);
  Vec u(1);
  u << 0.0;
  auto cone = unit_normal_cone(m, x_axis, u, 8);
  REQUIRE(cone.size() == 2);
  double s3 = 2.0 * std::sqrt(3.0) / 3.0;
  CHECK(match_distance(cone, vec2(-2.0 / 3.0, s3)) <= 1e-6);
  CHECK(match_distance(cone, vec2(-2.0 / 3.0, -s3)) <= 1e-6);
}

TEST_CASE("normal cone invariants") {
  auto m = randers_b(0.5, 0.0);
  auto circ = Submanifold::circle(vec2(0, 0), 1.0);
  auto rng = test_rng(47);
  for (int i = 0; i < 12; ++i) {
    Vec u(1);
    u << std::uniform_real_distribution<double>(0, 2 * M_PI)(rng);
    auto cone = unit_normal_cone(m, circ, u, 8);
    auto ann = annihilator_basis(circ, u);
    Vec p = circ.immerse(u);
    for (const auto& nv : cone) {
      CHECK(std::abs(m.evaluate(p, nv.components) - 1.0) <= 1e-10);
      // legendre image lies in the annihilator span
      Vec xi = legendre(m, p, nv.components).components;
      Vec proj = ann[0].components * ann[0].components.dot(xi);
      CHECK((xi - proj).norm() <= 1e-8 * xi.norm());
      // cone property under scaling
      auto tangents = circ.tangent_basis(u);
      for (double lambda : {0.5, 2.0}) {
        Vec w = lambda * nv.components;
        Vec ell = m.legendre_components(p, w);
        CHECK(std::abs(ell.dot(tangents[0])) <=
              1e-8 * m.evaluate(p, w) * tangents[0].norm());
      }
    }
  }
}

TEST_CASE("riemannian normals reduce to linear algebra and are antipodal") {
  auto s = sphere_chart_metric();
  auto circ = Submanifold::circle(vec2(0, 0), 0.7);
  Vec u(1);
  u << 1.1;
  auto cone = unit_normal_cone(s, circ, u, 8);
  REQUIRE(cone.size() == 2);
  Vec p = circ.immerse(u);
  Mat g = s.fundamental_tensor(p, vec2(1, 0));
  Vec tangent = circ.tangent_basis(u)[0];
  // metric-normal direction by direct linear algebra
  Vec candidate = g.llt().solve(annihilator_basis(circ, u)[0].components);
  candidate /= s.evaluate(p, candidate);
  double d0 = (cone[0].components - candidate).norm();
  double d1 = (cone[1].components - candidate).norm();
  CHECK(std::min(d0, d1) <= 1e-8);
  CHECK((cone[0].components + cone[1].components).norm() <= 1e-8);
  CHECK(std::abs(cone[0].components.dot(g * tangent)) <= 1e-8);
}

TEST_CASE("point submanifold yields a full circle of unit vectors") {
  auto m = randers_b(0.5, 0.0);
  auto pt = Submanifold::point(vec2(0, 0));
  auto cone = unit_normal_cone(m, pt, Vec(0), 64);
  CHECK(cone.size() == 64);
  for (const auto& nv : cone)
    CHECK(std::abs(m.evaluate(vec2(0, 0), nv.components) - 1.0) <= 1e-10);
}

TEST_CASE("orthogonal frame") {
  auto e = euclidean2();
  std::vector<Vec> seeds{vec2(1, 0), vec2(0, 1)};
  auto frame = build_orthogonal_frame(e, vec2(0, 0), vec2(1, 0), seeds);
  REQUIRE(frame.size() == 2);
  CHECK((frame[0] - vec2(1, 0)).norm() <= 1e-14);
  CHECK((frame[1] - vec2(0, 1)).norm() <= 1e-14);

  auto m = randers_b(0.5, 0.0);
  Vec p = vec2(0, 0), v = vec2(1, 0);
  auto fr = build_orthogonal_frame(m, p, v, seeds);
  Mat g = m.fundamental_tensor(p, v);
  CHECK(std::abs(fr[1].dot(g * v)) <= 1e-9);
  CHECK(fr[1].dot(g * fr[1]) == doctest::Approx(1.0).epsilon(1e-9));
  // E2 proportional to (-g12, g11)
  Vec expected = vec2(-g(0, 1), g(0, 0)).normalized();
  double align = std::abs(fr[1].normalized().dot(expected));
  CHECK(align == doctest::Approx(1.0).epsilon(1e-8));

  // property over random flags
  auto rng = test_rng(53);
  for (int i = 0; i < 20; ++i) {
    Vec w = random_unit2(rng) * 1.4;
    auto f2 = build_orthogonal_frame(m, p, w, seeds);
    Mat gw = m.fundamental_tensor(p, w);
    CHECK(std::abs(f2[1].dot(gw * w)) <= 1e-9 * w.norm());
    CHECK(std::abs(f2[1].dot(gw * f2[1]) - 1.0) <= 1e-9);
  }

  std::vector<Vec> bad{vec2(1, 0), vec2(1, 1e-13)};
  CHECK_THROWS_AS(
      build_orthogonal_frame(e, vec2(0, 0), vec2(1, 1e-13), bad),
      ConditioningError);
}

TEST_CASE("exp_submanifold") {
  auto e = euclidean2();
  auto x_axis = Submanifold::line(vec2(0, 0), vec2(1, 0), 1.2);
  Vec u(1);
  u << 0.5;
  auto cone = unit_normal_cone(e, x_axis, u, 8);
  const NormalVector& up =
      cone[0].components[1] > 0 ? cone[0] : cone[1];
  Vec q = exp_submanifold(e, x_axis, u, up, 0.7);
  CHECK((q - vec2(0.5, 0.7)).norm() <= 1e-10);

  auto m = randers_b(0.5, 0.0);
  auto y_axis = Submanifold::line(vec2(0, 0), vec2(0, 1), 1.2);
  Vec u0(1);
  u0 << 0.0;
  auto rc = unit_normal_cone(m, y_axis, u0, 8);
  const NormalVector& fwd =
      rc[0].components[0] > 0 ? rc[0] : rc[1];
  CHECK((exp_submanifold(m, y_axis, u0, fwd, 1.5) - vec2(1, 0)).norm() <= 1e-8);

  auto s = sphere_chart_metric();
  auto equator = Submanifold::circle(vec2(0, 0), 1.0);
  for (double theta : {0.0, 0.9, 2.2, 4.4}) {
    Vec ut(1);
    ut << theta;
    auto cn = unit_normal_cone(s, equator, ut, 8);
    Vec foot = equator.immerse(ut);
    const NormalVector& inward =
        cn[0].components.dot(foot) < 0 ? cn[0] : cn[1];
    Vec pole = exp_submanifold(s, equator, ut, inward, M_PI / 2);
    CHECK(pole.norm() <= 1e-5);
  }
}

TEST_CASE("foot point of a short minimizer is g-orthogonal to P") {
  // Brute-force closest foot point via a dense parameter sweep of oracle
  // distances, polished with the exact two-point solver, then the first
  // variation formula is checked on the minimizer.
  auto e = euclidean2(-2.5, 2.5);
  auto circ = Submanifold::circle(vec2(0, 0), 1.0);
  GridSpec spec;
  spec.region = box2(-2, 2);
  spec.resolution = {128, 128};
  spec.stencil_radius = 3;
  auto rng = test_rng(59);
  std::uniform_real_distribution<double> radius(1.15, 1.45);
  std::uniform_real_distribution<double> angle(0, 2 * M_PI);
  for (int trial = 0; trial < 6; ++trial) {
    double r = radius(rng), th = angle(rng);
    Vec q = vec2(r * std::cos(th), r * std::sin(th));
    auto rev_field = build_field(e.reverse(), spec, {q});
    // sweep d(p(u), q) = d_rev(q, p(u))
    int sweep = 512;
    double best_u = 0, best_d = 1e300;
    for (int i = 0; i < sweep; ++i) {
      Vec u(1);
      u << 2 * M_PI * i / sweep;
      double d = rev_field.distance(circ.immerse(u));
      if (d < best_d) {
        best_d = d;
        best_u = u[0];
      }
    }
    auto exact_len = [&](double uu) {
      Vec u(1);
      u << uu;
      auto sol = solve_bvp(e, circ.immerse(u), q);
      return e.evaluate(circ.immerse(u), sol.initial_velocity);
    };
    double span = 2 * M_PI / sweep * 4;
    double u_star = golden_section_max(
        [&](double uu) { return -exact_len(uu); }, best_u - span,
        best_u + span, 1e-10);
    Vec u(1);
    u << u_star;
    Vec p_star = circ.immerse(u);
    auto sol = solve_bvp(e, p_star, q);
    Vec w = sol.initial_velocity;
    Vec tangent = circ.tangent_basis(u)[0];
    double residual = std::abs(e.legendre_components(p_star, w).dot(tangent)) /
                      (e.evaluate(p_star, w) * tangent.norm());
    CHECK(residual <= 1e-3);
  }
}
