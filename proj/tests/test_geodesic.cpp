#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "finsler/geodesic.hpp"
#include "test_support.hpp"

using namespace finsler;
using namespace finsler::testing;

TEST_CASE("length of straight segments") {
  auto e = euclidean2(-6, 6);
  auto c = Curve::straight(vec2(0, 0), vec2(3, 4), 16);
  CHECK(length(e, c) == doctest::Approx(5.0).epsilon(1e-9));

  auto m = randers_b(0.5, 0.0);
  auto fwd = Curve::straight(vec2(0, 0), vec2(1, 0), 8);
  auto bwd = Curve::straight(vec2(1, 0), vec2(0, 0), 8);
  CHECK(length(m, fwd) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(length(m, bwd) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("length is parametrization invariant") {
  auto m = sphere_chart_metric();
  // same image, uneven sampling
  std::vector<double> t1, t2;
  std::vector<Vec> p1, p2;
  Vec a = vec2(-0.8, 0.1), b = vec2(0.9, 0.4);
  const int n1 = 400, n2 = 631;
  for (int i = 0; i <= n1; ++i) {
    double s = static_cast<double>(i) / n1;
    t1.push_back(s);
    p1.push_back(a + s * (b - a));
  }
  for (int i = 0; i <= n2; ++i) {
    double s = std::pow(static_cast<double>(i) / n2, 1.7);
    t2.push_back(i == 0 ? 0.0 : s);
    p2.push_back(a + s * (b - a));
  }
  double l1 = length(m, Curve(t1, p1));
  double l2 = length(m, Curve(t2, p2));
  CHECK(std::abs(l1 - l2) < 1e-6 * l1);
}

TEST_CASE("length is additive under concatenation") {
  auto m = randers_b(0.3, 0.2);
  Vec a = vec2(-1, 0), mid = vec2(0.2, 0.4), b = vec2(1, 1);
  auto whole = Curve({0, 0.5, 1.0}, {a, mid, b});
  auto first = Curve({0, 0.5}, {a, mid});
  auto second = Curve({0.5, 1.0}, {mid, b});
  CHECK(length(m, whole) ==
        doctest::Approx(length(m, first) + length(m, second)).epsilon(1e-15));
}

TEST_CASE("curve domain error") {
  auto e = euclidean2();
  auto c = Curve::straight(vec2(0, 0), vec2(5, 0), 8);
  CHECK_THROWS_AS(length(e, c), DomainError);
}

TEST_CASE("energy basics") {
  auto e = euclidean2();
  auto unit = Curve::straight(vec2(0, 0), vec2(1, 0), 10);
  CHECK(energy(e, unit) == doctest::Approx(1.0).epsilon(1e-12));

  // speed profile 2t on [0,1]: x(t) = t^2, energy = integral (2t)^2 = 4/3.
  std::vector<double> times;
  std::vector<Vec> pts;
  const int n = 4000;
  double simpson = 0.0;  // independent quadrature oracle for the same profile
  for (int i = 0; i <= n; ++i) {
    double t = static_cast<double>(i) / n;
    times.push_back(t);
    pts.push_back(vec2(t * t, 0.0));
  }
  for (int i = 0; i < n; i += 2) {
    double t0 = static_cast<double>(i) / n, t2 = static_cast<double>(i + 2) / n;
    double t1 = 0.5 * (t0 + t2);
    auto f = [](double t) { return 4.0 * t * t; };
    simpson += (t2 - t0) / 6.0 * (f(t0) + 4 * f(t1) + f(t2));
  }
  CHECK(simpson == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
  CHECK(energy(e, Curve(times, pts)) ==
        doctest::Approx(4.0 / 3.0).epsilon(1e-6));

  // equality case of energy >= length^2 / duration
  auto m = randers_b(0.4, 0.1);
  auto c = Curve::straight(vec2(-0.5, 0.2), vec2(0.8, -0.3), 20, 0.0, 2.0);
  double len = length(m, c);
  CHECK(energy(m, c) == doctest::Approx(len * len / 2.0).epsilon(1e-6));
}

TEST_CASE("energy dominates length^2/duration for uneven speed") {
  auto e = euclidean2();
  auto rng = test_rng(17);
  std::uniform_real_distribution<double> jitter(0.2, 1.8);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> times{0.0};
    std::vector<Vec> pts{vec2(-0.5, -0.5)};
    Vec dir = vec2(1.0, 0.9) / 40.0;
    for (int i = 1; i <= 40; ++i) {
      times.push_back(times.back() + jitter(rng) / 40.0);
      pts.push_back(pts.back() + dir);
    }
    Curve c(times, pts);
    double len = length(e, c);
    double dur = c.t_end() - c.t_start();
    CHECK(energy(e, c) >= len * len / dur - 1e-9);
  }
}

TEST_CASE("straight-line geodesics of constant-coefficient metrics") {
  auto m = randers_b(0.5, 0.0);
  Vec p0 = vec2(-1, -0.5), v0 = vec2(0.9, 0.55);
  auto path = shoot(m, p0, v0, 2.0);
  CHECK(path.termination() == Termination::ReachedFinalTime);
  for (int i = 0; i <= 40; ++i) {
    double t = 2.0 * i / 40;
    CHECK((path.position(t) - (p0 + t * v0)).norm() <= 1e-8);
  }
  // pointwise Euler-Lagrange residual of the straight line
  for (int i = 0; i <= 10; ++i) {
    double t = 2.0 * i / 10;
    Vec a = geodesic_acceleration(m, p0 + t * v0, v0);
    CHECK(a.norm() <= 1e-10);
  }
}

TEST_CASE("sphere chart geodesic reaches the pole") {
  auto m = sphere_chart_metric();
  Vec p0 = vec2(1, 0), v0 = vec2(-1, 0);  // F-unit: conformal factor is 1 here
  CHECK(m.evaluate(p0, v0) == doctest::Approx(1.0));
  auto path = shoot(m, p0, v0, M_PI / 2);
  CHECK(path.position(M_PI / 2).norm() <= 1e-5);
}

TEST_CASE("sphere chart geodesics match the great-circle oracle") {
  auto m = sphere_chart_metric(-8, 8);
  auto rng = test_rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    Vec p0 = vec2(std::uniform_real_distribution<double>(-0.6, 0.6)(rng),
                  std::uniform_real_distribution<double>(-0.6, 0.6)(rng));
    Vec dir = random_unit2(rng);
    Vec v0 = dir / m.evaluate(p0, dir);  // unit F-speed
    auto path = shoot(m, p0, v0, 3.0);
    REQUIRE(path.termination() == Termination::ReachedFinalTime);
    for (double t : {0.5, 1.0, 2.0, 3.0}) {
      Vec oracle = great_circle_chart(p0, v0, t);
      CHECK((path.position(t) - oracle).norm() <= 1e-5);
    }
  }
}

TEST_CASE("speed is conserved along geodesics") {
  auto m = sphere_chart_metric();
  Vec p0 = vec2(0.4, -0.2), v0 = vec2(0.8, 0.7);
  double f0 = m.evaluate(p0, v0);
  auto path = shoot(m, p0, v0, 2.0);
  for (int i = 1; i <= 50; ++i) {
    double t = path.t_end() * i / 50;
    double f = m.evaluate(path.position(t), path.velocity(t));
    CHECK(std::abs(f - f0) <= 1e-6 * f0);
  }
}

TEST_CASE("affine rescaling") {
  auto m = sphere_chart_metric();
  Vec p0 = vec2(0.3, 0.1), v0 = vec2(-0.5, 0.6);
  for (double lambda : {0.5, 2.0}) {
    auto a = shoot(m, p0, lambda * v0, 1.0);
    auto b = shoot(m, p0, v0, lambda);
    CHECK((a.position(1.0) - b.position(lambda)).norm() <= 1e-8);
  }
}

TEST_CASE("boundary behaviour of shoot") {
  auto m = euclidean2();
  Vec p0 = vec2(0, 0), v0 = vec2(1, 0);
  CHECK_THROWS_AS(shoot(m, p0, v0, 0.0), DomainError);
  auto tiny = shoot(m, p0, v0, 1e-9);
  CHECK((tiny.position(1e-9) - vec2(1e-9, 0)).norm() <= 1e-15);
}

TEST_CASE("domain exit is detected with an accurate exit time") {
  auto m = euclidean2();  // chart is [-2, 2]^2
  auto path = shoot(m, vec2(0, 0), vec2(1, 0), 5.0);
  CHECK(path.termination() == Termination::LeftChartDomain);
  CHECK(std::abs(path.t_exit() - 2.0) <= 1e-9);
}

TEST_CASE("short geodesics locally minimize the length") {
  auto m = sphere_chart_metric();
  auto rng = test_rng(29);
  std::uniform_real_distribution<double> coord(-0.5, 0.5);
  for (int trial = 0; trial < 4; ++trial) {
    Vec p0 = vec2(coord(rng), coord(rng));
    Vec dir = random_unit2(rng);
    Vec v0 = dir / m.evaluate(p0, dir);
    double t_max = 0.1;
    auto path = shoot(m, p0, v0, t_max);
    Curve geo = path.to_curve(64);
    double lgeo = length(m, geo);
    std::normal_distribution<double> bump(0.0, 0.01);
    for (int pert = 0; pert < 50; ++pert) {
      std::vector<double> times = geo.times();
      std::vector<Vec> pts = geo.points();
      Vec amp = vec2(bump(rng), bump(rng));
      for (size_t i = 1; i + 1 < pts.size(); ++i) {
        double s = static_cast<double>(i) / (pts.size() - 1);
        pts[i] += std::sin(M_PI * s) * amp;
      }
      CHECK(lgeo <= length(m, Curve(times, pts)) + 1e-7);
    }
  }
}

TEST_CASE("exp_map basics") {
  auto e = euclidean2();
  CHECK((exp_map(e, vec2(0, 0), vec2(0.3, 0.4)) - vec2(0.3, 0.4)).norm() <=
        1e-12);

  // homogeneity: exp(t * unit) = gamma_unit(t)
  auto m = sphere_chart_metric();
  auto rng = test_rng(31);
  Vec p0 = vec2(0.5, 0.2);
  Vec dir = random_unit2(rng);
  Vec unit = dir / m.evaluate(p0, dir);
  auto path = shoot(m, p0, unit, 1.0);
  for (double t : {0.25, 0.7, 1.0}) {
    CHECK((exp_map(m, p0, t * unit) - path.position(t)).norm() <= 1e-9);
  }

  // equator to pole
  Vec q = exp_map(m, vec2(1, 0), vec2(-M_PI / 2, 0));
  CHECK(q.norm() <= 1e-5);
}

TEST_CASE("exp_map horizon error carries the exit time") {
  auto e = euclidean2();
  try {
    exp_map(e, vec2(0, 0), vec2(4, 0));
    CHECK(false);
  } catch (const HorizonError& err) {
    CHECK(std::abs(err.t_exit - 0.5) <= 1e-9);
  }
}

TEST_CASE("d_exp") {
  auto e = euclidean2();
  Vec p = vec2(0.1, -0.2), v = vec2(0.5, 0.3), u = vec2(-0.4, 0.9);
  CHECK((d_exp(e, p, v, u) - u).norm() <= 1e-7);
  CHECK(d_exp(e, p, v, vec2(0, 0)).norm() == 0.0);

  // focal degeneracy: rotating the equator foot point of a polar geodesic
  auto m = sphere_chart_metric();
  auto variation = [&](double s) {
    Vec foot = vec2(std::cos(s), std::sin(s));
    Vec inward = -(M_PI / 2) * foot;
    return TangentVector{foot, inward};
  };
  CHECK(d_exp(m, variation, 1e-5).norm() <= 1e-4);
}

TEST_CASE("two-point solver") {
  auto m = randers_b(0.5, 0.0);
  Vec p = vec2(-0.2, 0.1), q = vec2(0.7, 0.4);
  auto sol = solve_bvp(m, p, q);
  CHECK(sol.endpoint_error <= 1e-9);
  CHECK((exp_map(m, p, sol.initial_velocity) - q).norm() <= 1e-9);
  // constant-coefficient metrics connect by straight lines
  CHECK((sol.initial_velocity - (q - p)).norm() <= 1e-8);

  auto s = sphere_chart_metric();
  Vec a = vec2(0.2, 0.0), b = vec2(-0.1, 0.4);
  auto sol2 = solve_bvp(s, a, b);
  Vec mid = great_circle_chart(a, sol2.initial_velocity,
                               0.5 * s.evaluate(a, sol2.initial_velocity));
  auto path = shoot(s, a, sol2.initial_velocity, 1.0);
  CHECK((path.position(0.5) - mid).norm() <= 1e-6);
}
