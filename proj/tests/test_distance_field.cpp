#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>

#include "finsler/distance_field.hpp"
#include "test_support.hpp"

using namespace finsler;
using namespace finsler::testing;

namespace {

GridSpec spec_for(double lo, double hi, int res, int stencil = 3) {
  GridSpec s;
  s.region = box2(lo, hi);
  s.resolution = {res, res};
  s.stencil_radius = stencil;
  return s;
}

}  // namespace

TEST_CASE("stencil offsets are coprime and complete") {
  auto offsets = stencil_offsets(2, 3);
  CHECK(offsets.size() == 32);
  for (const auto& o : offsets) {
    CHECK((o[0] != 0 || o[1] != 0));
    int g = std::abs(o[0]);
    int b = std::abs(o[1]);
    while (b) {
      int t = g % b;
      g = b;
      b = t;
    }
    CHECK(g == 1);
  }
  CHECK(stencil_offsets(2, 1).size() == 8);
}

TEST_CASE("euclidean field distances") {
  auto e = euclidean2();
  auto field = build_field(e, spec_for(-1.5, 1.5, 200), {vec2(0, 0)});
  CHECK(field.distance(vec2(1, 0)) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(field.distance(vec2(0.5, 0.5)) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(0.02));
  CHECK(field.distance(vec2(0, 0)) == 0.0);

  // triangle inequality with interpolation slack
  auto rng = test_rng(61);
  std::uniform_real_distribution<double> coord(-1.2, 1.2);
  for (int i = 0; i < 30; ++i) {
    Vec q = vec2(coord(rng), coord(rng));
    Vec mpt = vec2(coord(rng), coord(rng));
    double dq = field.distance(q);
    double dm = field.distance(mpt);
    double leg = e.evaluate(vec2(0, 0), q - mpt);
    // d(p, q) <= d(p, m) + F(q - m) for the constant metric, up to oracle slack
    CHECK(dq <= dm + leg + 2.0 * field.error_bound(std::max(dq, dm)));
  }
}

TEST_CASE("randers field exhibits directed distances") {
  auto m = randers_b(0.5, 0.0);
  auto field = build_field(m, spec_for(-2, 2, 256), {vec2(0, 0)});
  double fwd = field.distance(vec2(1, 0));
  double bwd = field.distance(vec2(-1, 0));
  CHECK(fwd == doctest::Approx(1.5).epsilon(0.02));
  // Straight-line value F((-1,0)) = 0.5; the oracle must reproduce it.
  CHECK(bwd == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("reverse-metric field measures arrival distances") {
  auto m = randers_b(0.5, 0.0);
  auto spec = spec_for(-2, 2, 192);
  auto rng = test_rng(67);
  std::uniform_real_distribution<double> coord(-1.4, 1.4);
  Vec p = vec2(0.3, -0.2);
  auto fwd_from_p = build_field(m, spec, {p});
  auto rev_from_p = build_field(m.reverse(), spec, {p});
  for (int i = 0; i < 12; ++i) {
    Vec q = vec2(coord(rng), coord(rng));
    auto fwd_from_q = build_field(m, spec, {q});
    double lhs = rev_from_p.distance(q);   // d_{F~}(p, q)
    double rhs = fwd_from_q.distance(p);   // d_F(q, p)
    CHECK(std::abs(lhs - rhs) <=
          2.0 * fwd_from_q.error_bound(std::max(lhs, rhs)));
    // directedness bookkeeping of the forward field
    double direct = fwd_from_p.distance(q);
    CHECK(direct == doctest::Approx(m.evaluate(p, q - p))
                        .epsilon(0.025));
  }
}

TEST_CASE("ball membership") {
  auto e = euclidean2();
  auto spec = spec_for(-2, 2, 128);
  Vec p = vec2(0, 0);
  auto fwd = build_field(e, spec, {p});
  auto bwd = build_field(e.reverse(), spec, {p});
  auto rng = test_rng(71);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  for (int i = 0; i < 40; ++i) {
    Vec q = vec2(coord(rng), coord(rng));
    auto cls = ball_membership(fwd, bwd, 0.8, q);
    CHECK((cls == BallMembership::Both || cls == BallMembership::Neither));
  }
  CHECK(ball_membership(fwd, bwd, 0.1, p) == BallMembership::Both);

  auto m = randers_b(0.5, 0.0);
  auto mf = build_field(m, spec_for(-2, 2, 256), {p});
  auto mb = build_field(m.reverse(), spec_for(-2, 2, 256), {p});
  CHECK(ball_membership(mf, mb, 1.2, vec2(1, 0)) == BallMembership::Backward);
}

TEST_CASE("distance from a submanifold") {
  auto e = euclidean2();
  auto x_axis = Submanifold::line(vec2(0, 0), vec2(1, 0), 1.9);
  auto spec = spec_for(-2, 2, 192);
  CHECK(distance_from_submanifold(e, x_axis, spec, vec2(0.3, 0.7)) ==
        doctest::Approx(0.7).epsilon(0.02));

  auto m = randers_b(0.5, 0.0);
  auto y_axis = Submanifold::line(vec2(0, 0), vec2(0, 1), 1.9);
  // 1-d brute-force oracle: min over y of F((1,0) - (0,y))
  double oracle = 1e300;
  for (int i = 0; i <= 20000; ++i) {
    double y = -1.9 + 3.8 * i / 20000;
    oracle = std::min(oracle, m.evaluate(vec2(0, y), vec2(1.0, -y)));
  }
  CHECK(oracle == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(distance_from_submanifold(m, y_axis, spec, vec2(1, 0)) ==
        doctest::Approx(1.5).epsilon(0.02));

  auto field = build_field(e, spec, x_axis);
  CHECK(field.distance(vec2(0.37, 0.0)) <= field.grid_step());
}

TEST_CASE("snapped sources report a snap budget") {
  auto e = euclidean2();
  auto field = build_field(e, spec_for(-2, 2, 64), {vec2(0.011, 0.017)});
  CHECK(field.snap_budget() > 0.0);
  CHECK(field.snap_budget() <= std::sqrt(2.0) * field.grid_step());
}

TEST_CASE("refinement never drifts beyond the error bound") {
  auto m = randers_b(0.5, 0.0);
  auto coarse = build_field(m, spec_for(-1.5, 1.5, 96), {vec2(0, 0)});
  auto fine = build_field(m, spec_for(-1.5, 1.5, 192, 4), {vec2(0, 0)});
  auto rng = test_rng(73);
  std::uniform_real_distribution<double> coord(-1.2, 1.2);
  for (int i = 0; i < 60; ++i) {
    Vec q = vec2(coord(rng), coord(rng));
    double dc = coarse.distance(q);
    double df = fine.distance(q);
    CHECK(std::abs(dc - df) <= coarse.error_bound(std::max(dc, df)));
  }
}

TEST_CASE("oracle converges under refinement") {
  auto e = euclidean2();
  auto f1 = build_field(e, spec_for(-1, 1, 128), {vec2(0, 0)});
  auto f2 = build_field(e, spec_for(-1, 1, 256), {vec2(0, 0)});
  for (Vec q : {vec2(0.7, 0.3), vec2(-0.5, 0.6), vec2(0.2, -0.8)}) {
    double a = f1.distance(q), b = f2.distance(q);
    CHECK(std::abs(a - b) <= 0.01 * std::max(a, b));
  }
}

TEST_CASE("determinism and cache round trip") {
  auto m = randers_b(0.3, 0.1);
  auto spec = spec_for(-1, 1, 64);
  auto f1 = build_field(m, spec, {vec2(0, 0)});
  auto f2 = build_field(m, spec, {vec2(0, 0)});
  REQUIRE(f1.node_values().size() == f2.node_values().size());
  for (size_t i = 0; i < f1.node_values().size(); ++i)
    CHECK(f1.node_values()[i] == f2.node_values()[i]);

  std::string path = "/tmp/finsler_test_field.bin";
  f1.save(path);
  auto loaded = DistanceField::load_values(path, f1.cache_key());
  REQUIRE(loaded.has_value());
  CHECK(loaded->size() == f1.node_values().size());
  for (size_t i = 0; i < loaded->size(); ++i)
    CHECK((*loaded)[i] == f1.node_values()[i]);
  CHECK(!DistanceField::load_values(path, f1.cache_key() + 1).has_value());
  auto rebuilt = build_field(m, spec, {vec2(0, 0)}, loaded);
  CHECK(rebuilt.distance(vec2(0.4, 0.2)) == f1.distance(vec2(0.4, 0.2)));
  std::remove(path.c_str());
}

TEST_CASE("field construction errors") {
  auto e = euclidean2();
  CHECK_THROWS_AS(build_field(e, spec_for(-5, 5, 32), {vec2(0, 0)}),
                  DomainError);
  CHECK_THROWS_AS(build_field(e, spec_for(-1, 1, 32), {vec2(1.5, 0)}),
                  DomainError);
  CHECK_THROWS_AS(build_field(e, spec_for(-1, 1, 32), std::vector<Vec>{}),
                  DomainError);
  auto field = build_field(e, spec_for(-1, 1, 32), {vec2(0, 0)});
  CHECK_THROWS_AS(field.distance(vec2(1.2, 0)), DomainError);
}
