#include <doctest.h>

#include <rotflow/geometry.hpp>

#include <cmath>
#include <numbers>

using namespace rotflow;

// ============================================================
// Vector and matrix algebra
// ============================================================

TEST_CASE("vector operations") {
  const Vec2 a{3.0, -1.0}, b{0.5, 2.0};
  CHECK((a + b).e1 == doctest::Approx(3.5));
  CHECK((a - b).e2 == doctest::Approx(-3.0));
  CHECK(dot(a, b) == doctest::Approx(-0.5));
  CHECK(norm_sq(a) == doctest::Approx(10.0));
  CHECK(norm(Vec2{3.0, 4.0}) == doctest::Approx(5.0));
  CHECK(dot(perp(a), a) == doctest::Approx(0.0));
  CHECK(perp(Vec2{1.0, 0.0}).e2 == doctest::Approx(1.0));
}

TEST_CASE("matrix operations") {
  const Mat2 m{1.0, 2.0, 3.0, 4.0};
  const Vec2 v{1.0, -1.0};
  CHECK((m * v).e1 == doctest::Approx(-1.0));
  CHECK((m * v).e2 == doctest::Approx(-1.0));
  const Mat2 mt = transpose(m);
  CHECK(mt.m12 == doctest::Approx(3.0));
  const Mat2 prod = m * identity();
  CHECK(prod.m21 == doctest::Approx(3.0));
  CHECK(trace(m) == doctest::Approx(5.0));
  CHECK(frobenius(identity()) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("rotation is orthogonal and composes") {
  const Mat2 r1 = rotation(0.7), r2 = rotation(-0.2);
  const Mat2 should_be_identity = r1 * transpose(r1);
  CHECK(abs_max(should_be_identity - identity()) < 1e-15);
  const Mat2 composed = r1 * r2;
  CHECK(abs_max(composed - rotation(0.5)) < 1e-15);
  // Counterclockwise convention: rotating e1 by pi/2 gives e2.
  const Vec2 e2 = rotation(std::numbers::pi / 2.0) * Vec2{1.0, 0.0};
  CHECK(e2.e1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(e2.e2 == doctest::Approx(1.0));
}

TEST_CASE("outer product and projector") {
  const Vec2 x{2.0, 1.0};
  const Mat2 p = (1.0 / norm_sq(x)) * outer(x, x);
  CHECK(abs_max(p * p - p) < 1e-15);
  CHECK(trace(p) == doctest::Approx(1.0));
}

// ============================================================
// Rank-3 gradients
// ============================================================

TEST_CASE("contract_force matches the index sum") {
  Grad2 g;
  g.d1 = Mat2{1.0, 2.0, 3.0, 4.0};
  g.d2 = Mat2{-1.0, 0.5, 2.5, -2.0};
  const Mat2 f{2.0, -1.0, 4.0, 3.0};
  // u_i = sum_{jk} g[k](i, j) f(j, k); k indexes d1, d2.
  const double u1 = g.d1.m11 * f.m11 + g.d1.m12 * f.m21 + g.d2.m11 * f.m12 + g.d2.m12 * f.m22;
  const double u2 = g.d1.m21 * f.m11 + g.d1.m22 * f.m21 + g.d2.m21 * f.m12 + g.d2.m22 * f.m22;
  const Vec2 u = contract_force(g, f);
  CHECK(u.e1 == doctest::Approx(u1));
  CHECK(u.e2 == doctest::Approx(u2));
}

TEST_CASE("component accessors round-trip") {
  Grad2 g{};
  for (int i = 0; i < component_count(g); ++i) set_component(g, i, i + 0.5);
  for (int i = 0; i < component_count(g); ++i) CHECK(get_component(g, i) == doctest::Approx(i + 0.5));
  Mat2 m{};
  set_component(m, 2, -7.0);
  CHECK(m.m21 == doctest::Approx(-7.0));
  CHECK(abs_max(g) == doctest::Approx(7.5));
}
