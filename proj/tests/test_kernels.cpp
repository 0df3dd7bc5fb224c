#include <doctest.h>

#include <rotflow/kernels.hpp>
#include <rotflow/quadrature.hpp>

#include <cmath>
#include <vector>

using namespace rotflow;

namespace {

// Deterministic point stream from a fixed linear congruential generator so
// the identity checks cover scattered magnitudes reproducibly.
struct PointStream {
  unsigned long long state = 0x2545F4914F6CDD1DULL;
  double next_unit() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>((state >> 11) & ((1ULL << 53) - 1)) / static_cast<double>(1ULL << 53);
  }
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }
};

// Oracle for H built from its defining time integral of the heat-kernel
// Hessian: H_ij(x, t) = int_t^inf d_i d_j G(x, tau) dtau with
// d_i d_j G = G (x_i x_j / (4 tau^2) - delta_ij / (2 tau)).
Mat2 hessian_tail_oracle(Vec2 x, double t) {
  auto integrand = [x](double tau) {
    const double g = gauss(x, tau);
    const Mat2 quad_term = (1.0 / (4.0 * tau * tau)) * outer(x, x);
    const Mat2 lap_term = (1.0 / (2.0 * tau)) * identity();
    return g * (quad_term - lap_term);
  };
  QuadratureBudget tight;
  tight.abs_tol = 1e-11;
  auto res = integrate_1d(integrand, t, std::numeric_limits<double>::infinity(), tight);
  REQUIRE(res.converged);
  return res.value;
}

}  // namespace

// ============================================================
// Scalar kernel
// ============================================================

TEST_CASE("gauss value and normalization") {
  CHECK(gauss({2.0, 0.0}, 1.0) == doctest::Approx(0.029274915762159580).epsilon(1e-13));
  CHECK(gauss({0.0, 0.0}, 2.0) == doctest::Approx(1.0 / (8.0 * std::numbers::pi)).epsilon(1e-14));
  CHECK_THROWS_AS(gauss({1.0, 0.0}, 0.0), std::domain_error);
  CHECK_THROWS_AS(gauss({1.0, 0.0}, -2.0), std::domain_error);
}

// ============================================================
// Tensor kernels: structure and identities
// ============================================================

TEST_CASE("H matches the Hessian tail oracle") {
  const std::vector<std::pair<Vec2, double>> pts = {
      {{1.0, 0.0}, 1.0},   {{0.5, -0.5}, 0.25}, {{2.0, 1.0}, 4.0},
      {{-3.0, 2.0}, 0.5},  {{0.1, 0.05}, 1.0},  {{4.0, -1.0}, 10.0},
      {{0.7, 0.7}, 0.03},  {{-0.2, 1.4}, 2.0},  {{6.0, 0.0}, 1.5},
      {{1.0, -2.0}, 20.0},
  };
  for (const auto& [x, t] : pts) {
    const Mat2 h = kernel_H(x, t);
    const Mat2 oracle = hessian_tail_oracle(x, t);
    CHECK(abs_max(h - oracle) < 1e-8);
  }
}

TEST_CASE("values at the origin") {
  const double t = 0.7;
  const Mat2 h0 = kernel_H({0.0, 0.0}, t);
  CHECK(abs_max(h0 - (-1.0 / (8.0 * std::numbers::pi * t)) * identity()) < 1e-15);
  const Mat2 k0 = kernel_K({0.0, 0.0}, t);
  CHECK(abs_max(k0 - (1.0 / (8.0 * std::numbers::pi * t)) * identity()) < 1e-15);
  CHECK(abs_max(kernel_B({0.0, 0.0}, t)) == 0.0);
  CHECK(abs_max(grad_K({0.0, 0.0}, t)) == 0.0);
}

TEST_CASE("split identity K = exp(-s)/(8 pi t) I + B holds to 1e-12") {
  PointStream stream;
  for (int i = 0; i < 100; ++i) {
    const double scale = std::pow(10.0, stream.next_in(-3.0, 1.3));
    const double angle = stream.next_in(0.0, 2.0 * std::numbers::pi);
    const Vec2 x = scale * dir(angle);
    const double t = std::pow(10.0, stream.next_in(-3.0, 2.0));
    const double s = norm_sq(x) / (4.0 * t);
    const Mat2 lhs = kernel_K(x, t);
    const Mat2 rhs = (std::exp(-s) / (8.0 * std::numbers::pi * t)) * identity() + kernel_B(x, t);
    CHECK(abs_max(lhs - rhs) <= 1e-12 * std::max(1.0, abs_max(lhs)));
  }
}

TEST_CASE("series and closed-form branches agree near the switch") {
  KernelEvalConfig force_series;
  force_series.series_switch_radius = 1e-2;  // covers the overlap annulus
  KernelEvalConfig force_closed;
  force_closed.series_switch_radius = 1e-12;
  for (double s : {1e-4, 3e-4, 6e-4, 9e-4, 2e-3, 5e-3}) {
    const double t = 0.8;
    const Vec2 x = {std::sqrt(4.0 * t * s), 0.0};
    const Mat2 hs = kernel_H(x, t, force_series);
    const Mat2 hc = kernel_H(x, t, force_closed);
    CHECK(abs_max(hs - hc) <= 1e-10 * std::max(1.0, abs_max(hc)));
    const Mat2 bs = kernel_B(x, t, force_series);
    const Mat2 bc = kernel_B(x, t, force_closed);
    CHECK(abs_max(bs - bc) <= 1e-10 * std::max(1.0, abs_max(bc)));
    const Grad2 gs = grad_K(x, t, force_series);
    const Grad2 gc = grad_K(x, t, force_closed);
    CHECK(abs_max(gs - gc) <= 1e-9 * std::max(1.0, abs_max(gc)));
  }
}

TEST_CASE("B carries the reflector structure") {
  const Vec2 x{1.2, -0.7};
  const double t = 0.9;
  const Mat2 b = kernel_B(x, t);
  // Traceless and symmetric.
  CHECK(std::abs(trace(b)) < 1e-15);
  CHECK(std::abs(b.m12 - b.m21) < 1e-16);
  // Frobenius norm integrates over time to sqrt(2) / (8 pi), independent
  // of the spatial point.
  QuadratureBudget tight;
  tight.abs_tol = 1e-11;
  for (const Vec2 z : {Vec2{1.0, 0.0}, Vec2{0.3, 0.4}, Vec2{-5.0, 2.0}}) {
    auto res = integrate_1d([z](double tt) { return frobenius(kernel_B(z, tt)); }, 0.0,
                            std::numeric_limits<double>::infinity(), tight);
    CHECK(res.value == doctest::Approx(0.056269769759819129).epsilon(1e-8));
  }
}

// ============================================================
// Gradients
// ============================================================

TEST_CASE("grad_gauss matches finite differences") {
  const Vec2 x{0.8, -1.1};
  const double t = 0.6, h = 1e-5;
  const Vec2 g = grad_gauss(x, t);
  const double d1 = (gauss({x.e1 + h, x.e2}, t) - gauss({x.e1 - h, x.e2}, t)) / (2.0 * h);
  const double d2 = (gauss({x.e1, x.e2 + h}, t) - gauss({x.e1, x.e2 - h}, t)) / (2.0 * h);
  CHECK(g.e1 == doctest::Approx(d1).epsilon(1e-8));
  CHECK(g.e2 == doctest::Approx(d2).epsilon(1e-8));
}

TEST_CASE("grad_K matches the finite-difference validator") {
  PointStream stream;
  for (int i = 0; i < 12; ++i) {
    const double scale = std::pow(10.0, stream.next_in(-1.0, 0.8));
    const Vec2 x = scale * dir(stream.next_in(0.0, 6.28));
    const double t = std::pow(10.0, stream.next_in(-1.0, 1.0));
    const Grad2 analytic = grad_K(x, t);
    const Grad2 fd = grad_K_fd(x, t);
    CHECK(abs_max(analytic - fd) < 5e-7 * std::max(1.0, abs_max(analytic)));
  }
}

TEST_CASE("grad_K is symmetric in the matrix indices") {
  const Vec2 x{0.9, 0.4};
  const Grad2 g = grad_K(x, 1.3);
  CHECK(g.d1.m12 == doctest::Approx(g.d1.m21).epsilon(1e-14));
  CHECK(g.d2.m12 == doctest::Approx(g.d2.m21).epsilon(1e-14));
}

// ============================================================
// Leading kernel
// ============================================================

TEST_CASE("leading kernel structure") {
  const Vec2 x{3.0, -1.0}, y{0.5, 0.25};
  const Mat2 l = leading_kernel(x, y);
  const Mat2 expected = (1.0 / (4.0 * std::numbers::pi * norm_sq(x))) * outer(perp(x), perp(y));
  CHECK(abs_max(l - expected) < 1e-16);
  CHECK_THROWS_AS(leading_kernel({0.0, 0.0}, y), std::domain_error);

  // Contraction of the gradient against a tensor sees only the
  // antisymmetric part: sum_{jk} d_k L_ij F_jk = c (F21 - F12) perp(x)_i.
  const Mat2 f{2.0, 0.7, -0.4, 1.0};
  const Grad2 gl = grad_leading_kernel(x, y);
  const Vec2 v = contract_force(gl, f);
  const Vec2 expect = ((f.m21 - f.m12) / (4.0 * std::numbers::pi * norm_sq(x))) * perp(x);
  CHECK(abs_max(v - expect) < 1e-15);
}
