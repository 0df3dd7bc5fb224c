#include <doctest.h>

#include <rotflow/forces.hpp>

#include <cmath>
#include <numbers>
#include <vector>

using namespace rotflow;

namespace {

double envelope_value(const DecayClass& d, double rho) {
  double m = d.bound;
  if (rho > d.support_radius) m *= d.support_eps;
  return m * std::pow(1.0 + rho, -d.exponent);
}

// Deterministic sample points covering several scales and directions.
std::vector<Vec2> sample_points() {
  std::vector<Vec2> pts;
  for (double rho : {0.05, 0.3, 0.7, 0.95, 1.5, 3.0, 8.0, 20.0, 60.0}) {
    for (double theta : {0.1, 1.3, 2.9, 4.4, 5.8}) {
      pts.push_back(rho * dir(theta));
    }
  }
  return pts;
}

}  // namespace

// ============================================================
// Envelope validity
// ============================================================

TEST_CASE("pointwise presets stay below their declared envelopes") {
  for (const ForceSpec& spec :
       {make_rot_bump(1.7, 0.5), make_radial_bump(0.8, 0.25),
        make_critical_tangential(2.0)}) {
    CAPTURE(spec.name);
    for (Vec2 y : sample_points()) {
      CHECK(norm(spec.f(y)) <= envelope_value(spec.decay, norm(y)) * (1 + 1e-9));
    }
  }
}

TEST_CASE("divergence-form preset bounds both tensor and divergence") {
  const ForceSpec spec = make_divform_gauss(1.3, 0.6, 0.0);
  for (Vec2 y : sample_points()) {
    CHECK(abs_max(spec.tensor(y)) <=
          envelope_value(spec.decay, norm(y)) * (1 + 1e-9));
    CHECK(norm(spec.divergence(y)) <=
          envelope_value(spec.divergence_decay, norm(y)) * (1 + 1e-9));
  }
}

// ============================================================
// Moment constants
// ============================================================

TEST_CASE("rot_bump angular moment integrates to pi s / 20") {
  // int perp(y) . f dy = 2 pi s int_0^1 rho^3 (1 - rho^2)^3 drho = pi s / 20.
  const double s = 1.4;
  const ForceSpec spec = make_rot_bump(s, 0.5);
  auto res = integrate_region(
      [&](Vec2 y) { return dot(perp(y), spec.f(y)); },
      Region{Region::Kind::disk, 0.0, 1.0}, std::nullopt);
  CHECK(res.converged);
  CHECK(res.value == doctest::Approx(std::numbers::pi * s / 20.0).epsilon(1e-9));
}

TEST_CASE("critical tangential moment grows like the closed form") {
  // m(R) = pi s (log(1 + R^2) + 1/(1 + R^2) - 1).
  const double s = 0.9;
  const ForceSpec spec = make_critical_tangential(s);
  for (double R : {4.0, 16.0}) {
    auto res = integrate_region(
        [&](Vec2 y) { return dot(perp(y), spec.f(y)); },
        Region{Region::Kind::disk, 0.0, R}, std::nullopt);
    const double expected = std::numbers::pi * s *
                            (std::log1p(R * R) + 1.0 / (1.0 + R * R) - 1.0);
    CHECK(res.value == doctest::Approx(expected).epsilon(1e-8));
  }
  CHECK_FALSE(spec.angular_moment_integrable);
}

TEST_CASE("divform_gauss rotational coefficient is 4 pi beta s") {
  const double s = 1.1, beta = 0.45;
  const ForceSpec spec = make_divform_gauss(s, beta, 0.0);
  auto res = integrate_region(
      [&](Vec2 y) {
        const Mat2 F = spec.tensor(y);
        return F.m12 - F.m21;
      },
      Region{Region::Kind::disk, 0.0, 13.0}, std::nullopt);
  CHECK(res.value ==
        doctest::Approx(4.0 * std::numbers::pi * beta * s).epsilon(1e-9));
}

// ============================================================
// Structure
// ============================================================

TEST_CASE("divform_gauss divergence matches finite differences") {
  const ForceSpec spec = make_divform_gauss(0.8, 0.3, 0.5);
  const double h = 1e-5;
  for (Vec2 y : {Vec2{0.4, -0.7}, Vec2{1.2, 0.9}, Vec2{-2.0, 0.3}}) {
    auto column = [&](Vec2 p, int j) {
      const Mat2 F = spec.tensor(p);
      return j == 0 ? Vec2{F.m11, F.m21} : Vec2{F.m12, F.m22};
    };
    const Vec2 fd =
        (1.0 / (2.0 * h)) * (column({y.e1 + h, y.e2}, 0) -
                             column({y.e1 - h, y.e2}, 0)) +
        (1.0 / (2.0 * h)) * (column({y.e1, y.e2 + h}, 1) -
                             column({y.e1, y.e2 - h}, 1));
    CHECK(norm(fd - spec.divergence(y)) < 1e-8);
  }
}

TEST_CASE("radial_bump is a pure gradient field") {
  // curl f = d1 f2 - d2 f1 vanishes for g(|y|^2) y.
  const ForceSpec spec = make_radial_bump(1.0, 0.5);
  const double h = 1e-5;
  for (Vec2 y : {Vec2{0.3, 0.1}, Vec2{-0.5, 0.6}, Vec2{0.2, -0.8}}) {
    const double curl =
        (spec.f({y.e1 + h, y.e2}).e2 - spec.f({y.e1 - h, y.e2}).e2) /
            (2.0 * h) -
        (spec.f({y.e1, y.e2 + h}).e1 - spec.f({y.e1, y.e2 - h}).e1) /
            (2.0 * h);
    CHECK(std::abs(curl) < 1e-9);
  }
}

TEST_CASE("strength scales the density linearly") {
  const ForceSpec one = make_rot_bump(1.0, 0.5);
  const ForceSpec three = make_rot_bump(3.0, 0.5);
  const Vec2 y{0.4, 0.2};
  CHECK(norm(three.f(y) - 3.0 * one.f(y)) < 1e-15);
  CHECK(three.decay.bound == doctest::Approx(3.0 * one.decay.bound));
}

// ============================================================
// Preset lookup
// ============================================================

TEST_CASE("preset lookup resolves names and rejects unknown ones") {
  CHECK(force_from_preset("rot_bump", 1.0, 0.0, 0.5).kind ==
        ForceSpec::Kind::pointwise);
  CHECK(force_from_preset("divform_gauss", 1.0, 0.5, 0.0).kind ==
        ForceSpec::Kind::divergence_form);
  CHECK(force_from_preset("critical_tangential", 1.0, 0.0, 0.0).name ==
        "critical_tangential");
  CHECK_THROWS_AS(force_from_preset("vortex_sheet", 1.0, 0.0, 0.0),
                  std::invalid_argument);
}
