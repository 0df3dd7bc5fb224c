/// @file vortex.cpp

#include <rotflow/vortex.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rotflow {

namespace {

constexpr double kPi = std::numbers::pi;

/// q(u) = (1 - exp(-u/4)) / u for u = |x|^2, with q(0) = 1/4.
double q_profile(double u) {
  if (u < 1e-3) return 0.25 - u / 32.0 + u * u / 384.0 - u * u * u / 6144.0;
  return -std::expm1(-u / 4.0) / u;
}

/// q'(u); the direct form cancels to order u^2 near zero.
double q_profile_prime(double u) {
  if (u < 1e-2) return -1.0 / 32.0 + u / 192.0 - u * u / 2048.0;
  return (std::exp(-u / 4.0) * (1.0 + u / 4.0) - 1.0) / (u * u);
}

}  // namespace

Vec2 vortex_U(Vec2 x) {
  return (q_profile(norm_sq(x)) / (2.0 * kPi)) * perp(x);
}

Vec2 laplacian_U(Vec2 x) {
  const double g = std::exp(-norm_sq(x) / 4.0) / (4.0 * kPi);
  return (-g / 2.0) * perp(x);
}

Mat2 grad_U(Vec2 x) {
  const double u = norm_sq(x);
  const double q = q_profile(u), qp = q_profile_prime(u);
  const Mat2 j{0.0, -1.0, 1.0, 0.0};
  return (q / (2.0 * kPi)) * j + (qp / kPi) * outer(perp(x), x);
}

double curl_U(Vec2 x) {
  return std::exp(-norm_sq(x) / 4.0) / (4.0 * kPi);
}

IntegralResult<double> vortex_strength(const std::function<Vec2(Vec2)>& f,
                                       const DecayClass& f_decay,
                                       const QuadratureBudget& budget) {
  if (!(f_decay.exponent > 3.0)) {
    throw std::invalid_argument(
        "vortex strength requires an absolutely integrable angular moment "
        "(decay exponent > 3)");
  }
  DecayClass moment = f_decay;
  moment.exponent = f_decay.exponent - 1.0;
  auto integrand = [&f](Vec2 y) { return dot(perp(y), f(y)); };
  auto res = integrate_plane(integrand, moment, budget);
  res.value *= 0.5;
  res.error_estimate *= 0.5;
  return res;
}

}  // namespace rotflow
