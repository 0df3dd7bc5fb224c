/// @file fundamental.cpp

#include <rotflow/fundamental.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rotflow {

namespace {

void check_arguments(double a, Vec2 x, Vec2 y) {
  if (a == 0.0) {
    throw std::domain_error(
        "a = 0: the time integral diverges logarithmically (planar Stokes "
        "paradox); a nonzero rotation speed is required");
  }
  if (x.e1 == y.e1 && x.e2 == y.e2) {
    throw std::domain_error("fundamental solution evaluated on the diagonal x = y");
  }
}

double head_length(double a, Vec2 x, Vec2 y) {
  return (1.0 + norm(x - y)) / std::sqrt(std::abs(a));
}

// O(at) x - y evaluated as (x - y) + (O(at) - I) x, with cos(at) - 1 in its
// stable -2 sin^2(at/2) form. The direct difference cancels catastrophically
// when |x - y| << |x|; the round-off, amplified by the kernel's 1/|z|
// sensitivity, shows up as step noise that defeats adaptive refinement.
Vec2 rotated_offset(double at, Vec2 x, Vec2 y) {
  const double s = std::sin(at);
  const double half = std::sin(0.5 * at);
  const double c1 = -2.0 * half * half;
  return {(x.e1 - y.e1) + c1 * x.e1 - s * x.e2,
          (x.e2 - y.e2) + s * x.e1 + c1 * x.e2};
}

// The heat kernel at spatial offset d concentrates its time mass in a hump
// around t = d^2 / 4. Ahead of it the period sums are exponentially small,
// so the stop rules must be held off until the hump has been crossed.
int hump_gate_periods(double a, Vec2 x, Vec2 y, double head) {
  const double d2 = norm_sq(x - y);
  const double gate = 0.35 * d2 - head;
  if (gate <= 0.0) return 0;
  return static_cast<int>(std::ceil(gate * std::abs(a) /
                                    (2.0 * std::numbers::pi)));
}

}  // namespace

KernelIntegral fundamental_solution(double a, Vec2 x, Vec2 y, double tol,
                                    const QuadratureBudget& budget) {
  check_arguments(a, x, y);
  QuadratureBudget b = budget;
  if (tol > 0.0) b.abs_tol = tol;
  auto integrand = [a, x, y](double t) {
    const Mat2 rot = rotation(a * t);
    return transpose(rot) * kernel_K(rotated_offset(a * t, x, y), t);
  };
  const double head = head_length(a, x, y);
  auto res = integrate_time_oscillatory(integrand, a, head, b,
                                        hump_gate_periods(a, x, y, head));
  return {res.value, res.error_estimate, res.evaluations, res.converged};
}

KernelGradIntegral fundamental_solution_gradient(double a, Vec2 x, Vec2 y,
                                                 double tol,
                                                 const QuadratureBudget& budget) {
  check_arguments(a, x, y);
  QuadratureBudget b = budget;
  if (tol > 0.0) b.abs_tol = tol;
  auto integrand = [a, x, y](double t) {
    const Mat2 rot_t = transpose(rotation(a * t));
    const Grad2 g = grad_K(rotated_offset(a * t, x, y), t);
    // d/dy_k of K(O x - y, t) is -(d_k K) evaluated at the rotated offset.
    return Grad2{-1.0 * (rot_t * g.d1), -1.0 * (rot_t * g.d2)};
  };
  const double head = head_length(a, x, y);
  auto res = integrate_time_oscillatory(integrand, a, head, b,
                                        hump_gate_periods(a, x, y, head));
  return {res.value, res.error_estimate, res.evaluations, res.converged};
}

}  // namespace rotflow
