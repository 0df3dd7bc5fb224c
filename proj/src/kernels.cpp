/// @file kernels.cpp
/// Closed-form kernel evaluations with small-s series branches.

#include <rotflow/kernels.hpp>

#include <numbers>
#include <stdexcept>

namespace rotflow {

namespace {

constexpr double kPi = std::numbers::pi;

void require_domain(Vec2 x, double t) {
  if (!(t > 0.0) || !std::isfinite(t) || !std::isfinite(x.e1) || !std::isfinite(x.e2)) {
    throw std::domain_error("kernel evaluation requires finite x and t > 0");
  }
}

/// phi(s) = (1 - exp(-s)) / s, extended by phi(0) = 1.
double phi(double s, double sw) {
  if (s < sw) return 1.0 - s / 2.0 + s * s / 6.0 - s * s * s / 24.0 + s * s * s * s / 120.0;
  return -std::expm1(-s) / s;
}

/// phi(s) - exp(-s) = s/2 - s^2/3 + s^3/8 - s^4/30 + ...; the two terms
/// cancel to order s so the direct form loses accuracy below the switch.
double phi_minus_exp(double s, double sw) {
  if (s < sw) {
    return s * (0.5 + s * (-1.0 / 3.0 + s * (0.125 + s * (-1.0 / 30.0 + s / 144.0))));
  }
  return phi(s, sw) - std::exp(-s);
}

/// c1(s) = (1 - (1 + s) exp(-s)) / s^2 = 1/2 - s/3 + s^2/8 - ...
double c1_coef(double s, double sw) {
  if (s < sw) {
    return 0.5 + s * (-1.0 / 3.0 + s * (0.125 + s * (-1.0 / 30.0 + s / 144.0)));
  }
  return (1.0 - (1.0 + s) * std::exp(-s)) / (s * s);
}

/// c2(s) = (2 - exp(-s)(s^2 + 2s + 2)) / s^3 = 1/3 - s/4 + s^2/10 - ...
double c2_coef(double s, double sw) {
  if (s < sw) {
    return 1.0 / 3.0 + s * (-0.25 + s * (0.1 + s * (-1.0 / 36.0 + s / 168.0)));
  }
  return (2.0 - std::exp(-s) * (s * s + 2.0 * s + 2.0)) / (s * s * s);
}

}  // namespace

double gauss(Vec2 x, double t, const KernelEvalConfig&) {
  require_domain(x, t);
  return std::exp(-norm_sq(x) / (4.0 * t)) / (4.0 * kPi * t);
}

Mat2 kernel_H(Vec2 x, double t, const KernelEvalConfig& cfg) {
  require_domain(x, t);
  const double r2 = norm_sq(x);
  if (r2 == 0.0) return -1.0 / (8.0 * kPi * t) * identity();
  const double s = r2 / (4.0 * t);
  const double sw = cfg.series_switch_radius;
  const Mat2 projector = (1.0 / r2) * outer(x, x);
  return (phi_minus_exp(s, sw) / (4.0 * kPi * t)) * projector -
         (phi(s, sw) / (8.0 * kPi * t)) * identity();
}

Mat2 kernel_K(Vec2 x, double t, const KernelEvalConfig& cfg) {
  return gauss(x, t, cfg) * identity() + kernel_H(x, t, cfg);
}

Mat2 kernel_B(Vec2 x, double t, const KernelEvalConfig& cfg) {
  require_domain(x, t);
  const double r2 = norm_sq(x);
  if (r2 == 0.0) return {};
  const double s = r2 / (4.0 * t);
  const double pref = -phi_minus_exp(s, cfg.series_switch_radius) / (8.0 * kPi * t);
  const Mat2 reflector = identity() - (2.0 / r2) * outer(x, x);
  return pref * reflector;
}

Vec2 grad_gauss(Vec2 x, double t, const KernelEvalConfig& cfg) {
  return (-gauss(x, t, cfg) / (2.0 * t)) * x;
}

Grad2 grad_K(Vec2 x, double t, const KernelEvalConfig& cfg) {
  require_domain(x, t);
  const double r2 = norm_sq(x);
  if (r2 == 0.0) return {};
  const double s = r2 / (4.0 * t);
  const double sw = cfg.series_switch_radius;
  const double g = gauss(x, t, cfg);
  const double a1 = c1_coef(s, sw) / (16.0 * kPi * t * t);
  const double a2 = c2_coef(s, sw) / (32.0 * kPi * t * t * t);
  const double gg = -g / (2.0 * t);

  Grad2 out{};
  const double xc[2] = {x.e1, x.e2};
  for (int k = 0; k < 2; ++k) {
    Mat2 dk{};
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        double sym = 0.0;
        if (i == j) sym += xc[k];
        if (i == k) sym += xc[j];
        if (j == k) sym += xc[i];
        double v = a1 * sym - a2 * xc[i] * xc[j] * xc[k];
        if (i == j) v += gg * xc[k];
        set_component(dk, i * 2 + j, v);
      }
    }
    if (k == 0) out.d1 = dk; else out.d2 = dk;
  }
  return out;
}

Grad2 grad_K_fd(Vec2 x, double t, const KernelEvalConfig& cfg) {
  const double h = cfg.gradient_fd_step;
  if (!(h > 0.0)) throw std::domain_error("gradient_fd_step must be positive");
  const Mat2 dx = (1.0 / (2.0 * h)) * (kernel_K({x.e1 + h, x.e2}, t, cfg) -
                                       kernel_K({x.e1 - h, x.e2}, t, cfg));
  const Mat2 dy = (1.0 / (2.0 * h)) * (kernel_K({x.e1, x.e2 + h}, t, cfg) -
                                       kernel_K({x.e1, x.e2 - h}, t, cfg));
  return {dx, dy};
}

Mat2 leading_kernel(Vec2 x, Vec2 y) {
  const double r2 = norm_sq(x);
  if (r2 == 0.0) throw std::domain_error("leading kernel is singular at x = 0");
  return (1.0 / (4.0 * kPi * r2)) * outer(perp(x), perp(y));
}

Grad2 grad_leading_kernel(Vec2 x, Vec2) {
  const double r2 = norm_sq(x);
  if (r2 == 0.0) throw std::domain_error("leading kernel is singular at x = 0");
  const double c = 1.0 / (4.0 * kPi * r2);
  return {c * outer(perp(x), {0.0, 1.0}), c * outer(perp(x), {-1.0, 0.0})};
}

}  // namespace rotflow
