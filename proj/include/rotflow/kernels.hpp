#pragma once
/// @file kernels.hpp
/// Pointwise heat-flow building blocks: the plane heat kernel, the
/// incompressible correction H, the combined Oseen-type kernel K = G*I + H,
/// the reflector split remainder B, their analytic gradients, and the
/// explicit far-field leading kernel. All formulas are closed-form in the
/// similarity variable s = |x|^2 / (4 t); entries with removable small-s
/// cancellation switch to truncated series below a configurable threshold.

#include <rotflow/geometry.hpp>

namespace rotflow {

struct KernelEvalConfig {
  /// Series branch activates when s = |x|^2/(4 t) falls below this value.
  double series_switch_radius = 1e-3;
  /// Step used by the finite-difference validation helpers only.
  double gradient_fd_step = 1e-4;
};

inline const KernelEvalConfig kDefaultKernelConfig{};

/// Scalar heat kernel G(x, t) = exp(-|x|^2 / 4t) / (4 pi t). Throws
/// std::domain_error for t <= 0 or non-finite input.
double gauss(Vec2 x, double t, const KernelEvalConfig& cfg = kDefaultKernelConfig);

/// Incompressibility correction: H(x, t) = (phi(s) - exp(-s))/(4 pi t) P
/// - phi(s)/(8 pi t) I where P is the projector on the x direction and
/// phi(s) = (1 - exp(-s))/s. Finite at x = 0 with value -I / (8 pi t).
Mat2 kernel_H(Vec2 x, double t, const KernelEvalConfig& cfg = kDefaultKernelConfig);

/// Full tensor kernel K(x, t) = G(x, t) I + H(x, t).
Mat2 kernel_K(Vec2 x, double t, const KernelEvalConfig& cfg = kDefaultKernelConfig);

/// Split remainder B(x, t) = (exp(-s) - phi(s)) / (8 pi t) (I - 2 P), so
/// that K = exp(-s)/(8 pi t) I + B holds identically. B(0, t) = 0.
Mat2 kernel_B(Vec2 x, double t, const KernelEvalConfig& cfg = kDefaultKernelConfig);

/// Gradient of the scalar heat kernel: -x G / (2 t).
Vec2 grad_gauss(Vec2 x, double t, const KernelEvalConfig& cfg = kDefaultKernelConfig);

/// Analytic gradient of K with respect to x. Component [k](i, j) holds
/// d K_ij / d x_k; the H part is fully symmetric under permutations of
/// (i, j, k). Vanishes at x = 0.
Grad2 grad_K(Vec2 x, double t, const KernelEvalConfig& cfg = kDefaultKernelConfig);

/// Central finite-difference gradient of K, for validation against grad_K.
Grad2 grad_K_fd(Vec2 x, double t, const KernelEvalConfig& cfg = kDefaultKernelConfig);

/// Far-field leading kernel L(x, y) = perp(x) (x) perp(y) / (4 pi |x|^2).
/// Throws std::domain_error at x = 0.
Mat2 leading_kernel(Vec2 x, Vec2 y);

/// Gradient of L with respect to y; constant in y.
Grad2 grad_leading_kernel(Vec2 x, Vec2 y);

}  // namespace rotflow
