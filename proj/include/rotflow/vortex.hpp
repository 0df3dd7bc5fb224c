#pragma once
/// @file vortex.hpp
/// The explicit self-similar background vortex
///   U(x) = (1 / 2 pi) perp(x) / |x|^2 * (1 - exp(-|x|^2 / 4)),
/// its Laplacian, gradient and curl, plus the strength coefficient
/// alpha(f) = (1/2) int perp(y) . f(y) dy used to peel the vortex part off
/// a forced solution.

#include <rotflow/geometry.hpp>
#include <rotflow/quadrature.hpp>

#include <functional>

namespace rotflow {

/// Background vortex velocity; smooth at the origin via a series branch.
Vec2 vortex_U(Vec2 x);

/// Laplacian of the vortex: -(g(x) / 2) perp(x) with g the unit-mass
/// Gaussian exp(-|x|^2/4) / (4 pi).
Vec2 laplacian_U(Vec2 x);

/// Gradient matrix dU_i/dx_j.
Mat2 grad_U(Vec2 x);

/// Scalar curl of U, equal to the unit-mass Gaussian.
double curl_U(Vec2 x);

/// alpha = (1/2) int perp(y) . f(y) dy. The caller supplies the decay
/// envelope of f itself; the integrand envelope is derived from it.
/// Requires exponent > 3 so the angular moment converges absolutely.
IntegralResult<double> vortex_strength(const std::function<Vec2(Vec2)>& f,
                                       const DecayClass& f_decay,
                                       const QuadratureBudget& budget = {});

}  // namespace rotflow
