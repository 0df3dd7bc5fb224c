#pragma once
/// @file fundamental.hpp
/// The rotating-frame fundamental solution
///   Gamma_a(x, y) = int_0^inf O(at)^T K(O(at) x - y, t) dt
/// and its gradient in the source point y, both evaluated through the
/// oscillatory time integrator: an adaptive head up to
/// (1 + |x - y|) / sqrt(|a|) followed by extrapolated full-period sums.

#include <rotflow/kernels.hpp>
#include <rotflow/quadrature.hpp>

namespace rotflow {

struct KernelIntegral {
  Mat2 value{};
  double error_estimate = 0.0;
  long evaluations = 0;
  bool converged = true;
};

struct KernelGradIntegral {
  Grad2 value{};
  double error_estimate = 0.0;
  long evaluations = 0;
  bool converged = true;
};

/// Evaluates Gamma_a(x, y). Pass tol > 0 to override the budget's absolute
/// tolerance. Throws std::domain_error for a = 0 (the time integral
/// diverges logarithmically, the planar Stokes paradox) and for x = y.
KernelIntegral fundamental_solution(double a, Vec2 x, Vec2 y, double tol = 0.0,
                                    const QuadratureBudget& budget = {});

/// Gradient of Gamma_a with respect to y; component [k] holds the partial
/// derivative of the matrix along y_k. Same error contract as
/// fundamental_solution.
KernelGradIntegral fundamental_solution_gradient(double a, Vec2 x, Vec2 y,
                                                 double tol = 0.0,
                                                 const QuadratureBudget& budget = {});

}  // namespace rotflow
