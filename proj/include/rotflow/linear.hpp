#pragma once
/// @file linear.hpp
/// Probe-wise solutions of the steady rotating-frame Stokes system in the
/// plane. Velocities come from the fundamental-solution representation
/// u(x) = int Gamma_a(x, y) f(y) dy for pointwise forces and
/// u(x) = -int grad_y Gamma_a(x, y) F(y) dy for divergence-form forces,
/// evaluated by nested quadrature over the three regions |y| < |x|/2,
/// |x|/2 <= |y| <= 2|x|, and |y| > 2|x|. The disk region switches to the
/// far-field leading kernel whenever the kernel-asymptotics error bound
/// already beats the requested tolerance; the annulus is integrated in
/// probe-centered polar coordinates so the kernel singularity at y = x is
/// resolved by the Jacobian. Every probe keeps the exact decomposition
/// velocity = moment * perp(x) / (4 pi |x|^2) + remainder together with an
/// honest error estimate.

#include <rotflow/forces.hpp>
#include <rotflow/fundamental.hpp>

#include <functional>
#include <vector>

namespace rotflow {

/// Solution record at one probe point. The identity
/// velocity == leading + remainder holds exactly by construction.
struct ProbeSolution {
  Vec2 x{};
  Vec2 velocity{};
  double pressure = 0.0;
  /// Truncated angular moment over |y| < |x|/2: int perp(y) . f for
  /// pointwise forces, int (F12 - F21) for divergence-form forces.
  double moment = 0.0;
  Vec2 leading{};
  Vec2 remainder{};
  double error_estimate = 0.0;
  double pressure_error = 0.0;
  long evaluations = 0;
  bool converged = false;
  bool truncated = false;
  bool pressure_converged = false;
  bool pressure_truncated = false;
  /// True when the disk region used the leading-kernel shortcut instead of
  /// full nested quadrature.
  bool used_farfield_path = false;
};

struct LinearSolution {
  double a = 0.0;
  std::vector<ProbeSolution> probes;
};

/// Solve at a single probe for a pointwise force. Throws std::domain_error
/// for a = 0 and std::invalid_argument on a force-kind mismatch.
ProbeSolution solve_probe_pointforce(const ForceSpec& force, double a, Vec2 x,
                                     const QuadratureBudget& budget = {});

/// Solve at a single probe for a divergence-form force.
ProbeSolution solve_probe_divform(const ForceSpec& force, double a, Vec2 x,
                                  const QuadratureBudget& budget = {});

/// Map solve_probe_pointforce across probes with a worker pool. Probes are
/// independent; threads = 0 picks the hardware concurrency.
LinearSolution solve_linear_pointforce(const ForceSpec& force, double a,
                                       const std::vector<Vec2>& probes,
                                       const QuadratureBudget& budget = {},
                                       int threads = 0);

/// Map solve_probe_divform across probes with a worker pool.
LinearSolution solve_linear_divform(const ForceSpec& force, double a,
                                    const std::vector<Vec2>& probes,
                                    const QuadratureBudget& budget = {},
                                    int threads = 0);

/// Pressure p(x) = (1/2 pi) int (x - y) . f(y) / |x - y|^2 dy for the
/// effective pointwise density of the force (f itself, or div F when the
/// divergence-form data carries its analytic divergence). Throws
/// std::invalid_argument when no pointwise density is available.
IntegralResult<double> pressure_pointforce(const ForceSpec& force, Vec2 x,
                                           const QuadratureBudget& budget = {});

/// Divergence-free test field phi = rotated gradient of the Gaussian window
/// amplitude * exp(-|x - center|^2 / (2 sigma^2)), with the analytic action
/// of T_{-a} phi = -Delta phi + a (perp(x) . grad phi - perp(phi)).
struct TestFunction {
  Vec2 center{};
  double sigma = 1.0;
  double amplitude = 1.0;

  Vec2 value(Vec2 x) const;
  Vec2 t_minus_a(Vec2 x, double a) const;
  /// Radius around the center beyond which the window is numerically zero.
  double support_radius() const { return 9.0 * sigma; }
};

/// Three windows at distinct centers and scales.
std::vector<TestFunction> default_test_functions();

struct WeakFormResult {
  /// max over test functions of |int u . T_{-a} phi - int f . phi|
  /// (the built-in family is divergence free, so the pressure term drops).
  double max_residual = 0.0;
  std::vector<double> residuals;
  /// Combined acceptance tolerance 10 (quad_tol + point_tol max int |T phi|).
  double tolerance = 0.0;
  /// Largest internal quadrature refinement difference, for honesty checks.
  double quadrature_error = 0.0;
  long evaluations = 0;
};

/// Weak-form residual of a velocity field against a pointwise force
/// density. The pressure callable is part of the weak form but is never
/// sampled for divergence-free test functions; pass {} when unused.
/// point_tol is the tolerance the velocity callable was evaluated at and
/// enters the combined tolerance. u and f must be thread safe.
WeakFormResult weak_form_residual(const std::function<Vec2(Vec2)>& u,
                                  const std::function<double(Vec2)>& p,
                                  const std::function<Vec2(Vec2)>& f, double a,
                                  const std::vector<TestFunction>& testfns,
                                  const QuadratureBudget& budget = {},
                                  double point_tol = 0.0, int threads = 0);

}  // namespace rotflow
