/// @file nonlinear.hpp
/// Picard solver for the forced steady rotating Navier-Stokes system in the
/// plane. The solution is sought as u = alpha U + w with U the explicit
/// background vortex, alpha = (1/2) int perp(y) . f(y) dy, and w a small
/// remainder on a polar grid. Each sweep applies the rotating-frame Stokes
/// solution operator to
///     f + alpha Lap U  -  div [ alpha (w ox U + U ox w) + w ox w ],
/// where the absolute part is iteration independent (its angular moment
/// cancels by the choice of alpha, so w decays faster than 1/|x|) and the
/// quadratic part is handed to the divergence-form path with decay 2 + r.
///
/// The engine precomputes per-ring kernel tables once: grid nodes on one
/// ring are rotations of a single reference point, and the fundamental
/// solution obeys Gamma_a(R x, R y) = R Gamma_a(x, y) R^T, so one set of
/// kernel evaluations serves every angle. Sweeps then reduce to fixed
/// linear maps of tensor samples; because the quadrature layout never
/// depends on the iterate, quadrature error cancels in successive
/// differences and the diff norms contract cleanly.

#pragma once

#include <rotflow/field.hpp>
#include <rotflow/forces.hpp>
#include <rotflow/quadrature.hpp>

#include <memory>
#include <stdexcept>
#include <vector>

namespace rotflow {

/// The vortex part alpha U of a solution.
struct VortexProfile {
  double alpha = 0.0;
  Vec2 velocity(Vec2 x) const;
  Mat2 velocity_gradient(Vec2 x) const;
  Vec2 laplacian(Vec2 x) const;
};

struct PicardOptions {
  /// Invariant-ball radius for the weighted norm of w; iterates escaping it
  /// abort with NonContractionError.
  double delta = 0.1;
  /// Sweep-difference stopping threshold in the weighted norm.
  double stop_tol = 1e-6;
  int max_iter = 30;
  /// Weighted per-node quadrature target: ring rho aims at
  /// node_tol / (1 + rho)^(1+r) absolute error.
  double node_tol = 1e-4;
  /// Template for the kernel-evaluation layer: abs_tol is reassigned per
  /// table region from node_tol; rel_tol, max_evals, max_periods and the
  /// truncation cap are taken as given. The period cap is deliberately
  /// huge: far kernel evaluations may legitimately need many periods and a
  /// starved budget would silently inflate every table entry.
  QuadratureBudget budget{1e-8, 2e-4, 400000, 1 << 20, 256.0};
  int threads = 0;
};

struct PicardReport {
  double a = 0.0;
  double r = 0.5;
  double alpha = 0.0;
  /// lambda(f) = sup (1+|y|)^(3+r) |f| + int |perp(y) . f| dy.
  double lambda_f = 0.0;
  /// Weighted norms ||w_n|| after each sweep, starting at w_0.
  std::vector<double> norm_history;
  /// Weighted diffs d_n = ||w_n - w_{n-1}||, n = 1, 2, ...
  std::vector<double> diff_history;
  /// Largest observed ratio d_n / d_{n-1} for n >= 2; 0 when fewer than two
  /// diffs were taken.
  double tau_obs = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Weighted bound for the discrete solve: worst per-node quadrature error
  /// plus the iteration residual.
  double final_error = 0.0;
  /// True when a truncation radius hit its cap; the tail bound is part of
  /// final_error.
  bool truncated = false;
  /// Frozen weighted envelope bound for the iterates (kernel tables are laid
  /// out for |w| <= envelope_bound (1+rho)^-(1+r)).
  double envelope_bound = 0.0;
  bool within_ball = false;
};

/// Thrown when the Picard sweeps fail to contract (three consecutive
/// growing diffs, or an iterate escaping the ball / frozen envelope).
class NonContractionError : public std::runtime_error {
 public:
  NonContractionError(const std::string& what, PicardReport report);
  const PicardReport& report() const { return report_; }

 private:
  PicardReport report_;
};

struct NonlinearSolution {
  double a = 0.0;
  double r = 0.5;
  double alpha = 0.0;
  IterateField w;
  PicardReport report;

  /// u(x) = alpha U(x) + w(x).
  Vec2 velocity(Vec2 x) const;
  /// Jacobian d u_i / d x_j.
  Mat2 velocity_gradient(Vec2 x) const;
};

/// alpha = (1/2) int perp(y) . f(y) dy. Throws std::domain_error when the
/// force declares its angular moment non-integrable.
IntegralResult<double> compute_alpha(const ForceSpec& force,
                                     const QuadratureBudget& budget = {});

/// Per-ring kernel tables plus the cached absolute part; reusable across
/// sweeps and across different initial iterates, so independent runs see
/// the same discrete fixed point.
class PicardEngine {
 public:
  PicardEngine(const ForceSpec& force, double a, double r,
               const FieldGrid& grid, const PicardOptions& options = {});
  ~PicardEngine();
  PicardEngine(PicardEngine&&) noexcept;
  PicardEngine& operator=(PicardEngine&&) noexcept;

  double alpha() const;
  double lambda() const;
  /// L[f + alpha Lap U] on the grid (cached after the first call).
  const IterateField& absolute_field();
  /// One Picard sweep applied to w.
  IterateField map(const IterateField& w);
  /// Worst weighted per-node quadrature error of the last map()/solve().
  double map_error() const;
  bool truncated() const;
  /// Frozen weighted envelope bound (0 before tensor tables exist).
  double envelope_bound() const;

  /// Run sweeps from w = 0 until the diff norm drops below stop_tol.
  NonlinearSolution solve();
  /// Same, from a caller-provided initial iterate on the engine grid.
  NonlinearSolution solve_from(const IterateField& init);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot Picard sweep: w -> L[f + alpha Lap U - div(quadratic tensor)].
/// Builds fresh kernel tables; use PicardEngine for repeated maps.
IterateField picard_map(const ForceSpec& force, double a, double r,
                        const IterateField& w,
                        const PicardOptions& options = {});

/// Full solve on the standard grid (or a custom one) from w = 0.
NonlinearSolution solve_nonlinear(const ForceSpec& force, double a, double r,
                                  const PicardOptions& options = {});
NonlinearSolution solve_nonlinear(const ForceSpec& force, double a, double r,
                                  const FieldGrid& grid,
                                  const PicardOptions& options = {});

/// Stokes-solution field of a linear case on a polar grid: the ring kernel
/// tables applied to the force alone (no vortex part, no quadratic term).
/// Pointwise forces go through the pointforce tables, divergence-form
/// forces through the gradient tables. The worst weighted per-node
/// quadrature error is returned through field_error when non-null.
IterateField solve_field_linear(const ForceSpec& force, double a, double r,
                                const FieldGrid& grid,
                                const PicardOptions& options = {},
                                double* field_error = nullptr);

/// Pressure of the nonlinear solution,
///   p(x) = (1/2 pi) int (x - y) . (f - (u . grad) u)(y) / |x - y|^2 dy,
/// with the source envelope (exponent 3) sampled from the solution and
/// carried with a safety margin.
IntegralResult<double> pressure_nonlinear(const ForceSpec& force,
                                          const NonlinearSolution& solution,
                                          Vec2 x,
                                          const QuadratureBudget& budget = {});

}  // namespace rotflow
