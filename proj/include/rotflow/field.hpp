/// @file field.hpp
/// Polar grid fields used by the nonlinear solver.
///
/// An IterateField stores velocity values on a fixed polar grid (log-spaced
/// radii times equispaced angles) together with a fitted far-field tail, and
/// evaluates anywhere in the plane:
///   - inside the grid annulus, bicubic Hermite interpolation in
///     (log rho, theta) with central-difference slopes (periodic in theta,
///     one-sided at the radial edges);
///   - beyond the outermost ring, a per-angle power tail
///     c(theta) rho^-(1+r) refitted from the outermost two rings, plus a
///     faster-decaying correction that makes the extension continuous with
///     the outermost ring;
///   - inside the innermost ring, a linear blend toward the angular mean of
///     the first ring, so the extension is single valued at the origin.
///
/// The interpolant is linear in the stored nodal values, which the Picard
/// solver relies on: successive sweeps reuse identical quadrature layouts,
/// so iterate differences contract without quadrature noise.

#pragma once

#include <rotflow/geometry.hpp>

#include <cstddef>
#include <vector>

namespace rotflow {

/// Polar grid: ascending radii (log-spaced in the standard grid) times
/// n_theta equispaced angles theta_j = 2 pi j / n_theta.
struct FieldGrid {
  std::vector<double> radii;
  int n_theta = 32;

  /// 24 log-spaced radii on [0.1, 64] with 32 angles.
  static FieldGrid standard();

  std::size_t rings() const { return radii.size(); }
  std::size_t nodes() const { return radii.size() * static_cast<std::size_t>(n_theta); }
  double theta(int j) const;
  /// Physical position of node (ring i, angle j).
  Vec2 node(int i, int j) const;
  bool same_layout(const FieldGrid& other) const;
};

/// Velocity iterate on a FieldGrid with weighted-norm decay exponent 1 + r.
struct IterateField {
  FieldGrid grid;
  /// Decay parameter r; the tail and the weighted norm use exponent 1 + r.
  double decay_r = 0.5;
  /// Nodal values, row major: values[i * n_theta + j].
  std::vector<Vec2> values;
  /// Per-angle tail coefficients, least-squares fitted from the outermost
  /// two rings so that w ~ tail_c(theta) rho^-(1+r). Set by finalize().
  std::vector<Vec2> tail_c;
  /// Angular mean of the innermost ring. Set by finalize().
  Vec2 inner_mean{};

  static IterateField zero(const FieldGrid& grid, double r);

  Vec2 at(int i, int j) const;
  Vec2& at(int i, int j);

  /// Recompute tail_c and inner_mean from the current values. Must be called
  /// after any bulk edit of values and before value()/gradient().
  void finalize();

  /// Velocity at x (grid interpolation, tail, or inner blend).
  Vec2 value(Vec2 x) const;

  /// Jacobian at x: entry (i, j) is d w_i / d x_j.
  Mat2 gradient(Vec2 x) const;

  /// Sampled sup of (1 + rho)^(1+r) |w| over the grid, an oversampled bulk
  /// lattice, the inner blend, and a geometric tail ladder with its
  /// rho -> infinity limit.
  double weighted_norm() const;
};

/// alpha * A + beta * B on a shared grid layout; the result is finalized.
IterateField field_axpby(double alpha, const IterateField& A, double beta,
                         const IterateField& B);

/// Weighted norm of A - B.
double weighted_diff_norm(const IterateField& A, const IterateField& B);

}  // namespace rotflow
