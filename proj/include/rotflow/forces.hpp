#pragma once
/// @file forces.hpp
/// Forcing data handed to the solvers: either a pointwise vector density f
/// or a divergence-form tensor density F, together with its declared decay
/// envelope and structural flags. Built-in presets cover the cases the
/// verification battery exercises.

#include <rotflow/quadrature.hpp>

#include <functional>
#include <string>

namespace rotflow {

struct ForceSpec {
  enum class Kind { pointwise, divergence_form };
  Kind kind = Kind::pointwise;
  std::string name;
  double strength = 1.0;

  /// Pointwise density (kind == pointwise).
  std::function<Vec2(Vec2)> f;
  /// Tensor density (kind == divergence_form).
  std::function<Mat2(Vec2)> tensor;
  /// Analytic divergence of the tensor, when available; enables the
  /// pressure path and the pointwise crosscheck for divergence-form data.
  std::function<Vec2(Vec2)> divergence;

  /// Envelope of f (pointwise) or of the tensor entries (divergence form).
  DecayClass decay;
  /// Envelope of the analytic divergence; meaningful only when divergence
  /// is set, used by the divergence-form pressure path.
  DecayClass divergence_decay;
  /// True when perp(y) . f decays fast enough to integrate absolutely.
  bool angular_moment_integrable = false;
};

/// Rotational bump: f(y) = strength * (1 - |y|^2)^3 perp(y) inside the unit
/// disk, zero outside. Compact, divergence free, integrable moment.
ForceSpec make_rot_bump(double strength, double r);

/// Radial bump: f(y) = strength * (1 - |y|^2)^3 y inside the unit disk.
/// A pure gradient, so the induced velocity vanishes and the pressure
/// captures all of it.
ForceSpec make_radial_bump(double strength, double r);

/// Critical tangential force: f(y) = strength * perp(y) (1 + |y|^2)^{-2}.
/// Borderline decay; the angular moment grows logarithmically and is not
/// absolutely integrable.
ForceSpec make_critical_tangential(double strength);

/// Divergence-form Gaussian tensor: F(y) = strength * exp(-|y|^2 / 2)
/// (S + beta A) with S a fixed traceless symmetric matrix and A the unit
/// antisymmetric matrix. Carries its analytic divergence.
ForceSpec make_divform_gauss(double strength, double beta, double r);

/// Preset lookup by name; throws std::invalid_argument for unknown names.
ForceSpec force_from_preset(const std::string& name, double strength,
                            double beta, double r);

}  // namespace rotflow
