/// @file forces.cpp

#include <rotflow/forces.hpp>

#include <cmath>
#include <stdexcept>

namespace rotflow {

namespace {

/// Tight numeric bound for sup over rho of profile(rho) * (1 + rho)^s.
/// Scanned on a dense uniform grid near the origin, where the presets peak,
/// and a geometric grid out to rho_max, with a small safety factor.
template <class Profile>
double scan_envelope_bound(Profile&& profile, double s, double rho_max) {
  double best = 0.0;
  const double near_end = std::min(8.0, rho_max);
  const int n_near = 8192;
  for (int i = 0; i <= n_near; ++i) {
    const double rho = near_end * i / n_near;
    best = std::max(best, std::abs(profile(rho)) * std::pow(1.0 + rho, s));
  }
  if (rho_max > near_end) {
    const int n_far = 2048;
    const double ratio = std::pow(rho_max / near_end, 1.0 / n_far);
    double rho = near_end;
    for (int i = 0; i < n_far; ++i) {
      rho *= ratio;
      best = std::max(best, std::abs(profile(rho)) * std::pow(1.0 + rho, s));
    }
  }
  return best * (1.0 + 1e-4);
}

double bump_profile(double rho) {
  if (rho >= 1.0) return 0.0;
  const double t = 1.0 - rho * rho;
  return t * t * t;
}

}  // namespace

ForceSpec make_rot_bump(double strength, double r) {
  ForceSpec spec;
  spec.kind = ForceSpec::Kind::pointwise;
  spec.name = "rot_bump";
  spec.strength = strength;
  spec.f = [strength](Vec2 y) { return (strength * bump_profile(norm(y))) * perp(y); };
  spec.decay.exponent = 3.0 + r;
  spec.decay.bound = scan_envelope_bound(
      [strength](double rho) { return strength * bump_profile(rho) * rho; },
      3.0 + r, 1.0);
  spec.decay.support_radius = 1.0;
  spec.decay.support_eps = 0.0;
  spec.angular_moment_integrable = true;
  return spec;
}

ForceSpec make_radial_bump(double strength, double r) {
  ForceSpec spec;
  spec.kind = ForceSpec::Kind::pointwise;
  spec.name = "radial_bump";
  spec.strength = strength;
  spec.f = [strength](Vec2 y) { return (strength * bump_profile(norm(y))) * y; };
  spec.decay.exponent = 3.0 + r;
  spec.decay.bound = scan_envelope_bound(
      [strength](double rho) { return strength * bump_profile(rho) * rho; },
      3.0 + r, 1.0);
  spec.decay.support_radius = 1.0;
  spec.decay.support_eps = 0.0;
  spec.angular_moment_integrable = true;
  return spec;
}

ForceSpec make_critical_tangential(double strength) {
  ForceSpec spec;
  spec.kind = ForceSpec::Kind::pointwise;
  spec.name = "critical_tangential";
  spec.strength = strength;
  spec.f = [strength](Vec2 y) {
    const double d = 1.0 + norm_sq(y);
    return (strength / (d * d)) * perp(y);
  };
  spec.decay.exponent = 3.0;
  spec.decay.bound = scan_envelope_bound(
      [strength](double rho) {
        const double d = 1.0 + rho * rho;
        return strength * rho / (d * d);
      },
      3.0, 4096.0);
  spec.angular_moment_integrable = false;
  return spec;
}

ForceSpec make_divform_gauss(double strength, double beta, double r) {
  ForceSpec spec;
  spec.kind = ForceSpec::Kind::divergence_form;
  spec.name = "divform_gauss";
  spec.strength = strength;
  const Mat2 sym{1.0, 0.5, 0.5, -1.0};
  const Mat2 asym{0.0, 1.0, -1.0, 0.0};
  const Mat2 c = sym + beta * asym;
  spec.tensor = [strength, c](Vec2 y) {
    return (strength * std::exp(-norm_sq(y) / 2.0)) * c;
  };
  spec.divergence = [strength, c](Vec2 y) {
    return (-strength * std::exp(-norm_sq(y) / 2.0)) * (c * y);
  };
  const double cmax = abs_max(c);
  const double s = 2.0 + r;
  spec.decay.exponent = s;
  spec.decay.bound = scan_envelope_bound(
      [strength, cmax](double rho) {
        return strength * cmax * std::exp(-rho * rho / 2.0);
      },
      s, 16.0);
  spec.decay.support_radius = 13.0;
  spec.decay.support_eps =
      strength * cmax * std::exp(-13.0 * 13.0 / 2.0) * std::pow(14.0, s) /
      spec.decay.bound;
  const double div_s = 3.0 + r;
  spec.divergence_decay.exponent = div_s;
  spec.divergence_decay.bound = scan_envelope_bound(
      [strength, cmax](double rho) {
        return 2.0 * strength * cmax * rho * std::exp(-rho * rho / 2.0);
      },
      div_s, 16.0);
  spec.divergence_decay.support_radius = 13.0;
  spec.divergence_decay.support_eps =
      2.0 * strength * cmax * 13.0 * std::exp(-13.0 * 13.0 / 2.0) *
      std::pow(14.0, div_s) / spec.divergence_decay.bound;
  spec.angular_moment_integrable = false;
  return spec;
}

ForceSpec force_from_preset(const std::string& name, double strength,
                            double beta, double r) {
  if (name == "rot_bump") return make_rot_bump(strength, r);
  if (name == "radial_bump") return make_radial_bump(strength, r);
  if (name == "critical_tangential") return make_critical_tangential(strength);
  if (name == "divform_gauss") return make_divform_gauss(strength, beta, r);
  throw std::invalid_argument(
      "unknown force preset '" + name +
      "' (expected rot_bump, radial_bump, critical_tangential or divform_gauss)");
}

}  // namespace rotflow
