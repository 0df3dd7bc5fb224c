/// @file linear.cpp

#include <rotflow/linear.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>

namespace rotflow {

namespace {

// Calibrated constants for the kernel far-field asymptotics. The measured
// suprema over a dense (a, x, y) sample grid are 1.77 (kernel minus leading
// kernel against the m = 0 shape), 1.99 (gradient difference against the
// m = 1 shape), 0.14 for |grad Gamma| |x - y|, and 0.10 for
// |Gamma| |y| / (1 + |x|) on |y| >= 2|x|. Each constant keeps a factor of
// two or more in reserve; envelope spot checks and the far-field audits
// revalidate them at run time.
constexpr double kFarfieldC0 = 4.0;
constexpr double kFarfieldC1 = 4.0;
constexpr double kGradEnvelopeC = 0.3;
constexpr double kExteriorGammaC = 0.25;

// Matrix-vector and tensor-contraction amplification of componentwise
// bounds.
constexpr double kMatVecFactor = 2.0;
constexpr double kContractFactor = 4.0;

// Probes closer to the origin than this skip the three-region split and
// integrate the whole plane in probe-centered coordinates.
constexpr double kSplitMinRadius = 0.5;

bool compactly_supported(const DecayClass& d) {
  return std::isfinite(d.support_radius) && d.support_eps == 0.0;
}

// int_0^R rho (1 + rho)^{-s} drho, robust near s = 2 and s = 1.
double radial_mass(double s, double R) {
  auto antiderivative = [s](double u) {
    double high = (std::abs(2.0 - s) < 1e-9) ? std::log(u)
                                             : std::pow(u, 2.0 - s) / (2.0 - s);
    double low = (std::abs(1.0 - s) < 1e-9) ? std::log(u)
                                            : std::pow(u, 1.0 - s) / (1.0 - s);
    return high - low;
  };
  return antiderivative(1.0 + R) - antiderivative(1.0);
}

// Upper bound for int |density| over the plane from the declared envelope.
double envelope_mass_bound(const DecayClass& d) {
  const double cutoff =
      std::isfinite(d.support_radius) ? d.support_radius : 1e6;
  double mass = radial_mass(d.exponent, cutoff);
  if (std::isfinite(d.support_radius) && d.support_eps > 0.0) {
    mass += d.support_eps *
            (radial_mass(d.exponent, 1e9) - radial_mass(d.exponent, cutoff));
  }
  return 2.0 * std::numbers::pi * d.bound * mass;
}

void run_parallel(int jobs, int threads, const std::function<void(int)>& work) {
  int n = threads > 0 ? threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(1, std::min(n, jobs));
  if (n == 1) {
    for (int i = 0; i < jobs; ++i) work(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    pool.emplace_back([t, n, jobs, &work] {
      for (int i = t; i < jobs; i += n) work(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

struct RegionPiece {
  Vec2 value{};
  double error = 0.0;
  long evaluations = 0;
  bool converged = true;
  bool truncated = false;
};

void fold(RegionPiece& total, const RegionPiece& piece) {
  total.value += piece.value;
  total.error += piece.error;
  total.evaluations += piece.evaluations;
  total.converged = total.converged && piece.converged;
  total.truncated = total.truncated || piece.truncated;
}

// Probe-centered polar integration of a vector field over the annulus
// r1 <= |y| <= r2 (origin-centered bounds) or over the probe-centered disk
// |y - x| <= probe_radius when probe_radius > 0. The Jacobian rho absorbs
// the kernel singularity at y = x. The angular grid is graded toward the
// two tangency directions where the inner exclusion disk appears, since the
// line integral has a square-root cusp there.
template <class F>
RegionPiece probe_centered_polar(Vec2 x, double r1, double r2,
                                 double probe_radius, double support, F&& eval,
                                 double tol, const QuadratureBudget& budget) {
  RegionPiece out;
  const double rx = norm(x);
  const double theta_x = std::atan2(x.e2, x.e1);

  // Angular panels: a wide cusp-free arc and the narrow arc containing the
  // exclusion window, both graded toward the shared tangency endpoints.
  const double five_sixth = 5.0 * std::numbers::pi / 6.0;
  const double seven_sixth = 7.0 * std::numbers::pi / 6.0;
  const double grading[] = {0.0,       1.0 / 64.0,  1.0 / 16.0, 0.25, 0.5,
                            0.75,      15.0 / 16.0, 63.0 / 64.0, 1.0};
  std::vector<std::pair<double, double>> theta_panels;
  auto add_arc = [&](double t0, double t1) {
    const double w = t1 - t0;
    for (std::size_t i = 0; i + 1 < std::size(grading); ++i) {
      theta_panels.emplace_back(t0 + w * grading[i], t0 + w * grading[i + 1]);
    }
  };
  add_arc(theta_x - five_sixth, theta_x + five_sixth);
  add_arc(theta_x + five_sixth, theta_x + seven_sixth);

  auto line = [&](double theta, int gl_rad) -> Vec2 {
    const Vec2 w = dir(theta);
    const double b = dot(x, w);
    std::vector<std::pair<double, double>> intervals;
    if (probe_radius > 0.0) {
      intervals.emplace_back(0.0, probe_radius);
    } else {
      const double rho_out = -b + std::sqrt(b * b + r2 * r2 - rx * rx);
      const double excl = b * b - (rx * rx - r1 * r1);
      if (r1 > 0.0 && b < 0.0 && excl > 0.0) {
        const double root = std::sqrt(excl);
        intervals.emplace_back(0.0, -b - root);
        intervals.emplace_back(-b + root, rho_out);
      } else {
        intervals.emplace_back(0.0, rho_out);
      }
    }
    Vec2 acc{};
    const detail::GLRule& rule = detail::gl_rule(gl_rad);
    for (const auto& [lo, hi] : intervals) {
      if (!(hi > lo)) continue;
      std::vector<double> extras;
      if (lo == 0.0) {
        const double len = hi - lo;
        for (double frac : {1.0 / 1024, 1.0 / 256, 1.0 / 64, 1.0 / 16, 0.25}) {
          extras.push_back(len * frac);
        }
      }
      if (std::isfinite(support)) {
        const double disc = b * b + support * support - rx * rx;
        if (disc > 0.0) {
          for (double root : {-b - std::sqrt(disc), -b + std::sqrt(disc)}) {
            if (root > lo && root < hi) extras.push_back(root);
          }
        }
      }
      const std::vector<double> panels = detail::radial_panels(lo, hi, extras);
      for (std::size_t p = 0; p + 1 < panels.size(); ++p) {
        const double mid = 0.5 * (panels[p] + panels[p + 1]);
        const double half = 0.5 * (panels[p + 1] - panels[p]);
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
          const double rho = mid + half * rule.x[i];
          acc += (half * rule.w[i] * rho) * eval(x + rho * w);
          ++out.evaluations;
        }
      }
    }
    return acc;
  };

  auto sweep = [&](int gl_theta, int gl_rad) -> Vec2 {
    const detail::GLRule& rule = detail::gl_rule(gl_theta);
    Vec2 acc{};
    for (const auto& [t0, t1] : theta_panels) {
      const double mid = 0.5 * (t0 + t1), half = 0.5 * (t1 - t0);
      for (std::size_t i = 0; i < rule.x.size(); ++i) {
        acc += (half * rule.w[i]) * line(mid + half * rule.x[i], gl_rad);
      }
    }
    return acc;
  };

  const Vec2 level0 = sweep(4, 6);
  const Vec2 level1 = sweep(7, 10);
  double diff = abs_max(level1 - level0);
  out.value = level1;
  if (diff > tol && out.evaluations < budget.max_evals) {
    const Vec2 level2 = sweep(10, 14);
    diff = abs_max(level2 - level1);
    out.value = level2;
  }
  out.error = diff;
  out.converged = diff <= tol;
  return out;
}

struct ProbeContext {
  const ForceSpec& force;
  double a;
  QuadratureBudget budget;
  bool divform;
  double inner_tol;
  double mass_bound;
};

Vec2 kernel_times_density(const ProbeContext& ctx, Vec2 x, Vec2 y,
                          long& evals) {
  if (ctx.divform) {
    const Mat2 F = ctx.force.tensor(y);
    if (abs_max(F) == 0.0) return Vec2{};
    QuadratureBudget inner = ctx.budget;
    inner.abs_tol = ctx.inner_tol;
    auto g = fundamental_solution_gradient(ctx.a, x, y, ctx.inner_tol, inner);
    evals += g.evaluations;
    return -1.0 * contract_force(g.value, F);
  }
  const Vec2 fy = ctx.force.f(y);
  if (fy.e1 == 0.0 && fy.e2 == 0.0) return Vec2{};
  QuadratureBudget inner = ctx.budget;
  inner.abs_tol = ctx.inner_tol;
  auto g = fundamental_solution(ctx.a, x, y, ctx.inner_tol, inner);
  evals += g.evaluations;
  return g.value * fy;
}

double density_abs(const ProbeContext& ctx, Vec2 y) {
  return ctx.divform ? abs_max(ctx.force.tensor(y))
                     : norm(ctx.force.f(y));
}

double moment_density(const ProbeContext& ctx, Vec2 y) {
  if (ctx.divform) {
    const Mat2 F = ctx.force.tensor(y);
    return F.m12 - F.m21;
  }
  return dot(perp(y), ctx.force.f(y));
}

// Whole-plane probe-centered fallback for probes near the origin, where the
// three-region split degenerates. The far tail is bounded through the
// measured exterior kernel envelope shifted to probe coordinates.
RegionPiece integrate_small_probe(const ProbeContext& ctx, Vec2 x, double tol) {
  const double rx = norm(x);
  const DecayClass& d = ctx.force.decay;
  bool capped = false;
  const double reach = detail::choose_truncation(
      d, 0.0, 0.5 * tol, ctx.budget.truncation_radius_cap, capped);
  const double probe_radius = rx + std::max(reach, 1.0);

  long evals = 0;
  auto eval = [&](Vec2 y) { return kernel_times_density(ctx, x, y, evals); };
  RegionPiece piece = probe_centered_polar(x, 0.0, 0.0, probe_radius,
                                           d.support_radius, eval, 0.5 * tol,
                                           ctx.budget);
  piece.evaluations += evals;
  piece.truncated = piece.truncated || capped;

  if (!(compactly_supported(d) && probe_radius >= rx + d.support_radius)) {
    // |kernel| <= c / |y| on |y| >= max(1, 2|x|) and |y| >= rho - |x|; the
    // shifted envelope integrates in closed form.
    const double c = ctx.divform
                         ? kContractFactor * 2.0 * kGradEnvelopeC * d.bound
                         : kMatVecFactor * kExteriorGammaC * (1.0 + rx) * d.bound;
    const double s = d.exponent + 1.0;
    double m_eff = 2.0 * c;  // (1 + |y|)/|y| <= 2 on |y| >= 1
    if (std::isfinite(d.support_radius) &&
        probe_radius - rx >= d.support_radius) {
      m_eff *= d.support_eps;
    }
    const double r0 = probe_radius - rx;
    piece.error += 2.0 * std::numbers::pi * m_eff *
                   std::pow(1.0 + r0, 1.0 - s) / (s - 1.0) * (1.0 + rx + r0) /
                   (1.0 + r0);
  }
  return piece;
}

RegionPiece integrate_disk_region(const ProbeContext& ctx, Vec2 x, double tol,
                                  double reach, double moment_error,
                                  Vec2 leading, bool& used_farfield) {
  RegionPiece out;
  const double rx = norm(x);
  if (!(reach > 0.0)) return out;

  // Weighted force masses feeding the far-field error bound.
  QuadratureBudget loose = ctx.budget;
  loose.abs_tol = std::max(1e-9, 1e-3 * tol);
  loose.rel_tol = 1e-3;
  const Region disk{Region::Kind::disk, 0.0, reach};
  PlaneRuleHints hints;
  if (std::isfinite(ctx.force.decay.support_radius) &&
      ctx.force.decay.support_radius < reach) {
    hints.radial_breakpoints.push_back(ctx.force.decay.support_radius);
  }
  auto mass0 = integrate_region(
      [&](Vec2 y) { return density_abs(ctx, y); }, disk, std::nullopt, loose,
      hints);
  const double wexp = ctx.divform ? 1.0 : 2.0;
  auto massw = integrate_region(
      [&](Vec2 y) { return std::pow(norm(y), wexp) * density_abs(ctx, y); },
      disk, std::nullopt, loose, hints);
  out.evaluations += mass0.evaluations + massw.evaluations;

  double bound;
  if (ctx.divform) {
    bound = kContractFactor * kFarfieldC1 *
            (std::min(1.0 / (std::abs(ctx.a) * rx * rx * rx), 1.0 / rx) *
                 mass0.value +
             massw.value / (rx * rx));
  } else {
    const double min1 = std::min(1.0 / (std::abs(ctx.a) * rx * rx),
                                 1.0 / (std::sqrt(std::abs(ctx.a)) * rx));
    const double min2 = std::min(1.0 / (std::abs(ctx.a) * rx * rx), 1.0);
    bound = kMatVecFactor * kFarfieldC0 *
            ((min1 + min2) * mass0.value + massw.value / (rx * rx));
  }

  if (bound <= tol) {
    // Far-field path: the disk contribution collapses onto the leading
    // kernel, whose integral is exactly the truncated-moment leading term.
    used_farfield = true;
    out.value = leading;
    out.error = bound + moment_error / (4.0 * std::numbers::pi * rx);
    out.converged = true;
    return out;
  }

  long evals = 0;
  auto eval = [&](Vec2 y) { return kernel_times_density(ctx, x, y, evals); };
  QuadratureBudget piece_budget = ctx.budget;
  piece_budget.abs_tol = tol;
  auto res = integrate_region(eval, disk, std::nullopt, piece_budget, hints);
  out.value = res.value;
  out.error = res.error_estimate;
  out.evaluations += res.evaluations + evals;
  out.converged = res.converged;
  return out;
}

RegionPiece integrate_annulus_region(const ProbeContext& ctx, Vec2 x,
                                     double tol) {
  const double rx = norm(x);
  const DecayClass& d = ctx.force.decay;
  if (compactly_supported(d) && d.support_radius <= 0.5 * rx) return {};
  long evals = 0;
  auto eval = [&](Vec2 y) { return kernel_times_density(ctx, x, y, evals); };
  RegionPiece piece =
      probe_centered_polar(x, 0.5 * rx, 2.0 * rx, 0.0, d.support_radius, eval,
                           tol, ctx.budget);
  piece.evaluations += evals;
  return piece;
}

RegionPiece integrate_exterior_region(const ProbeContext& ctx, Vec2 x,
                                      double tol) {
  RegionPiece out;
  const double rx = norm(x);
  const DecayClass& d = ctx.force.decay;
  if (compactly_supported(d) && d.support_radius <= 2.0 * rx) return out;

  const double r1 = 2.0 * rx;
  const double kappa = (1.0 + r1) / r1;
  DecayClass env;
  env.exponent = d.exponent + 1.0;
  env.bound = ctx.divform
                  ? kContractFactor * 2.0 * kGradEnvelopeC * kappa * d.bound
                  : kMatVecFactor * kExteriorGammaC * (1.0 + rx) * kappa *
                        d.bound;
  env.support_radius = d.support_radius;
  env.support_eps = d.support_eps;

  long evals = 0;
  auto eval = [&](Vec2 y) { return kernel_times_density(ctx, x, y, evals); };
  QuadratureBudget piece_budget = ctx.budget;
  piece_budget.abs_tol = tol;
  const Region exterior{Region::Kind::exterior, r1, 0.0};
  auto res = integrate_region(eval, exterior, env, piece_budget);
  out.value = res.value;
  out.error = res.error_estimate;
  out.evaluations = res.evaluations + evals;
  out.converged = res.converged;
  out.truncated = res.truncated;
  return out;
}

ProbeSolution solve_probe_impl(const ForceSpec& force, double a, Vec2 x,
                               const QuadratureBudget& budget, bool divform) {
  if (a == 0.0) {
    throw std::domain_error(
        "the linear solver requires a != 0 (steady planar Stokes flow has no "
        "decaying solution)");
  }
  if (divform && force.kind != ForceSpec::Kind::divergence_form) {
    throw std::invalid_argument("force is not of divergence form");
  }
  if (!divform && force.kind != ForceSpec::Kind::pointwise) {
    throw std::invalid_argument("force is not pointwise");
  }
  const double min_exponent = divform ? 2.0 : 3.0;
  if (!(force.decay.exponent >= min_exponent)) {
    throw std::invalid_argument("declared force decay is too weak");
  }

  ProbeContext ctx{force, a, budget, divform, 0.0, 0.0};
  ctx.mass_bound = envelope_mass_bound(force.decay);
  const double amplification = divform ? kContractFactor : kMatVecFactor;
  ctx.inner_tol = std::max(
      budget.abs_tol / (16.0 * amplification * std::max(1.0, ctx.mass_bound)),
      1e-13);

  ProbeSolution ps;
  ps.x = x;
  const double rx = norm(x);
  const double tol = budget.abs_tol;

  // Truncated moment over |y| < |x|/2 (the disk integral is exact once the
  // reach passes the declared support).
  IntegralResult<double> moment;
  moment.converged = true;
  double disk_reach = 0.5 * rx;
  if (compactly_supported(force.decay)) {
    disk_reach = std::min(disk_reach, force.decay.support_radius);
  }
  if (disk_reach > 0.0) {
    QuadratureBudget mb = budget;
    mb.abs_tol = 0.25 * tol;
    PlaneRuleHints hints;
    if (std::isfinite(force.decay.support_radius) &&
        force.decay.support_radius < disk_reach) {
      hints.radial_breakpoints.push_back(force.decay.support_radius);
    }
    moment = integrate_region([&](Vec2 y) { return moment_density(ctx, y); },
                              Region{Region::Kind::disk, 0.0, disk_reach},
                              std::nullopt, mb, hints);
  }
  ps.moment = moment.value;
  ps.evaluations += moment.evaluations;

  ps.leading = rx > 0.0 ? (ps.moment / (4.0 * std::numbers::pi * rx * rx)) *
                              perp(x)
                        : Vec2{};

  RegionPiece total;
  if (rx < kSplitMinRadius) {
    fold(total, integrate_small_probe(ctx, x, tol));
  } else {
    fold(total, integrate_disk_region(ctx, x, 0.25 * tol, disk_reach,
                                      moment.error_estimate, ps.leading,
                                      ps.used_farfield_path));
    fold(total, integrate_annulus_region(ctx, x, 0.25 * tol));
    fold(total, integrate_exterior_region(ctx, x, 0.25 * tol));
  }

  // Inner kernel evaluations carry at most inner_tol of absolute error
  // each; integrated against the density mass this stays below tol / 16.
  total.error += amplification * ctx.inner_tol * std::max(1.0, ctx.mass_bound);

  ps.remainder = total.value - ps.leading;
  ps.velocity = ps.leading + ps.remainder;
  ps.error_estimate =
      total.error + moment.error_estimate / (4.0 * std::numbers::pi *
                                             std::max(rx, kSplitMinRadius));
  ps.evaluations += total.evaluations;
  ps.converged = total.converged && moment.converged;
  ps.truncated = total.truncated;

  // Pressure through the singular potential of the pointwise density.
  const bool have_density = divform ? static_cast<bool>(force.divergence)
                                    : static_cast<bool>(force.f);
  if (have_density) {
    QuadratureBudget pb = budget;
    auto pres = pressure_pointforce(force, x, pb);
    ps.pressure = pres.value;
    ps.pressure_error = pres.error_estimate;
    ps.pressure_converged = pres.converged;
    ps.pressure_truncated = pres.truncated;
    ps.evaluations += pres.evaluations;
  } else {
    ps.pressure = std::numeric_limits<double>::quiet_NaN();
    ps.pressure_error = std::numeric_limits<double>::infinity();
    ps.pressure_converged = false;
  }
  return ps;
}

LinearSolution solve_linear_impl(const ForceSpec& force, double a,
                                 const std::vector<Vec2>& probes,
                                 const QuadratureBudget& budget, int threads,
                                 bool divform) {
  LinearSolution sol;
  sol.a = a;
  sol.probes.resize(probes.size());
  run_parallel(static_cast<int>(probes.size()), threads, [&](int i) {
    sol.probes[static_cast<std::size_t>(i)] = solve_probe_impl(
        force, a, probes[static_cast<std::size_t>(i)], budget, divform);
  });
  return sol;
}

}  // namespace

ProbeSolution solve_probe_pointforce(const ForceSpec& force, double a, Vec2 x,
                                     const QuadratureBudget& budget) {
  return solve_probe_impl(force, a, x, budget, false);
}

ProbeSolution solve_probe_divform(const ForceSpec& force, double a, Vec2 x,
                                  const QuadratureBudget& budget) {
  return solve_probe_impl(force, a, x, budget, true);
}

LinearSolution solve_linear_pointforce(const ForceSpec& force, double a,
                                       const std::vector<Vec2>& probes,
                                       const QuadratureBudget& budget,
                                       int threads) {
  return solve_linear_impl(force, a, probes, budget, threads, false);
}

LinearSolution solve_linear_divform(const ForceSpec& force, double a,
                                    const std::vector<Vec2>& probes,
                                    const QuadratureBudget& budget,
                                    int threads) {
  return solve_linear_impl(force, a, probes, budget, threads, true);
}

IntegralResult<double> pressure_pointforce(const ForceSpec& force, Vec2 x,
                                           const QuadratureBudget& budget) {
  if (force.kind == ForceSpec::Kind::pointwise) {
    return singular_potential(x, force.f, force.decay, budget);
  }
  if (!force.divergence) {
    throw std::invalid_argument(
        "pressure needs a pointwise density: divergence-form force carries "
        "no analytic divergence");
  }
  return singular_potential(x, force.divergence, force.divergence_decay,
                            budget);
}

Vec2 TestFunction::value(Vec2 x) const {
  const Vec2 d = x - center;
  const double g = -(amplitude / (sigma * sigma)) *
                   std::exp(-norm_sq(d) / (2.0 * sigma * sigma));
  return g * perp(d);
}

Vec2 TestFunction::t_minus_a(Vec2 x, double a) const {
  const Vec2 d = x - center;
  const double u = norm_sq(d);
  const double s2 = sigma * sigma;
  const double g = -(amplitude / s2) * std::exp(-u / (2.0 * s2));
  const double gp = -g / (2.0 * s2);
  const double gpp = g / (4.0 * s2 * s2);
  const Vec2 laplacian = (4.0 * gpp * u + 8.0 * gp) * perp(d);
  // perp(x) . grad phi - perp(phi) = 2 g'(d . perp(x)) perp(d) - g * center
  const Vec2 rotation =
      (2.0 * gp * dot(d, perp(x))) * perp(d) - g * center;
  return -1.0 * laplacian + a * rotation;
}

std::vector<TestFunction> default_test_functions() {
  return {{{0.0, 0.0}, 1.5, 1.0},
          {{2.5, 1.0}, 1.0, 1.0},
          {{-1.5, 2.0}, 2.0, 0.8}};
}

WeakFormResult weak_form_residual(const std::function<Vec2(Vec2)>& u,
                                  const std::function<double(Vec2)>& p,
                                  const std::function<Vec2(Vec2)>& f, double a,
                                  const std::vector<TestFunction>& testfns,
                                  const QuadratureBudget& budget,
                                  double point_tol, int threads) {
  (void)p;  // the built-in test family is divergence free
  WeakFormResult out;
  double max_abs_t = 0.0;
  for (const TestFunction& phi : testfns) {
    struct Node {
      Vec2 y;
      double w;
    };
    auto build_nodes = [&](int gl_n, int n_theta) {
      std::vector<Node> nodes;
      const double fractions[] = {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 9.0};
      const detail::GLRule& rule = detail::gl_rule(gl_n);
      const double dtheta = 2.0 * std::numbers::pi / n_theta;
      for (std::size_t pnl = 0; pnl + 1 < std::size(fractions); ++pnl) {
        const double r0 = fractions[pnl] * phi.sigma;
        const double r1 = fractions[pnl + 1] * phi.sigma;
        const double mid = 0.5 * (r0 + r1), half = 0.5 * (r1 - r0);
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
          const double rho = mid + half * rule.x[i];
          const double wr = half * rule.w[i] * rho * dtheta;
          for (int j = 0; j < n_theta; ++j) {
            nodes.push_back({phi.center + rho * dir(j * dtheta), wr});
          }
        }
      }
      return nodes;
    };

    auto integrate_level = [&](int gl_n, int n_theta, double& abs_t_sum) {
      std::vector<Node> nodes = build_nodes(gl_n, n_theta);
      std::vector<double> contrib(nodes.size());
      std::vector<double> abs_t(nodes.size());
      run_parallel(static_cast<int>(nodes.size()), threads, [&](int i) {
        const auto& nd = nodes[static_cast<std::size_t>(i)];
        const Vec2 t_phi = phi.t_minus_a(nd.y, a);
        const Vec2 phi_val = phi.value(nd.y);
        contrib[static_cast<std::size_t>(i)] =
            nd.w * (dot(u(nd.y), t_phi) - dot(f(nd.y), phi_val));
        abs_t[static_cast<std::size_t>(i)] = nd.w * norm(t_phi);
      });
      double total = 0.0;
      abs_t_sum = 0.0;
      for (std::size_t i = 0; i < contrib.size(); ++i) {
        total += contrib[i];
        abs_t_sum += abs_t[i];
      }
      out.evaluations += static_cast<long>(nodes.size());
      return total;
    };

    double abs_t0 = 0.0, abs_t1 = 0.0;
    const double level0 = integrate_level(6, 32, abs_t0);
    const double level1 = integrate_level(10, 64, abs_t1);
    out.quadrature_error = std::max(out.quadrature_error,
                                    std::abs(level1 - level0));
    out.residuals.push_back(std::abs(level1));
    out.max_residual = std::max(out.max_residual, std::abs(level1));
    max_abs_t = std::max(max_abs_t, abs_t1);
  }
  out.tolerance = 10.0 * (budget.abs_tol + point_tol * max_abs_t);
  return out;
}

}  // namespace rotflow
