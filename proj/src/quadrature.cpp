/// @file quadrature.cpp
/// Gauss-Legendre node generation and the non-template plumbing behind the
/// polar rules: panel grading, tail bounds, truncation selection and the
/// envelope spot-check sample set.

#include <rotflow/quadrature.hpp>

#include <algorithm>
#include <array>
#include <map>
#include <mutex>

namespace rotflow::detail {

namespace {

/// Legendre polynomial value and derivative at x by the three-term
/// recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

GLRule make_rule(int n) {
  GLRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev-based initial guess, then Newton iterations.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const auto [p, dp] = legendre(n, x);
    (void)p;
    rule.x[n - 1 - i] = x;
    rule.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

const GLRule& gl_rule(int n) {
  static std::mutex mu;
  static std::map<int, GLRule> cache;
  std::scoped_lock lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
  return it->second;
}

std::vector<double> radial_panels(double r1, double r2,
                                  const std::vector<double>& extra) {
  std::vector<double> pts;
  pts.push_back(r1);
  // Geometric grading: from r1 the next boundary doubles the distance from
  // the origin, starting no finer than 1/2.
  double p = std::max(r1, 0.25);
  while (true) {
    p *= 2.0;
    if (p >= r2 * (1.0 - 1e-12)) break;
    if (p > r1) pts.push_back(p);
  }
  for (double e : extra) {
    if (e > r1 * (1.0 + 1e-12) && e < r2 * (1.0 - 1e-12)) pts.push_back(e);
  }
  pts.push_back(r2);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(b)); }),
            pts.end());
  return pts;
}

double exterior_tail(const DecayClass& d, double radius) {
  const double s = d.exponent;
  double m = d.bound;
  if (radius >= d.support_radius) m *= d.support_eps;
  if (!(s > 2.0)) return std::numeric_limits<double>::infinity();
  const double b = 1.0 + radius;
  return 2.0 * std::numbers::pi * m *
         (std::pow(b, 2.0 - s) / (s - 2.0) - std::pow(b, 1.0 - s) / (s - 1.0));
}

double choose_truncation(const DecayClass& d, double r1, double tol,
                         double cap, bool& capped) {
  capped = false;
  double r = std::max(1.0, r1);
  // Candidate radii: geometric doubling, plus the support radius itself,
  // which is usually the economical stop for effectively compact sources.
  std::vector<double> candidates;
  for (double c = r; c <= cap * (1.0 + 1e-12); c *= 2.0) candidates.push_back(c);
  if (std::isfinite(d.support_radius) && d.support_radius > r1 &&
      d.support_radius <= cap) {
    candidates.push_back(d.support_radius);
    candidates.push_back(std::min(cap, d.support_radius * 1.5));
  }
  if (candidates.empty() || candidates.back() < cap) candidates.push_back(cap);
  std::sort(candidates.begin(), candidates.end());
  for (double c : candidates) {
    if (exterior_tail(d, c) <= tol) return c;
  }
  capped = true;
  return cap;
}

std::vector<Vec2> envelope_samples(double r1, double r2) {
  // Golden-angle spiral between the region bounds; deterministic and
  // angularly scattered.
  std::vector<Vec2> pts;
  const int n = 14;
  const double golden = 2.399963229728653;
  const double lo = std::max(r1, 1e-3), hi = std::max(r2, lo * 1.0001);
  for (int i = 0; i < n; ++i) {
    const double u = (i + 0.5) / n;
    const double rho = lo * std::pow(hi / lo, u);
    pts.push_back(rho * dir(golden * i));
  }
  return pts;
}

}  // namespace rotflow::detail
