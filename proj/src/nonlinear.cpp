/// @file nonlinear.cpp
/// Picard iteration for u = alpha U + w. Substituting u = alpha U + w into
/// the momentum equation and absorbing the pure-gradient term
/// alpha^2 (U . grad) U into the pressure leaves the fixed-point map
///     w  ->  L[ f + alpha Lap U ]  +  L[ -div T(w) ],
///     T(w) = alpha (w ox U + U ox w) + w ox w,
/// where L is the rotating-frame Stokes solution operator. The absolute
/// part is iterate independent and cached; the quadratic part reuses
/// per-ring tables of kernel gradients. Grid nodes on one ring are
/// rotations of a single reference probe and Gamma_a(R x, R y) =
/// R Gamma_a(x, y) R^T, so one reference table serves all angles. The
/// quadrature layout never depends on the iterate, hence discretization
/// error is shared by consecutive sweeps and cancels in their differences.

#include <rotflow/nonlinear.hpp>

#include <rotflow/fundamental.hpp>
#include <rotflow/vortex.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

namespace rotflow {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Far-source kernel envelopes, audited by the test suite:
//   |Gamma_a(x, z)|        <= kGammaFar (1 + |x|) / |z|    for |z| >= 2|x|,
//   |grad_z Gamma_a(x, z)| <= kGradFar (1 + |x|) / |z|^2   for |z| >= 2|x|.
// Measured suprema over a in [-4, 4] and radii up to 900 are 0.16 and 0.37;
// the pinned values keep a factor ~1.6 of headroom.
constexpr double kGammaFar = 0.25;
constexpr double kGradFar = 0.60;

// |U(x)| <= kVortexSup / (1 + |x|) for the unit background vortex
// (measured supremum of (1 + |x|) |U| is 0.191, audited in the tests).
constexpr double kVortexSup = 0.2;

// alpha Lap U is treated as exactly supported in this radius: beyond it
// |Lap U| < 1e-26, far below every node tolerance in use.
constexpr double kLaplacianSupport = 16.0;

// Frozen-envelope margin over the first nonzero iterate norm; covers the
// remaining contraction excursions and interpolation overshoot.
constexpr double kEnvelopeMargin = 2.5;

// Fraction of the per-node error target granted to each table region's
// kernel evaluations, and to the truncation tail.
constexpr double kRegionShare = 0.3;
constexpr double kTailShare = 0.25;

void run_jobs(int jobs, int threads, const std::function<void(int)>& work) {
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

struct KernelNode {
  Vec2 z;
  double weight = 0.0;  // plane measure, angular factor included
  double env = 0.0;     // declared source envelope at |z|
  double tol = 0.0;     // kernel abs_tol for this node's region
  int level = 2;        // 1 = coarse companion rule, 2 = value rule
};

struct RingTable {
  double rho = 0.0;
  double eta = 0.0;  // absolute per-node error target at this ring
  std::vector<KernelNode> nodes;
  std::vector<Mat2> gamma;    // pointforce kernels, aligned with nodes
  std::vector<Grad2> dgamma;  // gradient kernels, aligned with nodes
  std::vector<Vec2> u_ref;    // unit vortex at the reference nodes
  double tail_bound = 0.0;
  double allowance = 0.0;  // sum of weight * kernel error * envelope
  bool truncated = false;
};

double env_at(const DecayClass& env, double rho) {
  return detail::envelope_at(env, rho);
}

// int_a^b s env(s) ds by a fixed 4-point rule; only relative panel masses
// matter, so no refinement is needed.
double panel_mass(const DecayClass& env, double a, double b) {
  const detail::GLRule& rule = detail::gl_rule(4);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double m = 0.0;
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    const double s = mid + half * rule.x[i];
    m += half * rule.w[i] * s * env_at(env, s);
  }
  return m;
}

void merge_knees(std::vector<double>& edges, const std::vector<double>& knees,
                 double lo, double hi) {
  for (double k : knees) {
    if (k > lo * (1.0 + 1e-12) && k < hi * (1.0 - 1e-12)) edges.push_back(k);
  }
  std::sort(edges.begin(), edges.end());
  std::vector<double> out;
  for (double e : edges) {
    if (out.empty() || e - out.back() > 1e-9 * hi) out.push_back(e);
  }
  out.back() = hi;
  edges = std::move(out);
}

// Octaves downward from r_hi (7 of them) plus source knees; first edge 0.
std::vector<double> disk_edges(double r_hi, const std::vector<double>& knees) {
  std::vector<double> edges{0.0};
  for (double v = r_hi / 128.0; v < r_hi * 0.999; v *= 2.0) edges.push_back(v);
  edges.push_back(r_hi);
  merge_knees(edges, knees, 0.0, r_hi);
  return edges;
}

// Octaves upward from r_lo plus source knees.
std::vector<double> exterior_edges(double r_lo, double r_hi,
                                   const std::vector<double>& knees) {
  std::vector<double> edges{r_lo};
  for (double v = r_lo * 2.0; v < r_hi * 0.999; v *= 2.0) edges.push_back(v);
  edges.push_back(r_hi);
  merge_knees(edges, knees, r_lo, r_hi);
  return edges;
}

// Origin-centered polar nodes over the panel edges: the rectangle rule in
// theta (spectrally accurate for periodic integrands) and per-panel
// Gauss-Legendre in the radius, with the order downgraded on panels that
// carry under 2% of the region's source mass.
void add_origin_region(std::vector<KernelNode>& out, const DecayClass& env,
                       const std::vector<double>& edges, int level,
                       int n_theta_full) {
  const int n_theta = level == 2 ? n_theta_full : n_theta_full / 2;
  const int hi = level == 2 ? 9 : 5;
  const int lo = level == 2 ? 5 : 3;
  const double dth = 2.0 * std::numbers::pi / n_theta;
  std::vector<double> mass(edges.size() - 1);
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    mass[p] = panel_mass(env, edges[p], edges[p + 1]);
    total += mass[p];
  }
  if (total <= 0.0) return;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const int order = mass[p] < 0.02 * total ? lo : hi;
    const detail::GLRule& rule = detail::gl_rule(order);
    const double mid = 0.5 * (edges[p] + edges[p + 1]);
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    for (std::size_t g = 0; g < rule.x.size(); ++g) {
      const double s = mid + half * rule.x[g];
      const double ws = half * rule.w[g] * s * dth;
      const double e = env_at(env, s);
      for (int t = 0; t < n_theta; ++t) {
        out.push_back({s * dir(dth * t), ws, e, 0.0, level});
      }
    }
  }
}

// Probe-centered polar nodes covering the part of the annulus
// r_lo <= |z| <= r_hi seen from the reference probe (rho, 0). Each ray is
// cut analytically at its circle crossings; the interval touching the
// probe is graded geometrically toward the kernel singularity.
void add_annulus_region(std::vector<KernelNode>& out, const DecayClass& env,
                        double rho, double r_lo, double r_hi, int level,
                        int n_rays_full) {
  static const double kSingular[] = {0.0,        1.0 / 256.0, 1.0 / 64.0,
                                     1.0 / 16.0, 1.0 / 8.0,   1.0 / 4.0,
                                     1.0 / 2.0,  3.0 / 4.0,   1.0};
  static const double kMild[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  const int n_rays = level == 2 ? n_rays_full : n_rays_full / 2;
  const int order = level == 2 ? 6 : 3;
  const detail::GLRule& rule = detail::gl_rule(order);
  const Vec2 x0{rho, 0.0};
  const double dphi = 2.0 * std::numbers::pi / n_rays;
  for (int q = 0; q < n_rays; ++q) {
    const double phi = dphi * (q + 0.5);
    const Vec2 d = dir(phi);
    const double b = rho * std::cos(phi);
    // Crossings of |x0 + s d| = c solve s^2 + 2 b s + rho^2 - c^2 = 0.
    double entry = 0.0, exit = 0.0;
    if (rho <= r_hi) {
      exit = -b + std::sqrt(std::max(0.0, b * b + r_hi * r_hi - rho * rho));
    } else {
      const double disc = b * b - (rho * rho - r_hi * r_hi);
      if (disc <= 0.0) continue;
      entry = -b - std::sqrt(disc);
      exit = -b + std::sqrt(disc);
      if (exit <= 0.0) continue;
      entry = std::max(entry, 0.0);
    }
    if (exit <= entry) continue;
    // Exclude the inner disk |x0 + s d| < r_lo (rho > r_lo always here).
    std::vector<std::pair<double, double>> intervals;
    const double disc_in = b * b - (rho * rho - r_lo * r_lo);
    double e1 = -1.0, e2 = -1.0;
    if (disc_in > 0.0 && -b - std::sqrt(disc_in) > 0.0) {
      e1 = -b - std::sqrt(disc_in);
      e2 = -b + std::sqrt(disc_in);
    }
    if (e1 > entry && e1 < exit) {
      intervals.emplace_back(entry, e1);
      if (e2 < exit) intervals.emplace_back(e2, exit);
    } else {
      intervals.emplace_back(entry, exit);
    }
    for (const auto& [s0, s1] : intervals) {
      const bool singular = s0 == 0.0;
      const double* frac = singular ? kSingular : kMild;
      const std::size_t nf = singular ? std::size(kSingular) : std::size(kMild);
      const double len = s1 - s0;
      for (std::size_t p = 0; p + 1 < nf; ++p) {
        const double a0 = s0 + len * frac[p], a1 = s0 + len * frac[p + 1];
        const double mid = 0.5 * (a0 + a1), half = 0.5 * (a1 - a0);
        for (std::size_t g = 0; g < rule.x.size(); ++g) {
          const double s = mid + half * rule.x[g];
          const Vec2 z = x0 + s * d;
          const double ws = half * rule.w[g] * s * dphi;
          out.push_back({z, ws, env_at(env, norm(z)), 0.0, level});
        }
      }
    }
  }
}

// Kernel-weighted analytic tail of the table beyond radius R.
double table_tail(const DecayClass& env, double rho, double R, bool divform) {
  const double p = env.exponent;
  if (p <= 1.0) return kInf;
  double t = 2.0 * std::numbers::pi * env.bound * (1.0 + rho) *
             std::pow(1.0 + R, 1.0 - p) / (p - 1.0);
  t *= divform ? kGradFar / R : kGammaFar;
  return t;
}

// Assigns the kernel tolerance of the region whose nodes start at `begin`,
// splitting the ring's error budget by the region's share of the source
// mass; regions the envelope declares empty are dropped outright.
void finish_region(RingTable& t, std::size_t begin) {
  double m = 0.0;
  for (std::size_t q = begin; q < t.nodes.size(); ++q) {
    if (t.nodes[q].level == 2) m += t.nodes[q].weight * t.nodes[q].env;
  }
  if (m <= 0.0) {
    t.nodes.resize(begin);
    return;
  }
  const double eps = std::clamp(kRegionShare * t.eta / m, 1e-9, 1e-3);
  for (std::size_t q = begin; q < t.nodes.size(); ++q) t.nodes[q].tol = eps;
}

RingTable make_ring_skeleton(double rho, const DecayClass& env, double eta,
                             double trunc_cap, bool divform) {
  RingTable t;
  t.rho = rho;
  t.eta = eta;
  const bool compact =
      std::isfinite(env.support_radius) && env.support_eps == 0.0;
  const double s_max = compact ? env.support_radius : kInf;
  std::vector<double> knees{0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  if (compact) knees.push_back(env.support_radius);

  const double d_hi = std::min(rho * 0.5, s_max);
  if (d_hi > 0.0) {
    const std::size_t begin = t.nodes.size();
    const std::vector<double> edges = disk_edges(d_hi, knees);
    add_origin_region(t.nodes, env, edges, 1, 32);
    add_origin_region(t.nodes, env, edges, 2, 32);
    finish_region(t, begin);
  }

  const double a_hi = std::min(2.0 * rho, s_max);
  if (a_hi > rho * 0.5) {
    const std::size_t begin = t.nodes.size();
    add_annulus_region(t.nodes, env, rho, rho * 0.5, a_hi, 1, 32);
    add_annulus_region(t.nodes, env, rho, rho * 0.5, a_hi, 2, 32);
    finish_region(t, begin);
  }

  const double e_lo = 2.0 * rho;
  if (s_max > e_lo) {
    double R = s_max;
    if (!compact) {
      const double cap = std::max(trunc_cap, e_lo);
      R = e_lo;
      while (table_tail(env, rho, R, divform) > kTailShare * eta && R < cap) {
        R = std::min(2.0 * R, cap);
      }
      t.tail_bound = table_tail(env, rho, R, divform);
      if (t.tail_bound > kTailShare * eta) t.truncated = true;
    }
    if (R > e_lo) {
      const std::size_t begin = t.nodes.size();
      const std::vector<double> edges = exterior_edges(e_lo, R, knees);
      add_origin_region(t.nodes, env, edges, 1, 32);
      add_origin_region(t.nodes, env, edges, 2, 32);
      finish_region(t, begin);
    }
  }
  return t;
}

// Evaluates the kernels for every node of every table. Chunked so the work
// parallelizes; values land in preallocated slots and the error allowances
// fold in fixed chunk order, keeping results independent of thread count.
void fill_kernel_tables(std::vector<RingTable>& tables, double a, bool divform,
                        const QuadratureBudget& tmpl, int threads) {
  struct Chunk {
    std::size_t table, begin, end;
  };
  std::vector<Chunk> chunks;
  for (std::size_t ti = 0; ti < tables.size(); ++ti) {
    RingTable& t = tables[ti];
    if (divform) {
      t.dgamma.assign(t.nodes.size(), Grad2{});
      t.u_ref.resize(t.nodes.size());
      for (std::size_t q = 0; q < t.nodes.size(); ++q) {
        t.u_ref[q] = vortex_U(t.nodes[q].z);
      }
    } else {
      t.gamma.assign(t.nodes.size(), Mat2{});
    }
    for (std::size_t b = 0; b < t.nodes.size(); b += 256) {
      chunks.push_back({ti, b, std::min(b + 256, t.nodes.size())});
    }
  }
  std::vector<double> partial(chunks.size(), 0.0);
  std::vector<std::string> failure(chunks.size());
  run_jobs(static_cast<int>(chunks.size()), threads, [&](int c) {
    const Chunk& ch = chunks[static_cast<std::size_t>(c)];
    RingTable& t = tables[ch.table];
    const Vec2 x0{t.rho, 0.0};
    double allow = 0.0;
    for (std::size_t q = ch.begin; q < ch.end; ++q) {
      const KernelNode& nd = t.nodes[q];
      QuadratureBudget kb = tmpl;
      kb.abs_tol = nd.tol;
      double err;
      bool finite;
      if (divform) {
        auto res = fundamental_solution_gradient(a, x0, nd.z, 0.0, kb);
        t.dgamma[q] = res.value;
        err = res.error_estimate;
        finite = std::isfinite(frobenius(res.value.d1)) &&
                 std::isfinite(frobenius(res.value.d2));
      } else {
        auto res = fundamental_solution(a, x0, nd.z, 0.0, kb);
        t.gamma[q] = res.value;
        err = res.error_estimate;
        finite = std::isfinite(frobenius(res.value));
      }
      if (!finite) {
        std::ostringstream os;
        os << "kernel table failure at ring rho = " << t.rho
           << ", source node (" << nd.z.e1 << ", " << nd.z.e2 << ")";
        failure[static_cast<std::size_t>(c)] = os.str();
        return;
      }
      allow += nd.weight * err * nd.env;
    }
    partial[static_cast<std::size_t>(c)] = allow;
  });
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    if (!failure[c].empty()) throw std::runtime_error(failure[c]);
    tables[chunks[c].table].allowance += partial[c];
  }
}

struct ApplyResult {
  std::vector<Vec2> values;
  std::vector<double> errors;
};

// Shared summation skeleton: accumulate both rule levels over a ring's
// nodes, rotate the reference result to each grid angle, and report the
// level discrepancy plus tail and kernel allowance as the node error.
// `term(table, q, R, Rt)` returns the reference-frame contribution of node
// q for the grid angle with rotation R.
template <class Term>
ApplyResult apply_tables(const std::vector<RingTable>& tables,
                         const FieldGrid& grid, const std::vector<Mat2>& rot,
                         const std::vector<Mat2>& rot_t, int threads,
                         const Term& term) {
  const int nt = grid.n_theta;
  ApplyResult out;
  out.values.assign(grid.nodes(), Vec2{});
  out.errors.assign(grid.nodes(), 0.0);
  std::vector<std::string> failure(tables.size());
  run_jobs(static_cast<int>(tables.size()), threads, [&](int i) {
    const RingTable& t = tables[static_cast<std::size_t>(i)];
    std::vector<Vec2> s1(static_cast<std::size_t>(nt));
    std::vector<Vec2> s2(static_cast<std::size_t>(nt));
    for (std::size_t q = 0; q < t.nodes.size(); ++q) {
      const KernelNode& nd = t.nodes[q];
      std::vector<Vec2>& acc = nd.level == 2 ? s2 : s1;
      for (int j = 0; j < nt; ++j) {
        acc[static_cast<std::size_t>(j)] +=
            nd.weight * term(t, q, rot[static_cast<std::size_t>(j)],
                             rot_t[static_cast<std::size_t>(j)]);
      }
    }
    for (int j = 0; j < nt; ++j) {
      const std::size_t idx =
          static_cast<std::size_t>(i) * static_cast<std::size_t>(nt) +
          static_cast<std::size_t>(j);
      const Vec2 v = rot[static_cast<std::size_t>(j)] *
                     s2[static_cast<std::size_t>(j)];
      if (!std::isfinite(v.e1) || !std::isfinite(v.e2)) {
        std::ostringstream os;
        os << "sweep produced a non-finite value at grid node rho = " << t.rho
           << ", theta = " << grid.theta(j);
        failure[static_cast<std::size_t>(i)] = os.str();
        return;
      }
      out.values[idx] = v;
      out.errors[idx] = norm(s2[static_cast<std::size_t>(j)] -
                             s1[static_cast<std::size_t>(j)]) +
                        t.tail_bound + t.allowance;
    }
  });
  for (const std::string& f : failure) {
    if (!f.empty()) throw std::runtime_error(f);
  }
  return out;
}

bool field_is_zero(const IterateField& f) {
  for (const Vec2& v : f.values) {
    if (v.e1 != 0.0 || v.e2 != 0.0) return false;
  }
  return true;
}

double weighted_worst(const FieldGrid& grid, double r,
                      const std::vector<double>& errors) {
  double worst = 0.0;
  for (int i = 0; i < grid.rings(); ++i) {
    const double w = std::pow(1.0 + grid.radii[static_cast<std::size_t>(i)],
                              1.0 + r);
    for (int j = 0; j < grid.n_theta; ++j) {
      worst = std::max(worst,
                       w * errors[static_cast<std::size_t>(i * grid.n_theta +
                                                           j)]);
    }
  }
  return worst;
}

std::vector<double> ring_targets(const FieldGrid& grid, double r,
                                 double node_tol) {
  std::vector<double> eta(grid.radii.size());
  for (std::size_t i = 0; i < grid.radii.size(); ++i) {
    eta[i] = node_tol / std::pow(1.0 + grid.radii[i], 1.0 + r);
  }
  return eta;
}

// Envelope of g = f + alpha Lap U: the force's own class widened by the
// sampled supremum of (1 + rho)^p |alpha Lap U| over the vortex core.
DecayClass absolute_envelope(const ForceSpec& force, double alpha) {
  DecayClass env = force.decay;
  if (alpha == 0.0) return env;
  double extra = 0.0;
  for (int k = 0; k <= 2048; ++k) {
    const double rho = kLaplacianSupport * k / 2048.0;
    const double lap = rho * std::exp(-0.25 * rho * rho) /
                       (8.0 * std::numbers::pi);
    extra = std::max(extra,
                     std::abs(alpha) * lap * std::pow(1.0 + rho, env.exponent));
  }
  env.bound += 1.1 * extra;
  const bool compact =
      std::isfinite(env.support_radius) && env.support_eps == 0.0;
  if (compact) {
    env.support_radius = std::max(env.support_radius, kLaplacianSupport);
  }
  return env;
}

// lambda(f) = sampled sup (1 + |y|)^(3+r) |f| + int |perp(y) . f| dy.
double force_lambda(const ForceSpec& force, double r,
                    const QuadratureBudget& budget) {
  double sup = norm(force.f(Vec2{0.0, 0.0}));
  double top = 64.0;
  if (std::isfinite(force.decay.support_radius)) {
    top = std::max(top, 2.0 * force.decay.support_radius);
  }
  for (int k = 0; k <= 96; ++k) {
    const double rho = 0.01 * std::pow(top / 0.01, k / 96.0);
    for (int t = 0; t < 16; ++t) {
      const Vec2 y = rho * dir(2.0 * std::numbers::pi * (t + 0.37) / 16.0);
      sup = std::max(sup, std::pow(1.0 + rho, 3.0 + r) * norm(force.f(y)));
    }
  }
  DecayClass env = force.decay;
  env.exponent -= 1.0;  // |perp(y) . f| <= bound (1 + |y|)^(1 - p)
  QuadratureBudget mb = budget;
  mb.abs_tol = 1e-7;
  mb.rel_tol = 1e-5;
  auto moment = integrate_plane(
      [&](Vec2 y) { return std::abs(dot(perp(y), force.f(y))); }, env, mb);
  return sup + moment.value;
}

}  // namespace

Vec2 VortexProfile::velocity(Vec2 x) const { return alpha * vortex_U(x); }

Mat2 VortexProfile::velocity_gradient(Vec2 x) const {
  return alpha * grad_U(x);
}

Vec2 VortexProfile::laplacian(Vec2 x) const { return alpha * laplacian_U(x); }

NonContractionError::NonContractionError(const std::string& what,
                                         PicardReport report)
    : std::runtime_error(what), report_(std::move(report)) {}

Vec2 NonlinearSolution::velocity(Vec2 x) const {
  return alpha * vortex_U(x) + w.value(x);
}

Mat2 NonlinearSolution::velocity_gradient(Vec2 x) const {
  return alpha * grad_U(x) + w.gradient(x);
}

IntegralResult<double> compute_alpha(const ForceSpec& force,
                                     const QuadratureBudget& budget) {
  if (force.kind != ForceSpec::Kind::pointwise) {
    throw std::invalid_argument(
        "vortex strength is defined for pointwise forces");
  }
  if (!force.angular_moment_integrable) {
    throw std::domain_error(
        "force declares a non-integrable angular moment; "
        "no vortex strength exists");
  }
  return vortex_strength(force.f, force.decay, budget);
}

struct PicardEngine::Impl {
  ForceSpec force;
  double a = 0.0;
  double r = 0.5;
  FieldGrid grid;
  PicardOptions opts;
  double alpha = 0.0;
  double lambda_f = 0.0;
  DecayClass g_env;
  std::vector<Mat2> rot, rot_t;
  std::vector<double> eta;

  std::vector<RingTable> point_tables;
  std::vector<RingTable> div_tables;
  bool have_point = false;
  bool have_div = false;
  bool have_abs = false;
  IterateField v_abs;
  std::vector<double> abs_errors;
  double env_bw = 0.0;  // frozen weighted envelope for iterates
  double env_bt = 0.0;  // induced tensor envelope bound
  double map_error = 0.0;
  bool truncated = false;

  Impl(const ForceSpec& force_in, double a_in, double r_in,
       const FieldGrid& grid_in, const PicardOptions& opts_in)
      : force(force_in),
        a(a_in),
        r(r_in),
        grid(grid_in),
        opts(opts_in),
        v_abs(IterateField::zero(grid_in, r_in)) {
    if (a == 0.0) {
      throw std::domain_error(
          "a = 0: the planar Stokes system has no decaying fundamental "
          "solution (Stokes paradox), so the solver requires a != 0");
    }
    if (!(r >= 0.0 && r < 1.0)) {
      throw std::invalid_argument("decay rate r must lie in [0, 1)");
    }
    if (grid.rings() < 2 || grid.n_theta < 8 || grid.n_theta % 2 != 0) {
      throw std::invalid_argument("field grid is too coarse for the solver");
    }
    if (force.kind != ForceSpec::Kind::pointwise) {
      throw std::invalid_argument(
          "the Picard solver takes pointwise forces; divergence-form "
          "sources go through solve_field_linear");
    }
    alpha = compute_alpha(force, opts.budget).value;
    lambda_f = force_lambda(force, r, opts.budget);
    g_env = absolute_envelope(force, alpha);
    rot.resize(static_cast<std::size_t>(grid.n_theta));
    rot_t.resize(static_cast<std::size_t>(grid.n_theta));
    for (int j = 0; j < grid.n_theta; ++j) {
      rot[static_cast<std::size_t>(j)] = rotation(grid.theta(j));
      rot_t[static_cast<std::size_t>(j)] =
          transpose(rot[static_cast<std::size_t>(j)]);
    }
    eta = ring_targets(grid, r, opts.node_tol);
  }

  Vec2 g_abs(Vec2 y) const {
    Vec2 g = force.f(y);
    if (alpha != 0.0 && norm_sq(y) <= kLaplacianSupport * kLaplacianSupport) {
      g += alpha * laplacian_U(y);
    }
    return g;
  }

  std::vector<RingTable> build_tables(const DecayClass& env, bool divform) {
    std::vector<RingTable> tables;
    tables.reserve(grid.radii.size());
    for (std::size_t i = 0; i < grid.radii.size(); ++i) {
      tables.push_back(make_ring_skeleton(grid.radii[i], env, eta[i],
                                          opts.budget.truncation_radius_cap,
                                          divform));
      if (tables.back().truncated) truncated = true;
    }
    fill_kernel_tables(tables, a, divform, opts.budget, opts.threads);
    return tables;
  }

  void ensure_point() {
    if (have_point) return;
    point_tables = build_tables(g_env, false);
    have_point = true;
  }

  void ensure_abs() {
    if (have_abs) return;
    ensure_point();
    ApplyResult res = apply_tables(
        point_tables, grid, rot, rot_t, opts.threads,
        [&](const RingTable& t, std::size_t q, const Mat2& R, const Mat2& Rt) {
          return t.gamma[q] * (Rt * g_abs(R * t.nodes[q].z));
        });
    v_abs.values = std::move(res.values);
    v_abs.finalize();
    abs_errors = std::move(res.errors);
    have_abs = true;
  }

  void freeze_envelope(double norm_hint) {
    // Snapped to a power of two so tiny norm jitter cannot change the
    // table layout between otherwise identical runs.
    const double base =
        kEnvelopeMargin * std::max(norm_hint, 16.0 * opts.stop_tol);
    env_bw = std::exp2(std::ceil(std::log2(base)));
    env_bt = 2.0 * kVortexSup * std::abs(alpha) * env_bw + env_bw * env_bw;
  }

  void ensure_div() {
    if (have_div) return;
    DecayClass env;
    env.exponent = 2.0 + r;
    env.bound = env_bt;
    env.support_radius = kInf;
    env.support_eps = 1.0;
    div_tables = build_tables(env, true);
    have_div = true;
  }

  PicardReport base_report() const {
    PicardReport rep;
    rep.a = a;
    rep.r = r;
    rep.alpha = alpha;
    rep.lambda_f = lambda_f;
    rep.envelope_bound = env_bw;
    rep.truncated = truncated;
    return rep;
  }

  IterateField apply_map(const IterateField& w) {
    ensure_abs();
    const bool zero = field_is_zero(w);
    ApplyResult quad;
    if (!zero) {
      const double nw = w.weighted_norm();
      if (env_bw == 0.0) freeze_envelope(nw);
      if (nw > env_bw * (1.0 + 1e-9)) {
        PicardReport rep = base_report();
        rep.norm_history.push_back(nw);
        throw NonContractionError(
            "iterate escaped the frozen kernel envelope", std::move(rep));
      }
      ensure_div();
      quad = apply_tables(
          div_tables, grid, rot, rot_t, opts.threads,
          [&](const RingTable& t, std::size_t q, const Mat2& R,
              const Mat2& Rt) {
            const Vec2 wt = Rt * w.value(R * t.nodes[q].z);
            const Vec2& u = t.u_ref[q];
            const Mat2 tensor = alpha * (outer(wt, u) + outer(u, wt)) +
                                outer(wt, wt);
            return contract_force(t.dgamma[q], tensor);
          });
    }
    IterateField next = IterateField::zero(grid, r);
    std::vector<double> errors = abs_errors;
    for (std::size_t idx = 0; idx < next.values.size(); ++idx) {
      next.values[idx] = v_abs.values[idx];
      if (!zero) {
        next.values[idx] += quad.values[idx];
        errors[idx] += quad.errors[idx];
      }
    }
    next.finalize();
    map_error = weighted_worst(grid, r, errors);
    return next;
  }

  NonlinearSolution run(const IterateField& w0) {
    ensure_abs();
    if (!w0.grid.same_layout(grid)) {
      throw std::invalid_argument(
          "initial iterate lives on a different grid layout");
    }
    PicardReport rep = base_report();
    IterateField prev = w0;
    const double n0 = prev.weighted_norm();
    rep.norm_history.push_back(n0);
    if (n0 > opts.delta) {
      rep.within_ball = false;
      throw NonContractionError(
          "initial iterate lies outside the contraction ball",
          std::move(rep));
    }
    double dlast = 0.0, worst_map = 0.0;
    int growing = 0;
    for (int n = 1; n <= opts.max_iter; ++n) {
      IterateField next = apply_map(prev);
      worst_map = std::max(worst_map, map_error);
      const double d = weighted_diff_norm(next, prev);
      const double nn = next.weighted_norm();
      rep.diff_history.push_back(d);
      rep.norm_history.push_back(nn);
      rep.iterations = n;
      rep.envelope_bound = env_bw;
      rep.truncated = truncated;
      const std::size_t m = rep.diff_history.size();
      if (m >= 2) {
        const double dp = rep.diff_history[m - 2];
        const double ratio = dp > 0.0 ? d / dp : 0.0;
        rep.tau_obs = std::max(rep.tau_obs, ratio);
        growing = ratio > 1.0 ? growing + 1 : 0;
      }
      prev = std::move(next);
      dlast = d;
      rep.within_ball = nn <= opts.delta;
      if (nn > opts.delta) {
        throw NonContractionError("iterate escaped the invariant ball",
                                  std::move(rep));
      }
      if (growing >= 3) {
        throw NonContractionError(
            "sweep differences grew for three consecutive iterations",
            std::move(rep));
      }
      if (d < opts.stop_tol) {
        rep.converged = true;
        break;
      }
    }
    // Residual of the discrete fixed point: the observed contraction rate
    // bounds the remaining tail, never taken better than 1/2.
    const double tau_eff = std::clamp(rep.tau_obs, 0.5, 0.99);
    rep.final_error = worst_map + dlast / (1.0 - tau_eff);
    NonlinearSolution sol;
    sol.a = a;
    sol.r = r;
    sol.alpha = alpha;
    sol.w = std::move(prev);
    sol.report = std::move(rep);
    return sol;
  }
};

PicardEngine::PicardEngine(const ForceSpec& force, double a, double r,
                           const FieldGrid& grid, const PicardOptions& options)
    : impl_(std::make_unique<Impl>(force, a, r, grid, options)) {}

PicardEngine::~PicardEngine() = default;
PicardEngine::PicardEngine(PicardEngine&&) noexcept = default;
PicardEngine& PicardEngine::operator=(PicardEngine&&) noexcept = default;

double PicardEngine::alpha() const { return impl_->alpha; }
double PicardEngine::lambda() const { return impl_->lambda_f; }

const IterateField& PicardEngine::absolute_field() {
  impl_->ensure_abs();
  return impl_->v_abs;
}

IterateField PicardEngine::map(const IterateField& w) {
  return impl_->apply_map(w);
}

double PicardEngine::map_error() const { return impl_->map_error; }
bool PicardEngine::truncated() const { return impl_->truncated; }
double PicardEngine::envelope_bound() const { return impl_->env_bw; }

NonlinearSolution PicardEngine::solve() {
  return impl_->run(IterateField::zero(impl_->grid, impl_->r));
}

NonlinearSolution PicardEngine::solve_from(const IterateField& init) {
  return impl_->run(init);
}

IterateField picard_map(const ForceSpec& force, double a, double r,
                        const IterateField& w, const PicardOptions& options) {
  PicardEngine engine(force, a, r, w.grid, options);
  return engine.map(w);
}

NonlinearSolution solve_nonlinear(const ForceSpec& force, double a, double r,
                                  const PicardOptions& options) {
  return solve_nonlinear(force, a, r, FieldGrid::standard(), options);
}

NonlinearSolution solve_nonlinear(const ForceSpec& force, double a, double r,
                                  const FieldGrid& grid,
                                  const PicardOptions& options) {
  PicardEngine engine(force, a, r, grid, options);
  return engine.solve();
}

IterateField solve_field_linear(const ForceSpec& force, double a, double r,
                                const FieldGrid& grid,
                                const PicardOptions& options,
                                double* field_error) {
  if (a == 0.0) {
    throw std::domain_error(
        "a = 0: the planar Stokes system has no decaying fundamental "
        "solution (Stokes paradox), so the solver requires a != 0");
  }
  if (!(r >= 0.0 && r < 1.0)) {
    throw std::invalid_argument("decay rate r must lie in [0, 1)");
  }
  std::vector<Mat2> rot(static_cast<std::size_t>(grid.n_theta));
  std::vector<Mat2> rot_t(static_cast<std::size_t>(grid.n_theta));
  for (int j = 0; j < grid.n_theta; ++j) {
    rot[static_cast<std::size_t>(j)] = rotation(grid.theta(j));
    rot_t[static_cast<std::size_t>(j)] =
        transpose(rot[static_cast<std::size_t>(j)]);
  }
  const std::vector<double> eta = ring_targets(grid, r, options.node_tol);
  const bool divform = force.kind == ForceSpec::Kind::divergence_form;
  std::vector<RingTable> tables;
  tables.reserve(grid.radii.size());
  for (std::size_t i = 0; i < grid.radii.size(); ++i) {
    tables.push_back(make_ring_skeleton(grid.radii[i], force.decay, eta[i],
                                        options.budget.truncation_radius_cap,
                                        divform));
  }
  fill_kernel_tables(tables, a, divform, options.budget, options.threads);
  ApplyResult res;
  if (divform) {
    res = apply_tables(
        tables, grid, rot, rot_t, options.threads,
        [&](const RingTable& t, std::size_t q, const Mat2& R, const Mat2& Rt) {
          const Mat2 f_loc = Rt * force.tensor(R * t.nodes[q].z) * R;
          return -1.0 * contract_force(t.dgamma[q], f_loc);
        });
  } else {
    res = apply_tables(
        tables, grid, rot, rot_t, options.threads,
        [&](const RingTable& t, std::size_t q, const Mat2& R, const Mat2& Rt) {
          return t.gamma[q] * (Rt * force.f(R * t.nodes[q].z));
        });
  }
  IterateField out = IterateField::zero(grid, r);
  out.values = std::move(res.values);
  out.finalize();
  if (field_error != nullptr) {
    *field_error = weighted_worst(grid, r, res.errors);
  }
  return out;
}

IntegralResult<double> pressure_nonlinear(const ForceSpec& force,
                                          const NonlinearSolution& solution,
                                          Vec2 x,
                                          const QuadratureBudget& budget) {
  if (force.kind != ForceSpec::Kind::pointwise) {
    throw std::invalid_argument(
        "pressure_nonlinear takes the pointwise force of the solved case");
  }
  auto source = [&](Vec2 y) {
    return force.f(y) - solution.velocity_gradient(y) * solution.velocity(y);
  };
  double sup = norm(source(Vec2{0.0, 0.0}));
  for (int k = 0; k <= 72; ++k) {
    const double rho = 0.01 * std::pow(1024.0 / 0.01, k / 72.0);
    for (int t = 0; t < 16; ++t) {
      const Vec2 y = rho * dir(2.0 * std::numbers::pi * (t + 0.41) / 16.0);
      sup = std::max(sup, std::pow(1.0 + rho, 3.0) * norm(source(y)));
    }
  }
  DecayClass env;
  env.exponent = 3.0;
  env.bound = 2.5 * std::max(sup, 1e-300);
  return singular_potential(x, source, env, budget);
}

}  // namespace rotflow
